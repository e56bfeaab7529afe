#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "ppmine/error.hpp"

namespace ppmine {

// splitmix64, used to derive independent stream seeds from one config seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// mt19937_64 output is fully specified by the standard; the std::
// distributions and std::shuffle are not. Draws are implemented here so
// seeded pipelines produce identical bytes on any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // uniform integer in [0, n), unbiased via rejection
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) fail(ErrorCategory::usage, "Rng::below(0)");
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // uniform double in [0, 1) with 53 random bits
  double unit() { return double(gen_() >> 11) * 0x1.0p-53; }

  // standard normal, Box-Muller
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * unit() - 1.0;
      v = 2.0 * unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// first `sample` entries of a seeded uniform shuffle of 0..population-1
inline std::vector<std::uint32_t> sample_without_replacement(Rng& rng,
                                                             std::uint32_t population,
                                                             std::uint32_t sample) {
  if (sample > population) {
    fail(ErrorCategory::data, "sample size exceeds population size");
  }
  std::vector<std::uint32_t> ids(population);
  for (std::uint32_t i = 0; i < population; ++i) ids[i] = i;
  for (std::uint32_t i = 0; i < sample; ++i) {
    const std::uint64_t j = i + rng.below(population - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(sample);
  return ids;
}

}  // namespace ppmine
