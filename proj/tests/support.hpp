#pragma once

// shared fixtures for the ppmine test suites

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ppmine/corpus.hpp"
#include "ppmine/embedding.hpp"
#include "ppmine/rng.hpp"

namespace ppmine::test {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path() /
                ("ppmine_" + tag + "_" + std::to_string(std::rand()));
    std::filesystem::create_directories(base);
    path_ = base;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_text_file(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
}

inline void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Corpus make_corpus(const std::string& language, std::size_t n,
                          const std::string& prefix) {
  Corpus c;
  c.language = language;
  for (std::size_t i = 0; i < n; ++i) {
    c.sentences.push_back(prefix + " " + std::to_string(i));
  }
  return c;
}

// raw rows of gaussian floats; normalization happens in the store builder
inline FloatMatrix random_matrix(std::size_t rows, std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  FloatMatrix m;
  m.dim = dim;
  m.data.resize(rows * dim);
  for (auto& x : m.data) x = float(rng.gaussian());
  return m;
}

// raw rows on an integer grid, so scaling by an integer stays exact in f32
inline FloatMatrix random_int_matrix(std::size_t rows, std::uint32_t dim,
                                     std::uint64_t seed, int lo = -50, int hi = 50) {
  Rng rng(seed);
  FloatMatrix m;
  m.dim = dim;
  m.data.resize(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    bool nonzero = false;
    for (std::uint32_t d = 0; d < dim; ++d) {
      const int v = lo + int(rng.below(std::uint64_t(hi - lo + 1)));
      m.data[r * dim + d] = float(v);
      nonzero |= v != 0;
    }
    if (!nonzero) m.data[r * dim] = 1.0f;
  }
  return m;
}

inline EmbeddingStore random_store(const std::string& language, std::size_t rows,
                                   std::uint32_t dim, std::uint64_t seed) {
  return EmbeddingStore::from_raw(language, random_matrix(rows, dim, seed));
}

inline std::string ppmine_bin() {
  const char* bin = std::getenv("PPMINE_BIN");
  return bin == nullptr ? std::string{} : std::string{bin};
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// runs a shell command, capturing stdout/stderr through temp files
inline RunResult run_command(const std::string& cmd) {
  static int counter = 0;
  TempDir dir("run" + std::to_string(counter++));
  const auto out_path = dir.file("out"), err_path = dir.file("err");
  const int status =
      std::system((cmd + " >" + out_path + " 2>" + err_path).c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  r.out = read_bytes(out_path);
  r.err = read_bytes(err_path);
  return r;
}

}  // namespace ppmine::test
