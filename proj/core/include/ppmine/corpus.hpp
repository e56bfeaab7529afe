#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ppmine {

using SentenceId = std::uint32_t;
using IdPair = std::pair<SentenceId, SentenceId>;

// Monolingual corpus. Sentence ids are dense 0..n-1 in file/line order and
// therefore implicit: id == index into `sentences`.
struct Corpus {
  std::string language;
  std::vector<std::string> sentences;

  std::size_t size() const { return sentences.size(); }
};

struct SentencePair {
  std::string src;
  std::string tgt;
};
using ParallelSet = std::vector<SentencePair>;

// Id pairs across two corpora forming a partial bijection: each src id and
// each tgt id appears at most once.
class GoldPairSet {
 public:
  GoldPairSet() = default;

  // validates the partial bijection
  static GoldPairSet from_pairs(std::vector<IdPair> pairs);

  // TSV, one `src_id<TAB>tgt_id` per line
  static GoldPairSet load(const std::string& path);
  void save(const std::string& path) const;

  bool contains(SentenceId src_id, SentenceId tgt_id) const;
  // every referenced id must exist in its corpus
  void validate_against(std::size_t src_size, std::size_t tgt_size) const;

  const std::vector<IdPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

 private:
  std::vector<IdPair> pairs_;  // sorted by (src, tgt)
};

// UTF-8 text, one sentence per line, LF-terminated. Empty lines and invalid
// UTF-8 are rejected with the offending line number.
Corpus load_corpus(const std::string& path, const std::string& language);

bool valid_utf8(std::string_view bytes);

struct PlantedTask {
  Corpus src;
  Corpus tgt;
  GoldPairSet gold;
};

// PSM task construction: a seeded uniform sample (without replacement) of
// each monolingual corpus with every gold pair planted at seeded-random
// positions. Deterministic for a fixed seed.
PlantedTask plant_psm_task(const Corpus& mono_src, const Corpus& mono_tgt,
                           const ParallelSet& gold, std::size_t sample_size,
                           std::uint64_t seed);

}  // namespace ppmine
