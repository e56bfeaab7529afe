#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppmine/calibration.hpp"
#include "ppmine/scoring.hpp"

namespace ppmine {

enum class Matching {
  many_to_many,       // keep every pair above threshold
  best_per_source,    // each source keeps its max-xsim pair, tie -> smaller tgt id
  one_to_one_greedy,  // descending xsim, keep a pair iff neither id is consumed
};

struct MiningConfig {
  std::string src_corpus_path;
  std::string tgt_corpus_path;
  std::string src_emb_path;
  std::string tgt_emb_path;
  std::string out_path;
  std::string gold_path;  // required when calibrating
  std::string src_language = "src";
  std::string tgt_language = "tgt";

  std::uint32_t k = 4;
  bool calibrate = false;   // pick the threshold on the gold set
  double threshold = 0.0;   // used when calibrate == false; must be > 0
  CandidateStrategy strategy = CandidateStrategy::forward_backward_union;
  Matching matching = Matching::one_to_one_greedy;
  GridSpec grid = GridSpec::observed();
  std::uint64_t seed = 0;
  SearchParams search;
};

// Mined sentence pairs with their scores, sorted by xsim descending.
struct PseudoParallelCorpus {
  struct Entry {
    double xsim;
    std::string src;
    std::string tgt;
  };
  std::vector<Entry> pairs;
};

struct MineResult {
  PseudoParallelCorpus corpus;
  double threshold = 0.0;  // the applied threshold (calibrated or fixed)
  std::optional<CalibrationReport> calibration;
  std::vector<ScoredPair> scored;  // every finite-scored candidate
  std::size_t degenerate_pairs = 0;
};

// pairs with xsim strictly above the threshold
std::vector<ScoredPair> apply_threshold(std::span<const ScoredPair> pairs, double threshold);

std::vector<ScoredPair> dedupe(std::span<const ScoredPair> pairs, Matching matching);

// resolves ids to sentences; output sorted by (xsim desc, src id, tgt id)
PseudoParallelCorpus attach_sentences(std::span<const ScoredPair> pairs,
                                      const Corpus& src, const Corpus& tgt);

// load corpora and embeddings, search, score, threshold, match, sort
MineResult mine(const MiningConfig& config);

// TSV: xsim<TAB>src_sentence<TAB>tgt_sentence, xsim at 6 decimal places
void write_pseudo_parallel(const PseudoParallelCorpus& corpus, std::ostream& out);

}  // namespace ppmine
