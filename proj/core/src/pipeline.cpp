#include "ppmine/pipeline.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "ppmine/embedding.hpp"
#include "ppmine/error.hpp"
#include "ppmine/format.hpp"

namespace ppmine {

std::vector<ScoredPair> apply_threshold(std::span<const ScoredPair> pairs, double threshold) {
  std::vector<ScoredPair> kept;
  for (const auto& p : pairs) {
    if (p.xsim > threshold) kept.push_back(p);
  }
  return kept;
}

namespace {

// total order used by the greedy matcher and the output sort
bool mining_order(const ScoredPair& a, const ScoredPair& b) {
  if (a.xsim != b.xsim) return a.xsim > b.xsim;
  if (a.src_id != b.src_id) return a.src_id < b.src_id;
  return a.tgt_id < b.tgt_id;
}

bool canonical_order(const ScoredPair& a, const ScoredPair& b) {
  return std::pair{a.src_id, a.tgt_id} < std::pair{b.src_id, b.tgt_id};
}

}  // namespace

std::vector<ScoredPair> dedupe(std::span<const ScoredPair> pairs, Matching matching) {
  std::vector<ScoredPair> out;
  switch (matching) {
    case Matching::many_to_many:
      out.assign(pairs.begin(), pairs.end());
      break;
    case Matching::best_per_source: {
      std::unordered_map<SentenceId, ScoredPair> best;
      for (const auto& p : pairs) {
        auto [it, inserted] = best.try_emplace(p.src_id, p);
        if (!inserted && (p.xsim > it->second.xsim ||
                          (p.xsim == it->second.xsim && p.tgt_id < it->second.tgt_id))) {
          it->second = p;
        }
      }
      out.reserve(best.size());
      for (const auto& [id, p] : best) out.push_back(p);
      break;
    }
    case Matching::one_to_one_greedy: {
      std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
      std::sort(sorted.begin(), sorted.end(), mining_order);
      std::unordered_set<SentenceId> src_used, tgt_used;
      for (const auto& p : sorted) {
        if (src_used.count(p.src_id) || tgt_used.count(p.tgt_id)) continue;
        src_used.insert(p.src_id);
        tgt_used.insert(p.tgt_id);
        out.push_back(p);
      }
      break;
    }
  }
  std::sort(out.begin(), out.end(), canonical_order);
  return out;
}

PseudoParallelCorpus attach_sentences(std::span<const ScoredPair> pairs,
                                      const Corpus& src, const Corpus& tgt) {
  std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(), mining_order);
  PseudoParallelCorpus corpus;
  corpus.pairs.reserve(sorted.size());
  for (const auto& p : sorted) {
    if (p.src_id >= src.size() || p.tgt_id >= tgt.size()) {
      fail(ErrorCategory::data, "mined pair references an id outside its corpus");
    }
    corpus.pairs.push_back({p.xsim, src.sentences[p.src_id], tgt.sentences[p.tgt_id]});
  }
  return corpus;
}

MineResult mine(const MiningConfig& config) {
  if (config.k == 0) fail(ErrorCategory::config, "k must be >= 1");
  if (!config.calibrate && !(config.threshold > 0.0)) {
    fail(ErrorCategory::config, "fixed threshold must be > 0");
  }

  const Corpus src = load_corpus(config.src_corpus_path, config.src_language);
  const Corpus tgt = load_corpus(config.tgt_corpus_path, config.tgt_language);
  const EmbeddingStore src_store = build_store(src, read_embedding_file(config.src_emb_path));
  const EmbeddingStore tgt_store = build_store(tgt, read_embedding_file(config.tgt_emb_path));

  ScoringResult scored =
      score_candidates(src_store, tgt_store, config.k, config.strategy, config.search);

  MineResult result;
  result.degenerate_pairs = scored.degenerate;
  if (config.calibrate) {
    if (config.gold_path.empty()) {
      fail(ErrorCategory::config, "threshold=calibrate requires a gold pair file");
    }
    const GoldPairSet gold = GoldPairSet::load(config.gold_path);
    gold.validate_against(src.size(), tgt.size());
    result.calibration = calibrate_threshold(scored.pairs, gold, config.grid);
    result.threshold = result.calibration->best_threshold;
  } else {
    result.threshold = config.threshold;
  }

  const auto kept = apply_threshold(scored.pairs, result.threshold);
  const auto matched = dedupe(kept, config.matching);
  result.corpus = attach_sentences(matched, src, tgt);
  result.scored = std::move(scored.pairs);
  return result;
}

void write_pseudo_parallel(const PseudoParallelCorpus& corpus, std::ostream& out) {
  for (const auto& p : corpus.pairs) {
    out << format_fixed(p.xsim, 6) << '\t' << p.src << '\t' << p.tgt << '\n';
  }
}

}  // namespace ppmine
