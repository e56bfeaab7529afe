#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ppmine/knn.hpp"

namespace ppmine {

struct MarginParams {
  std::uint32_t k = 4;  // neighborhood size for the denominator
};

struct ScoredPair {
  SentenceId src_id;
  SentenceId tgt_id;
  double xsim;
};

enum class CandidateStrategy {
  // candidates are (x, nn) for nn in NN_K(x) and (nn, y) for nn in NN_K(y),
  // K = max(k, 16), deduplicated
  forward_backward_union,
  // all n x m pairs; preserves the literal all-combinations semantics, used
  // by the oracle tests
  exhaustive,
};

struct ScoringResult {
  std::vector<ScoredPair> pairs;  // sorted by (src_id, tgt_id), all finite
  std::size_t degenerate = 0;     // pairs dropped for a near-zero denominator
};

// Margin (ratio) score of one pair:
//   cos(x,y) / ( sum_{z in NN_k(x)} cos(x,z)/(2k) + sum_{z in NN_k(y)} cos(y,z)/(2k) )
// with k clamped per side to the opposing corpus size (each side contributes
// half its neighborhood mean). Returns -inf when the denominator is <= 1e-12;
// such pairs are excluded downstream. The raw cosine of a sentence to every
// neighbor inflates around "hub" sentences; dividing by the neighborhood
// average suppresses them.
double xsim(double cos_xy, std::span<const Neighbor> nn_x,
            std::span<const Neighbor> nn_y, const MarginParams& params);

// Scores the candidate set of the given strategy. Neighbor tables are
// computed in both directions with knn_exact; the candidate itself is not
// excluded from its own neighborhood.
ScoringResult score_candidates(const EmbeddingStore& src, const EmbeddingStore& tgt,
                               std::uint32_t k, CandidateStrategy strategy,
                               const SearchParams& search = {});

// TSV: xsim<TAB>src_id<TAB>tgt_id, xsim at 6 decimal places
void dump_scored_pairs(std::span<const ScoredPair> pairs, std::ostream& out);

}  // namespace ppmine
