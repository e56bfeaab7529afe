#include "ppmine/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ppmine/error.hpp"
#include "ppmine/format.hpp"

namespace ppmine {

namespace {

constexpr double kDenominatorFloor = 1e-12;

// half the mean cosine of the first min(k, |nn|) neighbors
double half_neighborhood_mean(std::span<const Neighbor> nn, std::uint32_t k) {
  const std::size_t k_eff = std::min<std::size_t>(k, nn.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < k_eff; ++i) sum += nn[i].cosine;
  return sum / (2.0 * double(k_eff));
}

}  // namespace

double xsim(double cos_xy, std::span<const Neighbor> nn_x,
            std::span<const Neighbor> nn_y, const MarginParams& params) {
  if (params.k == 0) fail(ErrorCategory::usage, "xsim: k must be >= 1");
  if (nn_x.empty() || nn_y.empty()) {
    fail(ErrorCategory::data, "xsim: empty neighborhood");
  }
  const double denom =
      half_neighborhood_mean(nn_x, params.k) + half_neighborhood_mean(nn_y, params.k);
  if (denom <= kDenominatorFloor) return -std::numeric_limits<double>::infinity();
  return cos_xy / denom;
}

ScoringResult score_candidates(const EmbeddingStore& src, const EmbeddingStore& tgt,
                               std::uint32_t k, CandidateStrategy strategy,
                               const SearchParams& search) {
  if (k == 0) fail(ErrorCategory::usage, "score_candidates: k must be >= 1");
  if (src.rows() == 0 || tgt.rows() == 0) {
    fail(ErrorCategory::data, "score_candidates: empty embedding store");
  }
  if (src.dim() != tgt.dim()) {
    fail(ErrorCategory::data, "score_candidates: dimension mismatch");
  }

  SearchParams sp = search;
  sp.k = strategy == CandidateStrategy::forward_backward_union ? std::max(k, 16u) : k;
  const NeighborTable fwd = knn_exact(src, tgt, sp);
  const NeighborTable bwd = knn_exact(tgt, src, sp);

  // per-row halved neighborhood means; the first k table entries are the
  // k-neighborhood (tables are sorted, so NN_k is a prefix of NN_K)
  std::vector<double> src_half(src.rows()), tgt_half(tgt.rows());
  for (std::size_t i = 0; i < src.rows(); ++i) {
    src_half[i] = half_neighborhood_mean(fwd.entries[i], k);
  }
  for (std::size_t j = 0; j < tgt.rows(); ++j) {
    tgt_half[j] = half_neighborhood_mean(bwd.entries[j], k);
  }

  std::vector<IdPair> candidates;
  if (strategy == CandidateStrategy::exhaustive) {
    candidates.reserve(src.rows() * tgt.rows());
    for (std::size_t i = 0; i < src.rows(); ++i) {
      for (std::size_t j = 0; j < tgt.rows(); ++j) {
        candidates.emplace_back(SentenceId(i), SentenceId(j));
      }
    }
  } else {
    candidates.reserve((src.rows() + tgt.rows()) * sp.k);
    for (std::size_t i = 0; i < src.rows(); ++i) {
      for (const auto& n : fwd.entries[i]) {
        candidates.emplace_back(SentenceId(i), n.id);
      }
    }
    for (std::size_t j = 0; j < tgt.rows(); ++j) {
      for (const auto& n : bwd.entries[j]) {
        candidates.emplace_back(n.id, SentenceId(j));
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
  }

  ScoringResult result;
  result.pairs.reserve(candidates.size());
  for (const auto& [i, j] : candidates) {
    const double cos_xy = cosine(src.row(i), tgt.row(j));
    const double denom = src_half[i] + tgt_half[j];
    if (denom <= kDenominatorFloor) {
      ++result.degenerate;
      continue;
    }
    result.pairs.push_back({i, j, cos_xy / denom});
  }
  return result;
}

void dump_scored_pairs(std::span<const ScoredPair> pairs, std::ostream& out) {
  for (const auto& p : pairs) {
    out << format_fixed(p.xsim, 6) << '\t' << p.src_id << '\t' << p.tgt_id << '\n';
  }
}

}  // namespace ppmine
