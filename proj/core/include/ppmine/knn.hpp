#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ppmine/embedding.hpp"

namespace ppmine {

struct Neighbor {
  SentenceId id;
  double cosine;
};

// Per-query lists of exactly min(k, index_size) neighbors, sorted by cosine
// descending with ties broken by ascending neighbor id.
struct NeighborTable {
  std::uint32_t k = 0;
  std::vector<std::vector<Neighbor>> entries;
};

struct SearchParams {
  std::uint32_t k = 4;
  // tile sizes; a starting point for cache-friendly working sets, tunable
  std::size_t query_block = 4096;
  std::size_t index_block = 8192;
  unsigned threads = 1;
};

namespace detail {
// Single compiled instance shared by knn_exact, knn_oracle and the xsim
// scorer so cosines agree bit-for-bit across all paths.
double dot_f64(const float* a, const float* b, std::size_t d);
}  // namespace detail

// dot product of unit vectors, 64-bit accumulation
double cosine(std::span<const float> x, std::span<const float> y);

// exact top-k cosine search, computed in query x index tiles with a bounded
// per-row heap; identical output to knn_oracle
NeighborTable knn_exact(const EmbeddingStore& queries, const EmbeddingStore& index,
                        const SearchParams& params);
NeighborTable knn_exact(const EmbeddingStore& queries, const EmbeddingStore& index,
                        std::uint32_t k);

// naive full-scan reference used in tests and kernel calibration
NeighborTable knn_oracle(const EmbeddingStore& queries, const EmbeddingStore& index,
                         std::uint32_t k);

// diagnostic TSV: query_id<TAB>neighbor_id<TAB>cosine (9 significant digits)
void dump_neighbors(const NeighborTable& table, std::ostream& out);

}  // namespace ppmine
