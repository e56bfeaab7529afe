#include "ppmine/knn.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "ppmine/error.hpp"
#include "ppmine/format.hpp"

namespace ppmine {

namespace detail {

// four independent accumulators break the add dependency chain; the exact
// summation order is fixed, so results are reproducible across runs, block
// shapes and thread counts
double dot_f64(const float* a, const float* b, std::size_t d) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    s0 += double(a[i]) * double(b[i]);
    s1 += double(a[i + 1]) * double(b[i + 1]);
    s2 += double(a[i + 2]) * double(b[i + 2]);
    s3 += double(a[i + 3]) * double(b[i + 3]);
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < d; ++i) s += double(a[i]) * double(b[i]);
  return s;
}

}  // namespace detail

double cosine(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    fail(ErrorCategory::data, "cosine: dimension mismatch (" +
                                  std::to_string(x.size()) + " vs " +
                                  std::to_string(y.size()) + ")");
  }
  return detail::dot_f64(x.data(), y.data(), x.size());
}

namespace {

inline bool neighbor_better(const Neighbor& a, const Neighbor& b) {
  return a.cosine > b.cosine || (a.cosine == b.cosine && a.id < b.id);
}

void validate_search(const EmbeddingStore& queries, const EmbeddingStore& index,
                     std::uint32_t k) {
  if (k == 0) fail(ErrorCategory::usage, "knn: k must be >= 1");
  if (index.rows() == 0) fail(ErrorCategory::data, "knn: empty index");
  if (queries.dim() != index.dim()) {
    fail(ErrorCategory::data, "knn: dimension mismatch (" +
                                  std::to_string(queries.dim()) + " vs " +
                                  std::to_string(index.dim()) + ")");
  }
}

}  // namespace

NeighborTable knn_exact(const EmbeddingStore& queries, const EmbeddingStore& index,
                        const SearchParams& params) {
  validate_search(queries, index, params.k);

  const std::size_t kk = std::min<std::size_t>(params.k, index.rows());
  const std::size_t qb = std::max<std::size_t>(1, params.query_block);
  const std::size_t ib = std::max<std::size_t>(1, params.index_block);
  const std::size_t dim = queries.dim();

  NeighborTable table;
  table.k = params.k;
  table.entries.resize(queries.rows());

  const std::size_t n_blocks = (queries.rows() + qb - 1) / qb;

  auto process_block = [&](std::size_t block) {
    const std::size_t q0 = block * qb;
    const std::size_t q1 = std::min(queries.rows(), q0 + qb);
    // bounded min-heaps, worst kept entry on top
    std::vector<std::vector<Neighbor>> heaps(q1 - q0);
    for (auto& h : heaps) h.reserve(kk);
    for (std::size_t i0 = 0; i0 < index.rows(); i0 += ib) {
      const std::size_t i1 = std::min(index.rows(), i0 + ib);
      for (std::size_t q = q0; q < q1; ++q) {
        const float* qrow = queries.row(q).data();
        auto& heap = heaps[q - q0];
        for (std::size_t j = i0; j < i1; ++j) {
          const Neighbor cand{SentenceId(j),
                              detail::dot_f64(qrow, index.row(j).data(), dim)};
          if (heap.size() < kk) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), neighbor_better);
          } else if (neighbor_better(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), neighbor_better);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), neighbor_better);
          }
        }
      }
    }
    for (std::size_t q = q0; q < q1; ++q) {
      auto& h = heaps[q - q0];
      std::sort(h.begin(), h.end(), neighbor_better);
      table.entries[q] = std::move(h);
    }
  };

  const unsigned threads = std::max(1u, params.threads);
  if (threads == 1 || n_blocks <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) process_block(b);
    return table;
  }

  // blocks are independent work units writing disjoint entries; the merged
  // output is deterministic regardless of scheduling
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned n_workers = unsigned(std::min<std::size_t>(threads, n_blocks));
  pool.reserve(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
          process_block(b);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return table;
}

NeighborTable knn_exact(const EmbeddingStore& queries, const EmbeddingStore& index,
                        std::uint32_t k) {
  SearchParams params;
  params.k = k;
  return knn_exact(queries, index, params);
}

NeighborTable knn_oracle(const EmbeddingStore& queries, const EmbeddingStore& index,
                         std::uint32_t k) {
  validate_search(queries, index, k);
  const std::size_t kk = std::min<std::size_t>(k, index.rows());
  const std::size_t dim = queries.dim();

  NeighborTable table;
  table.k = k;
  table.entries.resize(queries.rows());
  std::vector<Neighbor> all(index.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const float* qrow = queries.row(q).data();
    for (std::size_t j = 0; j < index.rows(); ++j) {
      all[j] = {SentenceId(j), detail::dot_f64(qrow, index.row(j).data(), dim)};
    }
    std::sort(all.begin(), all.end(), neighbor_better);
    table.entries[q].assign(all.begin(), all.begin() + std::ptrdiff_t(kk));
  }
  return table;
}

void dump_neighbors(const NeighborTable& table, std::ostream& out) {
  for (std::size_t q = 0; q < table.entries.size(); ++q) {
    for (const auto& n : table.entries[q]) {
      out << q << '\t' << n.id << '\t' << format_sig9(n.cosine) << '\n';
    }
  }
}

}  // namespace ppmine
