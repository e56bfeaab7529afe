#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ppmine/corpus.hpp"

namespace ppmine {

// row-major n x dim float matrix
struct FloatMatrix {
  std::uint32_t dim = 0;
  std::vector<float> data;

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
};

// per-token vectors of one sentence, row-major tokens x dim
struct TokenEmbeddings {
  SentenceId sentence_id = 0;
  std::uint32_t dim = 0;
  std::vector<float> data;

  std::size_t token_count() const { return dim == 0 ? 0 : data.size() / dim; }

  // validates that all token vectors share one dimension
  static TokenEmbeddings from_rows(SentenceId id,
                                   const std::vector<std::vector<float>>& rows);
};

// component-wise mean over token vectors; 64-bit accumulation, f32 result
std::vector<float> mean_pool(const TokenEmbeddings& tokens);

// v / ||v||; rejects near-zero norm (<= 1e-12), naming `sentence_id` when >= 0
std::vector<float> normalize(std::span<const float> v, std::int64_t sentence_id = -1);

// Immutable matrix of unit-normalized sentence vectors, row i = sentence id i.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  // rows must already be unit vectors (norm within 1e-6 of 1)
  EmbeddingStore(std::string language, std::uint32_t dim, std::vector<float> unit_rows);

  // normalizes each raw row
  static EmbeddingStore from_raw(std::string language, const FloatMatrix& raw);

  const std::string& language() const { return language_; }
  std::uint32_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<const float> row(std::size_t id) const {
    return {data_.data() + id * dim_, dim_};
  }
  const std::vector<float>& data() const { return data_; }

 private:
  std::string language_;
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
};

// Embedding file (binary, little-endian): magic "PPEM", u32 version=1,
// u32 n_rows, u32 dim, u8 kind (0 = per-sentence, 1 = per-token with each row
// prefixed by u32 token_count), then f32 payload. Round-trips bit-exactly.
enum class EmbeddingKind : std::uint8_t { per_sentence = 0, per_token = 1 };

struct EmbeddingFile {
  EmbeddingKind kind = EmbeddingKind::per_sentence;
  std::uint32_t dim = 0;
  FloatMatrix sentence_vectors;               // kind == per_sentence
  std::vector<TokenEmbeddings> token_vectors;  // kind == per_token

  std::size_t row_count() const {
    return kind == EmbeddingKind::per_sentence ? sentence_vectors.rows()
                                               : token_vectors.size();
  }
};

EmbeddingFile read_embedding_file(const std::string& path);
void write_embedding_file(const std::string& path, const FloatMatrix& m);
void write_embedding_file(const std::string& path, std::span<const TokenEmbeddings> t);

// pooled (if per-token) then normalized rows in sentence-id order
EmbeddingStore build_store(const Corpus& corpus, const FloatMatrix& per_sentence);
EmbeddingStore build_store(const Corpus& corpus, std::span<const TokenEmbeddings> per_token);
EmbeddingStore build_store(const Corpus& corpus, const EmbeddingFile& file);

// store from file alone, when no corpus is available for the count check
EmbeddingStore load_embedding_store(const std::string& path, const std::string& language);

}  // namespace ppmine
