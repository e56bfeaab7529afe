#include "ppmine/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ppmine/error.hpp"

namespace ppmine {

TokenEmbeddings TokenEmbeddings::from_rows(SentenceId id,
                                           const std::vector<std::vector<float>>& rows) {
  TokenEmbeddings t;
  t.sentence_id = id;
  if (rows.empty()) {
    fail(ErrorCategory::data,
         "sentence " + std::to_string(id) + ": zero token vectors");
  }
  t.dim = std::uint32_t(rows.front().size());
  for (const auto& r : rows) {
    if (r.size() != t.dim) {
      fail(ErrorCategory::data,
           "sentence " + std::to_string(id) + ": token dimension mismatch");
    }
    t.data.insert(t.data.end(), r.begin(), r.end());
  }
  return t;
}

std::vector<float> mean_pool(const TokenEmbeddings& tokens) {
  if (tokens.dim == 0 || tokens.data.empty()) {
    fail(ErrorCategory::data,
         "sentence " + std::to_string(tokens.sentence_id) + ": zero token vectors");
  }
  if (tokens.data.size() % tokens.dim != 0) {
    fail(ErrorCategory::data,
         "sentence " + std::to_string(tokens.sentence_id) + ": token dimension mismatch");
  }
  const std::size_t n = tokens.token_count();
  std::vector<double> acc(tokens.dim, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const float* row = tokens.data.data() + t * tokens.dim;
    for (std::uint32_t d = 0; d < tokens.dim; ++d) acc[d] += double(row[d]);
  }
  std::vector<float> out(tokens.dim);
  for (std::uint32_t d = 0; d < tokens.dim; ++d) {
    out[d] = float(acc[d] / double(n));
  }
  return out;
}

std::vector<float> normalize(std::span<const float> v, std::int64_t sentence_id) {
  double sq = 0.0;
  for (float x : v) sq += double(x) * double(x);
  const double norm = std::sqrt(sq);
  if (!(norm > 1e-12)) {
    std::string msg = "near-zero embedding norm";
    if (sentence_id >= 0) msg += " for sentence id " + std::to_string(sentence_id);
    fail(ErrorCategory::data, msg);
  }
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = float(double(v[i]) / norm);
  return out;
}

EmbeddingStore::EmbeddingStore(std::string language, std::uint32_t dim,
                               std::vector<float> unit_rows)
    : language_(std::move(language)), dim_(dim), data_(std::move(unit_rows)) {
  if (dim_ == 0) fail(ErrorCategory::data, "embedding store: dim must be >= 1");
  if (data_.size() % dim_ != 0) {
    fail(ErrorCategory::data, "embedding store: data size not a multiple of dim");
  }
  for (std::size_t r = 0; r < rows(); ++r) {
    double sq = 0.0;
    for (float x : row(r)) sq += double(x) * double(x);
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
      fail(ErrorCategory::data,
           "embedding store: row " + std::to_string(r) + " is not unit-normalized");
    }
  }
}

EmbeddingStore EmbeddingStore::from_raw(std::string language, const FloatMatrix& raw) {
  if (raw.dim == 0) fail(ErrorCategory::data, "embedding store: dim must be >= 1");
  std::vector<float> rows;
  rows.reserve(raw.data.size());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto unit = normalize(raw.row(r), std::int64_t(r));
    rows.insert(rows.end(), unit.begin(), unit.end());
  }
  return EmbeddingStore(std::move(language), raw.dim, std::move(rows));
}

namespace {

constexpr char kMagic[4] = {'P', 'P', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) fail(ErrorCategory::io, "cannot open output file: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), std::streamsize(n));
  }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    bytes(b, 4);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void f32_array(const float* p, std::size_t n) {
    // chunked little-endian encode, bit pattern preserved
    unsigned char buf[4096];
    std::size_t i = 0;
    while (i < n) {
      std::size_t m = std::min<std::size_t>(n - i, sizeof(buf) / 4);
      for (std::size_t j = 0; j < m; ++j) {
        const auto bits = std::bit_cast<std::uint32_t>(p[i + j]);
        buf[4 * j + 0] = static_cast<unsigned char>(bits & 0xFF);
        buf[4 * j + 1] = static_cast<unsigned char>((bits >> 8) & 0xFF);
        buf[4 * j + 2] = static_cast<unsigned char>((bits >> 16) & 0xFF);
        buf[4 * j + 3] = static_cast<unsigned char>((bits >> 24) & 0xFF);
      }
      bytes(buf, 4 * m);
      i += m;
    }
  }
  void close() {
    out_.flush();
    if (!out_) fail(ErrorCategory::io, "write failure: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorCategory::io, "cannot open embedding file: " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), std::streamsize(n));
    if (std::size_t(in_.gcount()) != n) {
      fail(ErrorCategory::format, path_ + ": truncated embedding file");
    }
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
  }
  std::uint8_t u8() {
    unsigned char b;
    bytes(&b, 1);
    return b;
  }
  void f32_array(float* p, std::size_t n) {
    unsigned char buf[4096];
    std::size_t i = 0;
    while (i < n) {
      std::size_t m = std::min<std::size_t>(n - i, sizeof(buf) / 4);
      bytes(buf, 4 * m);
      for (std::size_t j = 0; j < m; ++j) {
        const std::uint32_t bits = std::uint32_t(buf[4 * j + 0]) |
                                   (std::uint32_t(buf[4 * j + 1]) << 8) |
                                   (std::uint32_t(buf[4 * j + 2]) << 16) |
                                   (std::uint32_t(buf[4 * j + 3]) << 24);
        p[i + j] = std::bit_cast<float>(bits);
      }
      i += m;
    }
  }
  bool at_eof() {
    return in_.peek() == std::ifstream::traits_type::eof();
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

void write_header(BinWriter& w, std::uint32_t n_rows, std::uint32_t dim,
                  EmbeddingKind kind) {
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(n_rows);
  w.u32(dim);
  w.u8(std::uint8_t(kind));
}

}  // namespace

void write_embedding_file(const std::string& path, const FloatMatrix& m) {
  if (m.dim == 0) fail(ErrorCategory::data, "embedding file: dim must be >= 1");
  BinWriter w(path);
  write_header(w, std::uint32_t(m.rows()), m.dim, EmbeddingKind::per_sentence);
  w.f32_array(m.data.data(), m.data.size());
  w.close();
}

void write_embedding_file(const std::string& path, std::span<const TokenEmbeddings> t) {
  std::uint32_t dim = t.empty() ? 1 : t.front().dim;
  for (const auto& s : t) {
    if (s.dim != dim) fail(ErrorCategory::data, "embedding file: inconsistent dim");
    if (s.token_count() == 0) {
      fail(ErrorCategory::data, "embedding file: sentence " +
                                    std::to_string(s.sentence_id) + " has zero tokens");
    }
  }
  BinWriter w(path);
  write_header(w, std::uint32_t(t.size()), dim, EmbeddingKind::per_token);
  for (const auto& s : t) {
    w.u32(std::uint32_t(s.token_count()));
    w.f32_array(s.data.data(), s.data.size());
  }
  w.close();
}

EmbeddingFile read_embedding_file(const std::string& path) {
  BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCategory::format, path + ": not a PPEM embedding file");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    fail(ErrorCategory::format,
         path + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t n_rows = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint8_t kind = r.u8();
  if (dim == 0) fail(ErrorCategory::format, path + ": dim must be >= 1");

  EmbeddingFile file;
  file.dim = dim;
  if (kind == std::uint8_t(EmbeddingKind::per_sentence)) {
    file.kind = EmbeddingKind::per_sentence;
    file.sentence_vectors.dim = dim;
    file.sentence_vectors.data.resize(std::size_t(n_rows) * dim);
    r.f32_array(file.sentence_vectors.data.data(), file.sentence_vectors.data.size());
  } else if (kind == std::uint8_t(EmbeddingKind::per_token)) {
    file.kind = EmbeddingKind::per_token;
    file.token_vectors.reserve(n_rows);
    for (std::uint32_t i = 0; i < n_rows; ++i) {
      const std::uint32_t tokens = r.u32();
      if (tokens == 0) {
        fail(ErrorCategory::format,
             path + ": sentence " + std::to_string(i) + " has zero tokens");
      }
      TokenEmbeddings t;
      t.sentence_id = i;
      t.dim = dim;
      t.data.resize(std::size_t(tokens) * dim);
      r.f32_array(t.data.data(), t.data.size());
      file.token_vectors.push_back(std::move(t));
    }
  } else {
    fail(ErrorCategory::format,
         path + ": unknown embedding kind " + std::to_string(kind));
  }
  if (!r.at_eof()) {
    fail(ErrorCategory::format, path + ": trailing bytes after payload");
  }
  return file;
}

namespace {

FloatMatrix pool_all(std::span<const TokenEmbeddings> per_token) {
  FloatMatrix pooled;
  pooled.dim = per_token.empty() ? 0 : per_token.front().dim;
  for (const auto& t : per_token) {
    if (t.dim != pooled.dim) {
      fail(ErrorCategory::data,
           "sentence " + std::to_string(t.sentence_id) + ": token dimension mismatch");
    }
    const auto v = mean_pool(t);
    pooled.data.insert(pooled.data.end(), v.begin(), v.end());
  }
  return pooled;
}

}  // namespace

EmbeddingStore build_store(const Corpus& corpus, const FloatMatrix& per_sentence) {
  if (per_sentence.rows() != corpus.size()) {
    fail(ErrorCategory::data, "embedding count " + std::to_string(per_sentence.rows()) +
                                  " does not match corpus size " +
                                  std::to_string(corpus.size()));
  }
  return EmbeddingStore::from_raw(corpus.language, per_sentence);
}

EmbeddingStore build_store(const Corpus& corpus, std::span<const TokenEmbeddings> per_token) {
  if (per_token.size() != corpus.size()) {
    fail(ErrorCategory::data, "embedding count " + std::to_string(per_token.size()) +
                                  " does not match corpus size " +
                                  std::to_string(corpus.size()));
  }
  return EmbeddingStore::from_raw(corpus.language, pool_all(per_token));
}

EmbeddingStore build_store(const Corpus& corpus, const EmbeddingFile& file) {
  if (file.kind == EmbeddingKind::per_sentence) {
    return build_store(corpus, file.sentence_vectors);
  }
  return build_store(corpus, std::span<const TokenEmbeddings>(file.token_vectors));
}

EmbeddingStore load_embedding_store(const std::string& path, const std::string& language) {
  const EmbeddingFile file = read_embedding_file(path);
  if (file.kind == EmbeddingKind::per_sentence) {
    return EmbeddingStore::from_raw(language, file.sentence_vectors);
  }
  return EmbeddingStore::from_raw(language, pool_all(file.token_vectors));
}

}  // namespace ppmine
