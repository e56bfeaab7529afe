#include "ppmine/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "ppmine/error.hpp"
#include "ppmine/rng.hpp"

namespace ppmine {

bool valid_utf8(std::string_view bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t n = bytes.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char b0 = p[i];
    if (b0 < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    unsigned char lo = 0x80, hi = 0xBF;
    if (b0 >= 0xC2 && b0 <= 0xDF) {
      len = 2;
    } else if (b0 >= 0xE0 && b0 <= 0xEF) {
      len = 3;
      if (b0 == 0xE0) lo = 0xA0;        // overlong
      if (b0 == 0xED) hi = 0x9F;        // surrogates
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
      len = 4;
      if (b0 == 0xF0) lo = 0x90;        // overlong
      if (b0 == 0xF4) hi = 0x8F;        // above U+10FFFF
    } else {
      return false;
    }
    if (i + len > n) return false;
    if (p[i + 1] < lo || p[i + 1] > hi) return false;
    for (std::size_t j = 2; j < len; ++j) {
      if (p[i + j] < 0x80 || p[i + j] > 0xBF) return false;
    }
    i += len;
  }
  return true;
}

Corpus load_corpus(const std::string& path, const std::string& language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open corpus file: " + path);

  Corpus corpus;
  corpus.language = language;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      fail(ErrorCategory::format,
           path + ": empty line " + std::to_string(lineno));
    }
    if (!valid_utf8(line)) {
      fail(ErrorCategory::format,
           path + ": invalid UTF-8 on line " + std::to_string(lineno));
    }
    corpus.sentences.push_back(std::move(line));
  }
  if (in.bad()) fail(ErrorCategory::io, "read failure: " + path);
  return corpus;
}

GoldPairSet GoldPairSet::from_pairs(std::vector<IdPair> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i].first == pairs[i - 1].first) {
      fail(ErrorCategory::data, "gold pairs are not a partial bijection: src id " +
                                    std::to_string(pairs[i].first) + " repeats");
    }
  }
  std::vector<SentenceId> tgts;
  tgts.reserve(pairs.size());
  for (const auto& p : pairs) tgts.push_back(p.second);
  std::sort(tgts.begin(), tgts.end());
  for (std::size_t i = 1; i < tgts.size(); ++i) {
    if (tgts[i] == tgts[i - 1]) {
      fail(ErrorCategory::data, "gold pairs are not a partial bijection: tgt id " +
                                    std::to_string(tgts[i]) + " repeats");
    }
  }
  GoldPairSet set;
  set.pairs_ = std::move(pairs);
  return set;
}

GoldPairSet GoldPairSet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open gold pair file: " + path);
  std::vector<IdPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      fail(ErrorCategory::format,
           path + ": line " + std::to_string(lineno) + ": expected src_id<TAB>tgt_id");
    }
    const auto parse_id = [&](std::string_view field) -> SentenceId {
      if (field.empty()) {
        fail(ErrorCategory::format,
             path + ": line " + std::to_string(lineno) + ": empty id field");
      }
      std::uint64_t v = 0;
      for (char c : field) {
        if (c < '0' || c > '9') {
          fail(ErrorCategory::format,
               path + ": line " + std::to_string(lineno) + ": non-numeric id");
        }
        v = v * 10 + std::uint64_t(c - '0');
        if (v > 0xFFFFFFFFULL) {
          fail(ErrorCategory::format,
               path + ": line " + std::to_string(lineno) + ": id out of range");
        }
      }
      return SentenceId(v);
    };
    const std::string_view sv{line};
    pairs.emplace_back(parse_id(sv.substr(0, tab)), parse_id(sv.substr(tab + 1)));
  }
  if (in.bad()) fail(ErrorCategory::io, "read failure: " + path);
  return from_pairs(std::move(pairs));
}

void GoldPairSet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot open output file: " + path);
  for (const auto& [s, t] : pairs_) {
    out << s << '\t' << t << '\n';
  }
  if (!out.flush()) fail(ErrorCategory::io, "write failure: " + path);
}

bool GoldPairSet::contains(SentenceId src_id, SentenceId tgt_id) const {
  return std::binary_search(pairs_.begin(), pairs_.end(), IdPair{src_id, tgt_id});
}

void GoldPairSet::validate_against(std::size_t src_size, std::size_t tgt_size) const {
  for (const auto& [s, t] : pairs_) {
    if (s >= src_size) {
      fail(ErrorCategory::data,
           "gold src id " + std::to_string(s) + " outside corpus of size " +
               std::to_string(src_size));
    }
    if (t >= tgt_size) {
      fail(ErrorCategory::data,
           "gold tgt id " + std::to_string(t) + " outside corpus of size " +
               std::to_string(tgt_size));
    }
  }
}

namespace {

// one side of the planted task: `sample` random monolingual sentences with
// the gold side inserted at random positions
std::pair<std::vector<std::string>, std::vector<SentenceId>> plant_side(
    const Corpus& mono, const ParallelSet& gold, bool src_side,
    std::size_t sample_size, std::uint64_t sample_seed, std::uint64_t place_seed) {
  Rng sample_rng(sample_seed);
  const auto sampled = sample_without_replacement(
      sample_rng, std::uint32_t(mono.size()), std::uint32_t(sample_size));

  const std::size_t total = sample_size + gold.size();
  Rng place_rng(place_seed);
  const auto gold_pos = sample_without_replacement(
      place_rng, std::uint32_t(total), std::uint32_t(gold.size()));

  std::vector<std::int64_t> slot(total, -1);
  for (std::size_t g = 0; g < gold_pos.size(); ++g) slot[gold_pos[g]] = std::int64_t(g);

  std::vector<std::string> sentences;
  sentences.reserve(total);
  std::size_t next_sampled = 0;
  for (std::size_t i = 0; i < total; ++i) {
    if (slot[i] >= 0) {
      const auto& pair = gold[std::size_t(slot[i])];
      sentences.push_back(src_side ? pair.src : pair.tgt);
    } else {
      sentences.push_back(mono.sentences[sampled[next_sampled++]]);
    }
  }
  std::vector<SentenceId> positions(gold_pos.begin(), gold_pos.end());
  return {std::move(sentences), std::move(positions)};
}

}  // namespace

PlantedTask plant_psm_task(const Corpus& mono_src, const Corpus& mono_tgt,
                           const ParallelSet& gold, std::size_t sample_size,
                           std::uint64_t seed) {
  if (gold.empty()) fail(ErrorCategory::data, "plant_psm_task: empty gold set");
  if (sample_size > mono_src.size() || sample_size > mono_tgt.size()) {
    fail(ErrorCategory::data, "plant_psm_task: sample_size " +
                                  std::to_string(sample_size) +
                                  " exceeds corpus size");
  }
  for (const auto& pair : gold) {
    if (pair.src.empty() || pair.tgt.empty()) {
      fail(ErrorCategory::data, "plant_psm_task: empty sentence in gold pair");
    }
  }

  auto [src_sentences, src_pos] =
      plant_side(mono_src, gold, true, sample_size, derive_seed(seed, 0), derive_seed(seed, 2));
  auto [tgt_sentences, tgt_pos] =
      plant_side(mono_tgt, gold, false, sample_size, derive_seed(seed, 1), derive_seed(seed, 3));

  std::vector<IdPair> id_pairs;
  id_pairs.reserve(gold.size());
  for (std::size_t g = 0; g < gold.size(); ++g) {
    id_pairs.emplace_back(src_pos[g], tgt_pos[g]);
  }

  PlantedTask task;
  task.src.language = mono_src.language;
  task.src.sentences = std::move(src_sentences);
  task.tgt.language = mono_tgt.language;
  task.tgt.sentences = std::move(tgt_sentences);
  task.gold = GoldPairSet::from_pairs(std::move(id_pairs));
  return task;
}

}  // namespace ppmine
