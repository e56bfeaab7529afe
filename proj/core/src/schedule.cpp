#include "ppmine/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "ppmine/error.hpp"
#include "ppmine/format.hpp"
#include "ppmine/rng.hpp"

namespace ppmine {

namespace {

using int128 = __int128;

long long gcd_ll(long long a, long long b) {
  while (b != 0) {
    const long long t = a % b;
    a = b;
    b = t;
  }
  return a < 0 ? -a : a;
}

long long narrow(int128 v, const char* what) {
  if (v > int128(0x7FFFFFFFFFFFFFFFLL) || v < -int128(0x7FFFFFFFFFFFFFFFLL)) {
    fail(ErrorCategory::data, std::string("count overflow in ") + what);
  }
  return (long long)(v);
}

}  // namespace

Fraction::Fraction(long long num, long long den) : num_(num), den_(den) {
  if (den_ == 0) fail(ErrorCategory::usage, "Fraction: zero denominator");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  reduce();
}

void Fraction::reduce() {
  if (num_ == 0) {
    den_ = 1;
    return;
  }
  const long long g = gcd_ll(num_, den_);
  num_ /= g;
  den_ /= g;
}

Fraction& Fraction::operator+=(const Fraction& o) {
  const int128 num = int128(num_) * o.den_ + int128(o.num_) * den_;
  const int128 den = int128(den_) * o.den_;
  // reduce in 128 bits before narrowing
  int128 a = num < 0 ? -num : num;
  int128 b = den;
  while (b != 0) {
    const int128 t = a % b;
    a = b;
    b = t;
  }
  const int128 g = a == 0 ? 1 : a;
  num_ = narrow(num / g, "Fraction::operator+=");
  den_ = narrow(den / g, "Fraction::operator+=");
  return *this;
}

bool operator<(const Fraction& a, const Fraction& b) {
  return int128(a.num_) * b.den_ < int128(b.num_) * a.den_;
}

std::vector<std::string> split_tokens(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && (sentence[i] == ' ' || sentence[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < sentence.size() && sentence[j] != ' ' && sentence[j] != '\t') ++j;
    if (j > i) tokens.emplace_back(sentence.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

void ToyTranslator::add_count(Direction d, const std::string& from,
                              const std::string& to, const Fraction& mass) {
  CountTable& table = d == Direction::src_to_tgt ? fwd_ : bwd_;
  table[from][to] += mass;
  if (d == Direction::src_to_tgt) {
    src_vocab_.insert(from);
    tgt_vocab_.insert(to);
  } else {
    tgt_vocab_.insert(from);
    src_vocab_.insert(to);
  }
}

std::string ToyTranslator::decode_token(Direction d, const std::string& token) const {
  const CountTable& table = d == Direction::src_to_tgt ? fwd_ : bwd_;
  const auto row = table.find(token);
  if (row == table.end()) return kUnknownToken;
  const std::string* best = nullptr;
  const Fraction* best_count = nullptr;
  // rows iterate in token order, so keeping strict maxima lands on the
  // lexicographically smallest among ties
  for (const auto& [to, count] : row->second) {
    if (!count.positive()) continue;
    if (best == nullptr || *best_count < count) {
      best = &to;
      best_count = &count;
    }
  }
  return best == nullptr ? kUnknownToken : *best;
}

std::vector<std::string> ToyTranslator::decode_tokens(
    Direction d, std::span<const std::string> tokens) const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(decode_token(d, t));
  return out;
}

std::string ToyTranslator::translate(Direction d, const std::string& sentence) const {
  return join_tokens(decode_tokens(d, split_tokens(sentence)));
}

namespace {

// positional alignment for equal lengths, else cross product at 1/len(to)
void count_pair(ToyTranslator& model, Direction d, const std::vector<std::string>& from,
                const std::vector<std::string>& to) {
  if (from.size() == to.size()) {
    const Fraction one(1, 1);
    for (std::size_t i = 0; i < from.size(); ++i) {
      model.add_count(d, from[i], to[i], one);
    }
  } else {
    const Fraction mass(1, (long long)(to.size()));
    for (const auto& e : from) {
      for (const auto& f : to) {
        model.add_count(d, e, f, mass);
      }
    }
  }
}

}  // namespace

void pp_step(ToyTranslator& model, std::span<const SentencePair> batch) {
  if (batch.empty()) fail(ErrorCategory::data, "pp_step: empty batch");
  for (const auto& pair : batch) {
    const auto x = split_tokens(pair.src);
    const auto y = split_tokens(pair.tgt);
    if (x.empty() || y.empty()) {
      fail(ErrorCategory::data, "pp_step: empty sentence in pseudo-parallel pair");
    }
    count_pair(model, Direction::src_to_tgt, x, y);
    count_pair(model, Direction::tgt_to_src, y, x);
  }
}

void ibt_step(ToyTranslator& model, std::span<const std::string> mono_batch,
              Direction update_direction) {
  if (mono_batch.empty()) fail(ErrorCategory::data, "ibt_step: empty batch");
  const Direction inference = opposite(update_direction);
  // inference pass over the whole batch first, then the count updates
  std::vector<std::vector<std::string>> originals, synthetic;
  originals.reserve(mono_batch.size());
  synthetic.reserve(mono_batch.size());
  for (const auto& sentence : mono_batch) {
    auto x = split_tokens(sentence);
    if (x.empty()) fail(ErrorCategory::data, "ibt_step: empty sentence in mono batch");
    synthetic.push_back(model.decode_tokens(inference, x));
    originals.push_back(std::move(x));
  }
  const Fraction one(1, 1);
  for (std::size_t s = 0; s < originals.size(); ++s) {
    // word-for-word decoding preserves length, so alignment is positional
    for (std::size_t i = 0; i < originals[s].size(); ++i) {
      if (synthetic[s][i] == ToyTranslator::kUnknownToken) continue;
      model.add_count(update_direction, synthetic[s][i], originals[s][i], one);
    }
  }
}

double toy_bleu(std::span<const std::string> hypotheses,
                std::span<const std::string> references) {
  if (hypotheses.size() != references.size()) {
    fail(ErrorCategory::data, "toy_bleu: hypothesis/reference count mismatch");
  }
  if (hypotheses.empty()) fail(ErrorCategory::data, "toy_bleu: empty evaluation set");

  constexpr int kMaxOrder = 4;
  std::size_t matches[kMaxOrder] = {0, 0, 0, 0};
  std::size_t totals[kMaxOrder] = {0, 0, 0, 0};
  std::size_t hyp_len = 0, ref_len = 0;

  const auto ngram_counts = [](const std::vector<std::string>& tokens, int order) {
    std::unordered_map<std::string, std::size_t> counts;
    if (tokens.size() < std::size_t(order)) return counts;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (int j = 1; j < order; ++j) {
        key += '\x1f';
        key += tokens[i + j];
      }
      ++counts[key];
    }
    return counts;
  };

  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto hyp = split_tokens(hypotheses[s]);
    const auto ref = split_tokens(references[s]);
    if (ref.empty()) fail(ErrorCategory::data, "toy_bleu: empty reference sentence");
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int order = 1; order <= kMaxOrder; ++order) {
      const auto hyp_counts = ngram_counts(hyp, order);
      const auto ref_counts = ngram_counts(ref, order);
      for (const auto& [gram, count] : hyp_counts) {
        totals[order - 1] += count;
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
          matches[order - 1] += std::min(count, it->second);
        }
      }
    }
  }

  double log_precision_sum = 0.0;
  for (int order = 0; order < kMaxOrder; ++order) {
    if (matches[order] == 0) return 0.0;  // no smoothing
    log_precision_sum +=
        std::log(double(matches[order]) / double(totals[order]));
  }
  const double brevity = hyp_len >= ref_len
                             ? 1.0
                             : std::exp(1.0 - double(ref_len) / double(hyp_len));
  return 100.0 * brevity * std::exp(log_precision_sum / kMaxOrder);
}

SwitchCriterion SwitchCriterion::at_step(std::uint64_t s) {
  SwitchCriterion c;
  c.kind = Kind::fixed_step;
  c.step = s;
  return c;
}

SwitchCriterion SwitchCriterion::on_plateau(std::uint32_t patience, double min_delta) {
  SwitchCriterion c;
  c.kind = Kind::plateau;
  c.patience = patience;
  c.min_delta = min_delta;
  return c;
}

const char* to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::ibt: return "IBT";
    case ScheduleMode::pseudo_par: return "PseudoPar";
    case ScheduleMode::ibt_pseudo_par: return "IBT+PseudoPar";
    case ScheduleMode::ibt_pseudo_par_then_ibt: return "IBT+PseudoPar->IBT";
  }
  return "unknown";
}

namespace {

// seeded shuffled epochs; a draw may span an epoch boundary
template <typename T>
class BatchStream {
 public:
  BatchStream(const std::vector<T>& items, std::uint64_t seed)
      : items_(&items), rng_(seed) {
    order_.resize(items.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = std::uint32_t(i);
    rng_.shuffle(order_);
  }

  std::vector<T> draw(std::size_t n) {
    std::vector<T> batch;
    batch.reserve(n);
    while (batch.size() < n) {
      if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
      }
      batch.push_back((*items_)[order_[cursor_++]]);
    }
    return batch;
  }

 private:
  const std::vector<T>* items_;
  Rng rng_;
  std::vector<std::uint32_t> order_;
  std::size_t cursor_ = 0;
};

bool mode_uses_ibt(ScheduleMode m) { return m != ScheduleMode::pseudo_par; }
bool mode_uses_pp(ScheduleMode m) { return m != ScheduleMode::ibt; }

const char* phase_label(ScheduleMode mode, bool switched) {
  if (mode == ScheduleMode::ibt) return "IBT";
  if (mode == ScheduleMode::pseudo_par) return "PseudoPar";
  if (mode == ScheduleMode::ibt_pseudo_par) return "IBT+PseudoPar";
  return switched ? "IBT" : "IBT+PseudoPar";
}

}  // namespace

TrainTrace run_schedule(const SchedulePlan& plan, const Corpus& mono_src,
                        const Corpus& mono_tgt, const PseudoParallelCorpus& pp,
                        const ParallelSet& valid, std::uint64_t seed) {
  if (plan.batch_size == 0) fail(ErrorCategory::config, "batch_size must be >= 1");
  if (plan.max_steps == 0) fail(ErrorCategory::config, "max_steps must be >= 1");
  if (plan.eval_every == 0) fail(ErrorCategory::config, "eval_every must be >= 1");
  if (valid.empty()) fail(ErrorCategory::data, "run_schedule: empty validation set");
  if (mode_uses_ibt(plan.mode) && (mono_src.size() == 0 || mono_tgt.size() == 0)) {
    fail(ErrorCategory::data, "run_schedule: empty monolingual corpus");
  }
  if (mode_uses_pp(plan.mode) && pp.pairs.empty()) {
    fail(ErrorCategory::data, "run_schedule: empty pseudo-parallel corpus in a "
                              "mode that draws from it");
  }
  const bool switching = plan.mode == ScheduleMode::ibt_pseudo_par_then_ibt;
  if (switching) {
    if (plan.switch_criterion.kind == SwitchCriterion::Kind::none) {
      fail(ErrorCategory::config, "IBT+PseudoPar->IBT requires a switch criterion");
    }
    if (plan.switch_criterion.kind == SwitchCriterion::Kind::fixed_step &&
        plan.switch_criterion.step >= plan.max_steps) {
      fail(ErrorCategory::config, "fixed switch step must lie before max_steps");
    }
  }

  std::vector<std::string> valid_src, valid_tgt;
  valid_src.reserve(valid.size());
  valid_tgt.reserve(valid.size());
  for (const auto& p : valid) {
    valid_src.push_back(p.src);
    valid_tgt.push_back(p.tgt);
  }

  std::vector<SentencePair> pp_pairs;
  pp_pairs.reserve(pp.pairs.size());
  for (const auto& e : pp.pairs) pp_pairs.push_back({e.src, e.tgt});

  // independent stream seeds: the pp stream consumes no randomness from the
  // mono streams, which makes the IBT reduction exact
  BatchStream<std::string> src_stream(mono_src.sentences, derive_seed(seed, 1));
  BatchStream<std::string> tgt_stream(mono_tgt.sentences, derive_seed(seed, 2));
  BatchStream<SentencePair> pp_stream(pp_pairs, derive_seed(seed, 3));

  ToyTranslator model;
  TrainTrace trace;
  bool switched = false;

  const auto evaluate = [&](std::uint64_t step) {
    std::vector<std::string> hyp_fwd, hyp_bwd;
    hyp_fwd.reserve(valid_src.size());
    hyp_bwd.reserve(valid_tgt.size());
    for (const auto& s : valid_src) hyp_fwd.push_back(model.translate(Direction::src_to_tgt, s));
    for (const auto& t : valid_tgt) hyp_bwd.push_back(model.translate(Direction::tgt_to_src, t));
    trace.records.push_back({step, phase_label(plan.mode, switched),
                             toy_bleu(hyp_fwd, valid_tgt),
                             toy_bleu(hyp_bwd, valid_src)});
  };

  double plateau_best = -1.0;
  std::uint32_t plateau_stall = 0;
  const auto plateau_check = [&]() {
    const double bleu = trace.records.back().bleu_fwd;
    if (bleu > plateau_best + plan.switch_criterion.min_delta) {
      plateau_best = bleu;
      plateau_stall = 0;
      return false;
    }
    return ++plateau_stall >= plan.switch_criterion.patience;
  };

  evaluate(0);
  if (switching && plan.switch_criterion.kind == SwitchCriterion::Kind::plateau) {
    plateau_check();
  }

  for (std::uint64_t step = 1; step <= plan.max_steps; ++step) {
    const bool use_ibt = mode_uses_ibt(plan.mode);
    const bool use_pp = mode_uses_pp(plan.mode) && !switched && !plan.skip_pp_draws;

    if (use_ibt) {
      ibt_step(model, tgt_stream.draw(plan.batch_size), Direction::src_to_tgt);
      ibt_step(model, src_stream.draw(plan.batch_size), Direction::tgt_to_src);
    }
    if (use_pp) {
      pp_step(model, pp_stream.draw(plan.batch_size));
      trace.pp_draw_steps.push_back(step);
    }

    const bool eval_now = (step % plan.eval_every == 0) || step == plan.max_steps;
    if (eval_now) evaluate(step);

    if (switching && !switched) {
      const auto& crit = plan.switch_criterion;
      const bool fire =
          (crit.kind == SwitchCriterion::Kind::fixed_step && step == crit.step) ||
          (crit.kind == SwitchCriterion::Kind::plateau && eval_now && plateau_check());
      if (fire) {
        switched = true;
        trace.switch_step = step;
      }
    }
  }
  return trace;
}

CipherTask make_cipher_task(const CipherTaskParams& params, std::uint64_t seed) {
  if (params.vocab_size < 2) {
    fail(ErrorCategory::config, "cipher task: vocab_size must be >= 2");
  }
  if (params.min_len == 0 || params.min_len > params.max_len) {
    fail(ErrorCategory::config, "cipher task: degenerate length range");
  }
  if (params.noise_rate < 0.0 || params.noise_rate > 1.0) {
    fail(ErrorCategory::config, "cipher task: noise_rate must be in [0,1]");
  }
  if (params.n_sentences == 0) {
    fail(ErrorCategory::config, "cipher task: n_sentences must be >= 1");
  }
  const std::uint32_t n_pp =
      params.pp_pairs > 0 ? params.pp_pairs : std::max(1u, params.n_sentences / 5);
  const std::uint32_t n_valid =
      params.valid_pairs > 0 ? params.valid_pairs : std::max(1u, params.n_sentences / 10);

  int width = 1;
  for (std::uint32_t v = params.vocab_size - 1; v >= 10; v /= 10) ++width;
  const auto token = [&](char prefix, std::uint32_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%0*u", prefix, width, i);
    return std::string(buf);
  };

  std::vector<std::string> src_vocab(params.vocab_size), tgt_vocab(params.vocab_size);
  for (std::uint32_t i = 0; i < params.vocab_size; ++i) {
    src_vocab[i] = token('s', i);
    tgt_vocab[i] = token('t', i);
  }
  // the cipher: src token i -> tgt token cipher[i]
  std::vector<std::uint32_t> cipher(params.vocab_size);
  for (std::uint32_t i = 0; i < params.vocab_size; ++i) cipher[i] = i;
  {
    Rng rng(derive_seed(seed, 10));
    rng.shuffle(cipher);
  }

  const auto sample_indices = [&](Rng& rng) {
    const std::uint32_t len =
        params.min_len + std::uint32_t(rng.below(params.max_len - params.min_len + 1));
    std::vector<std::uint32_t> ids(len);
    for (auto& id : ids) id = std::uint32_t(rng.below(params.vocab_size));
    return ids;
  };
  const auto render = [&](const std::vector<std::uint32_t>& ids,
                          const std::vector<std::string>& vocab, bool mapped) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i > 0) out += ' ';
      out += vocab[mapped ? cipher[ids[i]] : ids[i]];
    }
    return out;
  };

  CipherTask task;
  task.mono_src.language = "src";
  task.mono_tgt.language = "tgt";
  {
    Rng rng(derive_seed(seed, 11));
    for (std::uint32_t i = 0; i < params.n_sentences; ++i) {
      task.mono_src.sentences.push_back(render(sample_indices(rng), src_vocab, false));
    }
  }
  {
    // fresh draws from the same token distribution, cipher-mapped
    Rng rng(derive_seed(seed, 12));
    for (std::uint32_t i = 0; i < params.n_sentences; ++i) {
      task.mono_tgt.sentences.push_back(render(sample_indices(rng), tgt_vocab, true));
    }
  }
  {
    Rng rng(derive_seed(seed, 13));
    for (std::uint32_t i = 0; i < n_pp; ++i) {
      const auto ids = sample_indices(rng);
      std::string tgt;
      for (std::size_t j = 0; j < ids.size(); ++j) {
        if (j > 0) tgt += ' ';
        const bool corrupt = rng.unit() < params.noise_rate;
        const std::uint32_t t =
            corrupt ? std::uint32_t(rng.below(params.vocab_size)) : cipher[ids[j]];
        tgt += tgt_vocab[t];
      }
      task.pp.pairs.push_back({1.0, render(ids, src_vocab, false), std::move(tgt)});
    }
  }
  {
    Rng rng(derive_seed(seed, 14));
    for (std::uint32_t i = 0; i < n_valid; ++i) {
      const auto ids = sample_indices(rng);
      task.valid.push_back({render(ids, src_vocab, false), render(ids, tgt_vocab, true)});
    }
  }
  return task;
}

void write_trace(const TrainTrace& trace, std::ostream& out) {
  for (const auto& r : trace.records) {
    out << r.step << '\t' << r.mode << '\t' << format_fixed(r.bleu_fwd, 2) << '\t'
        << format_fixed(r.bleu_bwd, 2) << '\n';
  }
}

}  // namespace ppmine
