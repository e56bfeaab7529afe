#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppmine/corpus.hpp"
#include "ppmine/pipeline.hpp"

namespace ppmine {

// Exact rational count. Cross-product alignment adds 1/len masses whose ties
// must resolve exactly, so counts are never held in floating point.
class Fraction {
 public:
  Fraction() = default;
  Fraction(long long num, long long den);

  Fraction& operator+=(const Fraction& o);
  bool positive() const { return num_ > 0; }
  double to_double() const { return double(num_) / double(den_); }
  long long num() const { return num_; }
  long long den() const { return den_; }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  // exact cross-multiplied comparison
  friend bool operator<(const Fraction& a, const Fraction& b);

 private:
  long long num_ = 0;
  long long den_ = 1;
  void reduce();
};

std::vector<std::string> split_tokens(std::string_view sentence);
std::string join_tokens(std::span<const std::string> tokens);

enum class Direction { src_to_tgt, tgt_to_src };

constexpr Direction opposite(Direction d) {
  return d == Direction::src_to_tgt ? Direction::tgt_to_src : Direction::src_to_tgt;
}

// Count-based lexical translator: one co-occurrence table per direction,
// argmax decoding with lexicographic tie-break, word-for-word (length
// preserving). Stands in for a trainable translation model at desk scale;
// the training signal is which counts arrive when, which is what the
// schedule experiments vary.
class ToyTranslator {
 public:
  static constexpr const char* kUnknownToken = "<unk>";

  using Row = std::map<std::string, Fraction>;
  using CountTable = std::map<std::string, Row>;

  void add_count(Direction d, const std::string& from, const std::string& to,
                 const Fraction& mass);

  // argmax-count target of a known token, lexicographically smallest on
  // ties; unknown tokens decode to <unk>
  std::string decode_token(Direction d, const std::string& token) const;
  std::vector<std::string> decode_tokens(Direction d,
                                         std::span<const std::string> tokens) const;
  std::string translate(Direction d, const std::string& sentence) const;

  const CountTable& table(Direction d) const {
    return d == Direction::src_to_tgt ? fwd_ : bwd_;
  }
  const std::set<std::string>& src_vocab() const { return src_vocab_; }
  const std::set<std::string>& tgt_vocab() const { return tgt_vocab_; }

 private:
  CountTable fwd_;  // src token -> tgt token counts
  CountTable bwd_;  // tgt token -> src token counts
  std::set<std::string> src_vocab_;
  std::set<std::string> tgt_vocab_;
};

// Supervised update on a pseudo-parallel batch. Equal-length pairs align
// positionally (count 1 per position); unequal lengths fall back to the
// cross product with mass 1/len(to-side). Both direction tables update
// symmetrically.
void pp_step(ToyTranslator& model, std::span<const SentencePair> batch);

// Back-translation update: each sentence (in the target language of
// `update_direction`) is translated through the reverse table in inference
// mode, then the synthetic pair trains only the `update_direction` table.
// <unk> tokens in the synthetic source contribute no counts.
void ibt_step(ToyTranslator& model, std::span<const std::string> mono_batch,
              Direction update_direction);

enum class ScheduleMode {
  ibt,                       // back-translation only
  pseudo_par,                // supervised loss on mined pairs only
  ibt_pseudo_par,            // both, every step
  ibt_pseudo_par_then_ibt,   // both until the switch fires, then IBT only
};

struct SwitchCriterion {
  enum class Kind { none, fixed_step, plateau };
  Kind kind = Kind::none;
  std::uint64_t step = 0;        // fixed_step: last step that draws pp batches
  std::uint32_t patience = 5;    // plateau: evals without improvement
  double min_delta = 0.1;        // plateau: required forward-BLEU gain

  static SwitchCriterion at_step(std::uint64_t s);
  static SwitchCriterion on_plateau(std::uint32_t patience, double min_delta);
};

struct SchedulePlan {
  ScheduleMode mode = ScheduleMode::ibt;
  SwitchCriterion switch_criterion;  // consulted only in ibt_pseudo_par_then_ibt
  std::uint64_t max_steps = 1000;
  std::uint64_t eval_every = 50;
  std::uint32_t batch_size = 8;
  // diagnostic hook: run the plan but never consume a pp batch; used to
  // check that IBT+PseudoPar reduces to IBT exactly
  bool skip_pp_draws = false;
};

struct TraceRecord {
  std::uint64_t step;
  std::string mode;  // active regime: IBT | PseudoPar | IBT+PseudoPar
  double bleu_fwd;
  double bleu_bwd;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  std::vector<std::uint64_t> pp_draw_steps;  // instrumented batch log
  std::optional<std::uint64_t> switch_step;
};

// Runs the schedule with seeded per-stream batch draws (epoch reshuffle) and
// toy-BLEU evaluation in both directions every eval_every steps (plus step 0
// and the final step). Mono streams draw from seeds independent of the pp
// stream, so disabling pp draws leaves the IBT trajectory unchanged.
TrainTrace run_schedule(const SchedulePlan& plan, const Corpus& mono_src,
                        const Corpus& mono_tgt, const PseudoParallelCorpus& pp,
                        const ParallelSet& valid, std::uint64_t seed);

// Corpus BLEU-4: geometric mean of modified 1..4-gram precisions with
// brevity penalty, whitespace tokenization, no smoothing (any n-gram order
// with zero matches gives 0). Range [0, 100].
double toy_bleu(std::span<const std::string> hypotheses,
                std::span<const std::string> references);

struct CipherTaskParams {
  std::uint32_t vocab_size = 50;
  std::uint32_t n_sentences = 500;  // per monolingual corpus
  std::uint32_t min_len = 3;
  std::uint32_t max_len = 12;
  double noise_rate = 0.3;   // per-token resample probability in pp targets
  std::uint32_t pp_pairs = 0;     // 0 -> n_sentences / 5
  std::uint32_t valid_pairs = 0;  // 0 -> n_sentences / 10
};

struct CipherTask {
  Corpus mono_src;
  Corpus mono_tgt;
  PseudoParallelCorpus pp;
  ParallelSet valid;
};

// Synthetic language pair from a random bijective token cipher: disjoint
// mono samples (target side cipher-mapped), pp pairs that are exact
// translations except each target token is resampled uniformly with
// probability noise_rate, and a held-out exact validation set.
CipherTask make_cipher_task(const CipherTaskParams& params, std::uint64_t seed);

// TSV rows: step<TAB>mode<TAB>bleu_fwd<TAB>bleu_bwd
void write_trace(const TrainTrace& trace, std::ostream& out);

const char* to_string(ScheduleMode mode);

}  // namespace ppmine
