#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>

#include "ppmine/error.hpp"
#include "ppmine/schedule.hpp"
#include "support.hpp"

using namespace ppmine;

TEST_CASE("Fraction arithmetic is exact") {
  Fraction a(1, 2);
  a += Fraction(1, 3);
  CHECK(a == Fraction(5, 6));

  Fraction third(1, 3);
  Fraction sum;
  sum += third;
  sum += third;
  sum += third;
  CHECK(sum == Fraction(1, 1));  // no floating-point drift

  CHECK(Fraction(2, 4) == Fraction(1, 2));
  CHECK(Fraction(1, -2) == Fraction(-1, 2));
  CHECK(Fraction(1, 3) < Fraction(1, 2));
  CHECK(Fraction(-1, 2) < Fraction(1, 3));
  CHECK(Fraction(7, 2).to_double() == 3.5);
  CHECK_THROWS_AS(Fraction(1, 0), Error);
}

TEST_CASE("token splitting and joining") {
  CHECK(split_tokens("a b  c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_tokens("  leading\ttab ") == std::vector<std::string>{"leading", "tab"});
  CHECK(split_tokens("").empty());
  const std::vector<std::string> toks{"x", "y"};
  CHECK(join_tokens(toks) == "x y");
}

TEST_CASE("decode_token argmax with lexicographic ties") {
  ToyTranslator model;
  model.add_count(Direction::src_to_tgt, "a", "z", Fraction(2, 1));
  model.add_count(Direction::src_to_tgt, "a", "y", Fraction(2, 1));
  model.add_count(Direction::src_to_tgt, "a", "w", Fraction(1, 1));
  // tie between y and z resolves to the smaller token
  CHECK(model.decode_token(Direction::src_to_tgt, "a") == "y");
  CHECK(model.decode_token(Direction::src_to_tgt, "unseen") ==
        ToyTranslator::kUnknownToken);
  CHECK(model.decode_token(Direction::tgt_to_src, "a") == ToyTranslator::kUnknownToken);
}

TEST_CASE("pp_step positional rule") {
  ToyTranslator model;
  const std::vector<SentencePair> batch{{"a b", "x y"}};
  pp_step(model, batch);
  const auto& fwd = model.table(Direction::src_to_tgt);
  CHECK(fwd.at("a").at("x") == Fraction(1, 1));
  CHECK(fwd.at("b").at("y") == Fraction(1, 1));
  const auto& bwd = model.table(Direction::tgt_to_src);
  CHECK(bwd.at("x").at("a") == Fraction(1, 1));
  CHECK(bwd.at("y").at("b") == Fraction(1, 1));
  CHECK(model.src_vocab().count("a") == 1);
  CHECK(model.tgt_vocab().count("y") == 1);
}

TEST_CASE("pp_step cross-product rule carries fractional mass") {
  ToyTranslator model;
  const std::vector<SentencePair> batch{{"a", "x y"}};
  pp_step(model, batch);
  const auto& fwd = model.table(Direction::src_to_tgt);
  CHECK(fwd.at("a").at("x") == Fraction(1, 2));
  CHECK(fwd.at("a").at("y") == Fraction(1, 2));
  // reverse direction swaps roles: mass 1/len(to) with to = ["a"]
  const auto& bwd = model.table(Direction::tgt_to_src);
  CHECK(bwd.at("x").at("a") == Fraction(1, 1));
  CHECK(bwd.at("y").at("a") == Fraction(1, 1));
}

TEST_CASE("pp_step conserves count mass") {
  Rng rng(3);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 10; ++trial) {
    const auto sample = [&](std::size_t len) {
      std::vector<std::string> s;
      for (std::size_t i = 0; i < len; ++i) s.push_back(vocab[rng.below(vocab.size())]);
      return join_tokens(s);
    };
    const std::size_t lx = 1 + rng.below(5), ly = 1 + rng.below(5);
    ToyTranslator model;
    const std::vector<SentencePair> batch{{sample(lx), sample(ly)}};
    pp_step(model, batch);
    Fraction fwd_mass, bwd_mass;
    for (const auto& [from, row] : model.table(Direction::src_to_tgt)) {
      for (const auto& [to, c] : row) fwd_mass += c;
    }
    for (const auto& [from, row] : model.table(Direction::tgt_to_src)) {
      for (const auto& [to, c] : row) bwd_mass += c;
    }
    CHECK(fwd_mass == Fraction((long long)(lx), 1));
    CHECK(bwd_mass == Fraction((long long)(ly), 1));
  }
}

TEST_CASE("pp_step rejects empty batches and empty sentences") {
  ToyTranslator model;
  CHECK_THROWS_AS(pp_step(model, {}), Error);
  const std::vector<SentencePair> bad{{"", "x"}};
  CHECK_THROWS_AS(pp_step(model, bad), Error);
}

TEST_CASE("pp training on exact cipher pairs reaches full decode accuracy") {
  // cipher: letter -> uppercase image
  const std::vector<std::string> src{"a", "b", "c", "d", "e"};
  const std::vector<std::string> tgt{"A", "B", "C", "D", "E"};
  Rng rng(8);
  std::vector<SentencePair> pairs;
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> s, t;
    const std::size_t len = 1 + rng.below(6);
    for (std::size_t j = 0; j < len; ++j) {
      const auto idx = rng.below(src.size());
      s.push_back(src[idx]);
      t.push_back(tgt[idx]);
    }
    pairs.push_back({join_tokens(s), join_tokens(t)});
  }
  ToyTranslator model;
  pp_step(model, pairs);
  for (std::size_t i = 0; i < src.size(); ++i) {
    CHECK(model.decode_token(Direction::src_to_tgt, src[i]) == tgt[i]);
    CHECK(model.decode_token(Direction::tgt_to_src, tgt[i]) == src[i]);
  }
}

TEST_CASE("ibt_step from an empty model is a no-op") {
  ToyTranslator model;
  const std::vector<std::string> batch{"x y", "z"};
  ibt_step(model, batch, Direction::src_to_tgt);
  CHECK(model.table(Direction::src_to_tgt).empty());
  CHECK(model.table(Direction::tgt_to_src).empty());
}

TEST_CASE("ibt_step reinforces the current argmax") {
  ToyTranslator model;
  // reverse-direction table: target token x decodes to a (3 beats 1)
  model.add_count(Direction::tgt_to_src, "x", "a", Fraction(3, 1));
  model.add_count(Direction::tgt_to_src, "x", "b", Fraction(1, 1));
  const std::vector<std::string> batch{"x"};
  ibt_step(model, batch, Direction::src_to_tgt);
  CHECK(model.table(Direction::src_to_tgt).at("a").at("x") == Fraction(1, 1));
  // reverse table untouched by the update
  CHECK(model.table(Direction::tgt_to_src).at("x").at("a") == Fraction(3, 1));
}

TEST_CASE("ibt_step on an exact cipher model reinforces the diagonal") {
  ToyTranslator model;
  model.add_count(Direction::tgt_to_src, "X", "x", Fraction(1, 1));
  model.add_count(Direction::tgt_to_src, "Y", "y", Fraction(1, 1));
  const std::vector<std::string> batch{"X Y", "Y X"};
  ibt_step(model, batch, Direction::src_to_tgt);
  const auto& fwd = model.table(Direction::src_to_tgt);
  CHECK(fwd.at("x").at("X") == Fraction(2, 1));
  CHECK(fwd.at("y").at("Y") == Fraction(2, 1));
  CHECK(fwd.size() == 2);
}

TEST_CASE("toy_bleu identity, disjoint and hand-computed cases") {
  const std::vector<std::string> h{"a b c d e"};
  CHECK(toy_bleu(h, h) == 100.0);

  const std::vector<std::string> disjoint{"x y z w v"};
  CHECK(toy_bleu(disjoint, h) == 0.0);

  // 3/4, 2/3, 1/2 then a zero 4-gram match kills the score
  const std::vector<std::string> hyp{"a b c d"}, ref{"a b c e"};
  CHECK(toy_bleu(hyp, ref) == 0.0);

  // 4/5 * 3/4 * 2/3 * 1/2 = 1/5, equal lengths so no brevity penalty
  const std::vector<std::string> hyp2{"a b c d e"}, ref2{"a b c d f"};
  CHECK(toy_bleu(hyp2, ref2) ==
        doctest::Approx(100.0 * std::pow(0.2, 0.25)).epsilon(1e-12));

  // perfect prefix, hypothesis of 4 against reference of 6: BP = exp(1-6/4)
  const std::vector<std::string> hyp3{"a b c d"}, ref3{"a b c d e f"};
  CHECK(toy_bleu(hyp3, ref3) ==
        doctest::Approx(100.0 * std::exp(-0.5)).epsilon(1e-12));

  // corpus-level pooling over two sentences
  const std::vector<std::string> hyp4{"a b c d", "x y z w"};
  const std::vector<std::string> ref4{"a b c d", "x y q w"};
  // p1 = 7/8, p2 = 4/6, p3 = 2/4, p4 = 1/2
  const double expect =
      100.0 * std::pow((7.0 / 8.0) * (4.0 / 6.0) * (2.0 / 4.0) * (1.0 / 2.0), 0.25);
  CHECK(toy_bleu(hyp4, ref4) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("toy_bleu input validation") {
  const std::vector<std::string> one{"a"}, two{"a", "b"};
  CHECK_THROWS_AS(toy_bleu(one, two), Error);
  const std::vector<std::string> empty_ref{""};
  CHECK_THROWS_AS(toy_bleu(one, empty_ref), Error);
  CHECK_THROWS_AS(toy_bleu({}, {}), Error);
}

namespace {

CipherTaskParams small_task() {
  CipherTaskParams p;
  p.vocab_size = 20;
  p.n_sentences = 100;
  p.min_len = 2;
  p.max_len = 6;
  p.noise_rate = 0.0;
  return p;
}

// recover the token map from exact positional pairs; empty on conflict
std::map<std::string, std::string> recover_map(const ParallelSet& pairs) {
  std::map<std::string, std::string> mapping;
  for (const auto& p : pairs) {
    const auto s = split_tokens(p.src), t = split_tokens(p.tgt);
    REQUIRE(s.size() == t.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto [it, inserted] = mapping.emplace(s[i], t[i]);
      if (!inserted && it->second != t[i]) return {};
    }
  }
  return mapping;
}

}  // namespace

TEST_CASE("make_cipher_task produces a consistent bijection at noise 0") {
  const auto task = make_cipher_task(small_task(), 5);
  CHECK(task.mono_src.size() == 100);
  CHECK(task.mono_tgt.size() == 100);
  CHECK(task.pp.pairs.size() == 20);   // n/5
  CHECK(task.valid.size() == 10);      // n/10

  const auto mapping = recover_map(task.valid);
  REQUIRE_FALSE(mapping.empty());
  // exact pp pairs obey the same cipher
  for (const auto& e : task.pp.pairs) {
    const auto s = split_tokens(e.src), t = split_tokens(e.tgt);
    REQUIRE(s.size() == t.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto it = mapping.find(s[i]);
      if (it != mapping.end()) CHECK(it->second == t[i]);
    }
  }
}

TEST_CASE("make_cipher_task noise 1 decouples pp targets") {
  auto params = small_task();
  params.noise_rate = 1.0;
  const auto task = make_cipher_task(params, 5);
  const auto mapping = recover_map(task.valid);
  REQUIRE_FALSE(mapping.empty());
  std::size_t mismatches = 0, total = 0;
  for (const auto& e : task.pp.pairs) {
    const auto s = split_tokens(e.src), t = split_tokens(e.tgt);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto it = mapping.find(s[i]);
      if (it == mapping.end()) continue;
      ++total;
      if (it->second != t[i]) ++mismatches;
    }
  }
  CHECK(total > 0);
  CHECK(mismatches > total / 2);  // uniform resampling rarely hits the image
}

TEST_CASE("make_cipher_task is deterministic per seed") {
  const auto a = make_cipher_task(small_task(), 9);
  const auto b = make_cipher_task(small_task(), 9);
  CHECK(a.mono_src.sentences == b.mono_src.sentences);
  CHECK(a.mono_tgt.sentences == b.mono_tgt.sentences);
  CHECK(a.valid.size() == b.valid.size());
  for (std::size_t i = 0; i < a.valid.size(); ++i) {
    CHECK(a.valid[i].src == b.valid[i].src);
    CHECK(a.valid[i].tgt == b.valid[i].tgt);
  }
  const auto c = make_cipher_task(small_task(), 10);
  CHECK(a.mono_src.sentences != c.mono_src.sentences);
}

TEST_CASE("make_cipher_task rejects degenerate parameters") {
  auto p = small_task();
  p.vocab_size = 1;
  CHECK_THROWS_AS(make_cipher_task(p, 0), Error);
  p = small_task();
  p.min_len = 0;
  CHECK_THROWS_AS(make_cipher_task(p, 0), Error);
  p = small_task();
  p.min_len = 7;
  p.max_len = 6;
  CHECK_THROWS_AS(make_cipher_task(p, 0), Error);
  p = small_task();
  p.noise_rate = 1.5;
  CHECK_THROWS_AS(make_cipher_task(p, 0), Error);
}

namespace {

SchedulePlan base_plan(ScheduleMode mode) {
  SchedulePlan plan;
  plan.mode = mode;
  plan.max_steps = 60;
  plan.eval_every = 10;
  plan.batch_size = 4;
  return plan;
}

}  // namespace

TEST_CASE("run_schedule validates its inputs") {
  const auto task = make_cipher_task(small_task(), 3);
  const PseudoParallelCorpus empty_pp;
  const ParallelSet empty_valid;
  CHECK_THROWS_AS(run_schedule(base_plan(ScheduleMode::ibt_pseudo_par), task.mono_src,
                               task.mono_tgt, empty_pp, task.valid, 0),
                  Error);
  CHECK_THROWS_AS(run_schedule(base_plan(ScheduleMode::ibt), task.mono_src,
                               task.mono_tgt, task.pp, empty_valid, 0),
                  Error);
  auto plan = base_plan(ScheduleMode::ibt_pseudo_par_then_ibt);
  // missing switch criterion
  CHECK_THROWS_AS(
      run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 0), Error);
  plan.switch_criterion = SwitchCriterion::at_step(60);
  // fixed switch must lie before max_steps
  CHECK_THROWS_AS(
      run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 0), Error);
}

TEST_CASE("IBT from a cold start never learns") {
  const auto task = make_cipher_task(small_task(), 3);
  const auto trace = run_schedule(base_plan(ScheduleMode::ibt), task.mono_src,
                                  task.mono_tgt, task.pp, task.valid, 1);
  for (const auto& r : trace.records) {
    CHECK(r.bleu_fwd == 0.0);
    CHECK(r.bleu_bwd == 0.0);
    CHECK(r.mode == "IBT");
  }
  CHECK(trace.pp_draw_steps.empty());
  CHECK_FALSE(trace.switch_step.has_value());
}

TEST_CASE("PseudoPar with clean pp reaches BLEU 100 on covered validation") {
  auto params = small_task();
  params.pp_pairs = 200;  // cover the vocabulary thoroughly
  const auto task = make_cipher_task(params, 4);
  auto plan = base_plan(ScheduleMode::pseudo_par);
  plan.max_steps = 100;
  const auto trace =
      run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 2);
  CHECK(trace.records.back().bleu_fwd == 100.0);
  CHECK(trace.records.back().bleu_bwd == 100.0);
  CHECK_FALSE(trace.pp_draw_steps.empty());
}

TEST_CASE("IBT+PseudoPar with skipped pp draws reduces to IBT exactly") {
  const auto task = make_cipher_task(small_task(), 6);
  const std::uint64_t seed = 17;
  const auto ibt = run_schedule(base_plan(ScheduleMode::ibt), task.mono_src,
                                task.mono_tgt, task.pp, task.valid, seed);
  auto plan = base_plan(ScheduleMode::ibt_pseudo_par);
  plan.skip_pp_draws = true;
  const auto skipped =
      run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, seed);
  REQUIRE(ibt.records.size() == skipped.records.size());
  for (std::size_t i = 0; i < ibt.records.size(); ++i) {
    CHECK(ibt.records[i].step == skipped.records[i].step);
    CHECK(ibt.records[i].bleu_fwd == skipped.records[i].bleu_fwd);
    CHECK(ibt.records[i].bleu_bwd == skipped.records[i].bleu_bwd);
  }
  CHECK(skipped.pp_draw_steps.empty());
}

TEST_CASE("fixed-step switch stops pp draws exactly at the switch") {
  const auto task = make_cipher_task(small_task(), 6);
  auto plan = base_plan(ScheduleMode::ibt_pseudo_par_then_ibt);
  plan.switch_criterion = SwitchCriterion::at_step(25);
  const auto trace =
      run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 5);
  REQUIRE(trace.switch_step.has_value());
  CHECK(*trace.switch_step == 25);
  REQUIRE_FALSE(trace.pp_draw_steps.empty());
  CHECK(trace.pp_draw_steps.back() == 25);
  for (const auto s : trace.pp_draw_steps) CHECK(s <= 25);
  // trace mode column flips exactly once
  int flips = 0;
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    if (trace.records[i].mode != trace.records[i - 1].mode) ++flips;
  }
  CHECK(flips == 1);
  for (const auto& r : trace.records) {
    CHECK(r.mode == (r.step <= 25 ? "IBT+PseudoPar" : "IBT"));
  }
}

TEST_CASE("plateau switch fires once BLEU stops improving") {
  const auto task = make_cipher_task(small_task(), 7);
  auto plan = base_plan(ScheduleMode::ibt_pseudo_par_then_ibt);
  plan.max_steps = 200;
  plan.switch_criterion = SwitchCriterion::on_plateau(3, 0.1);
  const auto trace =
      run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 5);
  REQUIRE(trace.switch_step.has_value());
  CHECK(*trace.switch_step % plan.eval_every == 0);  // fires at an eval point
  for (const auto s : trace.pp_draw_steps) CHECK(s <= *trace.switch_step);
}

TEST_CASE("run_schedule is deterministic and steps strictly increase") {
  const auto task = make_cipher_task(small_task(), 8);
  const auto plan = base_plan(ScheduleMode::ibt_pseudo_par);
  const auto a = run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 3);
  const auto b = run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 3);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].step == b.records[i].step);
    CHECK(a.records[i].bleu_fwd == b.records[i].bleu_fwd);
    CHECK(a.records[i].bleu_bwd == b.records[i].bleu_bwd);
    if (i > 0) CHECK(a.records[i].step > a.records[i - 1].step);
  }
  // eval cadence: 0, every eval_every, final step
  CHECK(a.records.front().step == 0);
  CHECK(a.records.back().step == plan.max_steps);
}

TEST_CASE("trace file format") {
  TrainTrace trace;
  trace.records = {{0, "IBT+PseudoPar", 0.0, 0.0}, {20, "IBT", 98.765, 50.0}};
  std::ostringstream out;
  write_trace(trace, out);
  CHECK(out.str() == "0\tIBT+PseudoPar\t0.00\t0.00\n20\tIBT\t98.77\t50.00\n");
}
