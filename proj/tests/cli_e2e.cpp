#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ppmine/calibration.hpp"
#include "ppmine/knn.hpp"
#include "ppmine/pipeline.hpp"
#include "ppmine/schedule.hpp"
#include "support.hpp"

using namespace ppmine;
using ppmine::test::TempDir;
using ppmine::test::run_command;

namespace {

std::string bin() {
  const auto b = test::ppmine_bin();
  REQUIRE_MESSAGE(!b.empty(), "PPMINE_BIN must point at the ppmine binary");
  return b;
}

// Mining fixture with provable structure: gold rows share a basis direction
// across languages, every other cosine is one constant, so the gold pairs
// are the unique high-xsim block.
struct CliFixture {
  TempDir dir{"cli"};
  std::string src_corpus, tgt_corpus, src_emb, tgt_emb, gold;
  FloatMatrix src_raw, tgt_raw;
  GoldPairSet gold_set;

  CliFixture() {
    const std::uint32_t n = 10, n_gold = 4, dim = 20;
    src_raw.dim = tgt_raw.dim = dim;
    const auto basis_row = [&](std::uint32_t hot) {
      std::vector<float> row(dim, 0.1f);
      row[hot] += 1.0f;
      return row;
    };
    std::vector<IdPair> pairs;
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto s = basis_row(i);
      src_raw.data.insert(src_raw.data.end(), s.begin(), s.end());
      const auto t = basis_row(i < n_gold ? i : n + (i - n_gold) % (dim - n));
      tgt_raw.data.insert(tgt_raw.data.end(), t.begin(), t.end());
      if (i < n_gold) pairs.emplace_back(i, i);
    }
    gold_set = GoldPairSet::from_pairs(pairs);

    src_corpus = dir.file("src.txt");
    tgt_corpus = dir.file("tgt.txt");
    src_emb = dir.file("src.ppem");
    tgt_emb = dir.file("tgt.ppem");
    gold = dir.file("gold.tsv");
    std::vector<std::string> src_lines, tgt_lines;
    for (std::uint32_t i = 0; i < n; ++i) {
      src_lines.push_back("quelle " + std::to_string(i));
      tgt_lines.push_back("ziel " + std::to_string(i));
    }
    test::write_text_file(src_corpus, src_lines);
    test::write_text_file(tgt_corpus, tgt_lines);
    write_embedding_file(src_emb, src_raw);
    write_embedding_file(tgt_emb, tgt_raw);
    gold_set.save(gold);
  }

  std::string mine_args() const {
    return " --src-corpus " + src_corpus + " --tgt-corpus " + tgt_corpus +
           " --src-emb " + src_emb + " --tgt-emb " + tgt_emb;
  }
};

}  // namespace

TEST_CASE("knn-dump matches the library output") {
  CliFixture fx;
  const auto out = fx.dir.file("nn.tsv");
  const auto r = run_command(bin() + " knn-dump --src-emb " + fx.src_emb +
                             " --tgt-emb " + fx.tgt_emb + " --k 3 --out " + out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("dumped 30 neighbor rows") != std::string::npos);

  const auto table = knn_exact(EmbeddingStore::from_raw("s", fx.src_raw),
                               EmbeddingStore::from_raw("t", fx.tgt_raw), 3);
  std::ostringstream expect;
  dump_neighbors(table, expect);
  CHECK(test::read_bytes(out) == expect.str());
}

TEST_CASE("mine with a fixed threshold matches the library pipeline") {
  CliFixture fx;
  const auto out = fx.dir.file("mined.tsv");
  const auto r = run_command(bin() + " mine" + fx.mine_args() +
                             " --threshold 1.5 --k 2 --out " + out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);

  MiningConfig cfg;
  cfg.src_corpus_path = fx.src_corpus;
  cfg.tgt_corpus_path = fx.tgt_corpus;
  cfg.src_emb_path = fx.src_emb;
  cfg.tgt_emb_path = fx.tgt_emb;
  cfg.threshold = 1.5;
  cfg.k = 2;
  const auto result = mine(cfg);
  std::ostringstream expect;
  write_pseudo_parallel(result.corpus, expect);
  CHECK(test::read_bytes(out) == expect.str());
  CHECK(result.corpus.pairs.size() == 4);  // exactly the gold block
}

TEST_CASE("mine with threshold calibration recovers the gold pairs") {
  CliFixture fx;
  const auto out = fx.dir.file("mined.tsv");
  const auto report = fx.dir.file("report.tsv");
  const auto r = run_command(bin() + " mine" + fx.mine_args() +
                             " --threshold calibrate --gold " + fx.gold +
                             " --out " + out + " --report-out " + report);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("mined 4 pairs") != std::string::npos);

  const auto report_text = test::read_bytes(report);
  CHECK(report_text.find("threshold\tprecision\trecall\tf1\n") == 0);
  CHECK(report_text.find("BEST\t") != std::string::npos);
  CHECK(report_text.find("100.00\t100.00\t100.00") != std::string::npos);

  // mined sentences are the four planted pairs
  const auto mined = test::read_bytes(out);
  for (int i = 0; i < 4; ++i) {
    const auto needle =
        "quelle " + std::to_string(i) + "\tziel " + std::to_string(i);
    CHECK(mined.find(needle) != std::string::npos);
  }
}

TEST_CASE("calibrate writes the report and prints the BEST line") {
  CliFixture fx;
  const auto out = fx.dir.file("report.tsv");
  const auto r = run_command(bin() + " calibrate --src-emb " + fx.src_emb +
                             " --tgt-emb " + fx.tgt_emb + " --src-corpus " +
                             fx.src_corpus + " --tgt-corpus " + fx.tgt_corpus +
                             " --gold " + fx.gold + " --out " + out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.rfind("BEST\t", 0) == 0);
  CHECK(r.out.find("100.00") != std::string::npos);
  CHECK(test::read_bytes(out).find("BEST\t") != std::string::npos);
}

TEST_CASE("calibrate sweeps a uniform grid when asked") {
  CliFixture fx;
  const auto out = fx.dir.file("report.tsv");
  const auto r = run_command(bin() + " calibrate --src-emb " + fx.src_emb +
                             " --tgt-emb " + fx.tgt_emb + " --gold " + fx.gold +
                             " --grid uniform:1.0,1.2,0.001 --out " + out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  // gold pairs score far above the grid ceiling, so every grid point
  // predicts exactly the gold block and the tie resolves to the top
  CHECK(r.out.rfind("BEST\t1.200000\t100.00\t100.00\t100.00", 0) == 0);
  // header + 201 grid rows + footer
  const auto report = test::read_bytes(out);
  CHECK(std::count(report.begin(), report.end(), '\n') == 203);
}

TEST_CASE("psm-eval renders two-decimal percentages") {
  TempDir dir("psm");
  const auto pred = dir.file("pred.tsv");
  const auto gold = dir.file("gold.tsv");
  // predicted {(1,1),(2,3)} against gold {(1,1),(2,2)}: P = R = F1 = 0.5
  test::write_text_file(pred, {"1\t1", "2\t3"});
  GoldPairSet::from_pairs({{1, 1}, {2, 2}}).save(gold);
  const auto out = dir.file("metrics.tsv");
  const auto r = run_command(bin() + " psm-eval --pred " + pred + " --gold " + gold +
                             " --out " + out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("precision\t50.00\n") != std::string::npos);
  CHECK(r.out.find("recall\t50.00\n") != std::string::npos);
  CHECK(r.out.find("f1\t50.00\n") != std::string::npos);
  CHECK(r.out.find("true_positives\t1\n") != std::string::npos);
  CHECK(test::read_bytes(out) == r.out);
}

TEST_CASE("psm-eval accepts the three-column scored dump") {
  TempDir dir("psm3");
  const auto pred = dir.file("pred.tsv");
  const auto gold = dir.file("gold.tsv");
  test::write_text_file(pred, {"1.200000\t1\t1", "1.100000\t2\t3"});
  GoldPairSet::from_pairs({{1, 1}, {2, 2}}).save(gold);
  const auto r = run_command(bin() + " psm-eval --pred " + pred + " --gold " + gold);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("precision\t50.00\n") != std::string::npos);
}

TEST_CASE("schedule-run matches the library trace") {
  TempDir dir("sched");
  const auto trace_path = dir.file("trace.tsv");
  const auto r = run_command(
      bin() +
      " schedule-run --mode IBT+PseudoPar --vocab 20 --sentences 100 --noise 0.2"
      " --min-len 2 --max-len 6 --max-steps 60 --eval-every 10 --batch-size 4"
      " --seed 5 --trace-out " +
      trace_path);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);

  CipherTaskParams params;
  params.vocab_size = 20;
  params.n_sentences = 100;
  params.noise_rate = 0.2;
  params.min_len = 2;
  params.max_len = 6;
  const auto task = make_cipher_task(params, 5);
  SchedulePlan plan;
  plan.mode = ScheduleMode::ibt_pseudo_par;
  plan.max_steps = 60;
  plan.eval_every = 10;
  plan.batch_size = 4;
  const auto trace =
      run_schedule(plan, task.mono_src, task.mono_tgt, task.pp, task.valid, 5);
  std::ostringstream expect;
  write_trace(trace, expect);
  CHECK(test::read_bytes(trace_path) == expect.str());
}

TEST_CASE("config file values are used and flags override them") {
  CliFixture fx;
  const auto config = fx.dir.file("knn.conf");
  test::write_text_file(config, {
                                    "src-emb = " + fx.src_emb,
                                    "tgt-emb = " + fx.tgt_emb,
                                    "k = 1",
                                });
  const auto out1 = fx.dir.file("nn1.tsv");
  const auto r1 =
      run_command(bin() + " knn-dump --config " + config + " --out " + out1);
  REQUIRE_MESSAGE(r1.exit_code == 0, r1.err);
  CHECK(r1.out.find("dumped 10 neighbor rows") != std::string::npos);

  const auto out2 = fx.dir.file("nn2.tsv");
  const auto r2 = run_command(bin() + " knn-dump --config " + config +
                              " --k 2 --out " + out2);
  REQUIRE_MESSAGE(r2.exit_code == 0, r2.err);
  CHECK(r2.out.find("dumped 20 neighbor rows") != std::string::npos);
}

TEST_CASE("errors are one machine-parsable line with the right category") {
  CliFixture fx;
  SUBCASE("missing corpus file is an io error") {
    const auto r = run_command(bin() + " mine --src-corpus /no/such/file" +
                               " --tgt-corpus " + fx.tgt_corpus + " --src-emb " +
                               fx.src_emb + " --tgt-emb " + fx.tgt_emb +
                               " --threshold 1.1 --out " + fx.dir.file("o.tsv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.rfind("error:io:", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  SUBCASE("unknown flags are usage errors") {
    const auto r = run_command(bin() + " knn-dump --bogus 1");
    CHECK(r.exit_code == 1);
    CHECK(r.err.rfind("error:usage:", 0) == 0);
  }
  SUBCASE("calibrate without gold is a config error") {
    const auto r = run_command(bin() + " mine" + fx.mine_args() +
                               " --threshold calibrate --out " + fx.dir.file("o.tsv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.rfind("error:config:", 0) == 0);
  }
  SUBCASE("malformed embedding files are format errors") {
    const auto bad = fx.dir.file("bad.ppem");
    test::write_bytes(bad, "NOPE");
    const auto r = run_command(bin() + " knn-dump --src-emb " + bad + " --tgt-emb " +
                               fx.tgt_emb + " --out " + fx.dir.file("o.tsv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.rfind("error:format:", 0) == 0);
  }
}
