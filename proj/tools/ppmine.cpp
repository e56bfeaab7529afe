// ppmine: pseudo-parallel corpus mining and training-schedule laboratory.
//
// Subcommands: mine, calibrate, psm-eval, knn-dump, schedule-run.
// Every failure exits nonzero with one line on stderr:
//   error:<category>: <message>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>
#include <iostream>
#include <string>

#include "ppmine/calibration.hpp"
#include "ppmine/corpus.hpp"
#include "ppmine/embedding.hpp"
#include "ppmine/error.hpp"
#include "ppmine/format.hpp"
#include "ppmine/knn.hpp"
#include "ppmine/pipeline.hpp"
#include "ppmine/schedule.hpp"
#include "ppmine/scoring.hpp"

namespace {

using namespace ppmine;

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// flat `key = value` config file, expanded to option arguments
std::vector<std::string> load_config_args(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open config file: " + path);
  std::vector<std::string> args;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCategory::config, path + ": line " + std::to_string(lineno) +
                                      ": expected key = value");
    }
    const auto key = trim(stripped.substr(0, eq));
    const auto value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(ErrorCategory::config, path + ": line " + std::to_string(lineno) +
                                      ": expected key = value");
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

// Arguments with the config file expanded in place: config-derived pairs go
// right after the subcommand, before the explicit flags, so flags win under
// the take-last policy.
std::vector<std::string> expand_arguments(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::size_t sub_pos = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] != '-') {
      sub_pos = i;
      break;
    }
  }
  std::string config_path;
  for (std::size_t i = sub_pos; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      break;
    }
  }
  if (!config_path.empty() && sub_pos < args.size()) {
    const auto extra = load_config_args(config_path);
    args.insert(args.begin() + std::ptrdiff_t(sub_pos) + 1, extra.begin(), extra.end());
  }
  return args;
}

void add_config_option(CLI::App* sub) {
  // consumed by expand_arguments before parsing; registered (with CLI11's own
  // internal storage) so the parser accepts it
  sub->add_option("--config")
      ->description("flat key = value config file; flags override it");
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::io, "cannot open output file: " + path);
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorCategory::io, "write failure: " + path);
}

GridSpec parse_grid(const std::string& text) {
  if (text == "observed") return GridSpec::observed();
  if (text.rfind("uniform:", 0) == 0) {
    double lo, hi, step;
    if (std::sscanf(text.c_str() + 8, "%lf,%lf,%lf", &lo, &hi, &step) == 3) {
      return GridSpec::uniform(lo, hi, step);
    }
  }
  fail(ErrorCategory::usage, "bad --grid value '" + text +
                                 "' (expected observed or uniform:LO,HI,STEP)");
}

SwitchCriterion parse_switch(const std::string& text) {
  if (text.rfind("step:", 0) == 0) {
    unsigned long long s = 0;
    if (std::sscanf(text.c_str() + 5, "%llu", &s) == 1) {
      return SwitchCriterion::at_step(s);
    }
  }
  if (text.rfind("plateau:", 0) == 0) {
    unsigned p = 0;
    double delta = 0.0;
    if (std::sscanf(text.c_str() + 8, "%u,%lf", &p, &delta) == 2) {
      return SwitchCriterion::on_plateau(p, delta);
    }
  }
  fail(ErrorCategory::usage, "bad --switch value '" + text +
                                 "' (expected step:N or plateau:P,DELTA)");
}

ScheduleMode parse_mode(std::string text) {
  for (auto& c : text) c = char(std::tolower((unsigned char)c));
  if (text == "ibt") return ScheduleMode::ibt;
  if (text == "pseudopar") return ScheduleMode::pseudo_par;
  if (text == "ibt+pseudopar" || text == "ibt-pseudopar") {
    return ScheduleMode::ibt_pseudo_par;
  }
  if (text == "ibt+pseudopar->ibt" || text == "ibt-pseudopar-then-ibt") {
    return ScheduleMode::ibt_pseudo_par_then_ibt;
  }
  fail(ErrorCategory::usage,
       "bad --mode value '" + text +
           "' (expected IBT, PseudoPar, IBT+PseudoPar or IBT+PseudoPar->IBT)");
}

struct SearchFlags {
  std::uint32_t k = 4;
  std::size_t query_block = 4096;
  std::size_t index_block = 8192;
  unsigned threads = 1;

  void attach(CLI::App* app, bool with_k = true) {
    if (with_k) {
      app->add_option("--k", k, "neighborhood size for the margin denominator")
          ->capture_default_str();
    }
    app->add_option("--query-block", query_block, "query rows per search tile")
        ->capture_default_str();
    app->add_option("--index-block", index_block, "index rows per search tile")
        ->capture_default_str();
    app->add_option("--threads", threads, "worker threads for the search")
        ->capture_default_str();
  }

  SearchParams params() const {
    SearchParams p;
    p.k = k;
    p.query_block = query_block;
    p.index_block = index_block;
    p.threads = threads;
    return p;
  }
};

std::vector<IdPair> load_predicted_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open predicted pair file: " + path);
  std::vector<IdPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    // either src<TAB>tgt or the scored-pair dump xsim<TAB>src<TAB>tgt
    if (fields.size() != 2 && fields.size() != 3) {
      fail(ErrorCategory::format,
           path + ": line " + std::to_string(lineno) + ": expected 2 or 3 columns");
    }
    const auto parse_id = [&](const std::string& f) -> SentenceId {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(f.c_str(), &end, 10);
      if (f.empty() || end != f.c_str() + f.size() || v > 0xFFFFFFFFULL) {
        fail(ErrorCategory::format,
             path + ": line " + std::to_string(lineno) + ": bad id '" + f + "'");
      }
      return SentenceId(v);
    };
    const std::size_t base = fields.size() - 2;
    pairs.emplace_back(parse_id(fields[base]), parse_id(fields[base + 1]));
  }
  if (in.bad()) fail(ErrorCategory::io, "read failure: " + path);
  return pairs;
}

void print_metrics(const PsmMetrics& m, std::ostream& out) {
  out << "precision\t" << format_percent(m.precision) << '\n'
      << "recall\t" << format_percent(m.recall) << '\n'
      << "f1\t" << format_percent(m.f1) << '\n'
      << "true_positives\t" << m.true_positives << '\n'
      << "predicted\t" << m.predicted << '\n'
      << "gold\t" << m.gold << '\n';
}

void setup_mine(CLI::App& app) {
  auto* sub = app.add_subcommand("mine", "mine a pseudo-parallel corpus");
  add_config_option(sub);

  auto opts = std::make_shared<MiningConfig>();
  auto threshold = std::make_shared<std::string>();
  auto flags = std::make_shared<SearchFlags>();
  auto strategy = std::make_shared<std::string>("forward-backward-union");
  auto matching = std::make_shared<std::string>("one-to-one-greedy");
  auto grid = std::make_shared<std::string>("observed");
  auto report_out = std::make_shared<std::string>();
  auto scores_out = std::make_shared<std::string>();

  sub->add_option("--src-corpus", opts->src_corpus_path, "source corpus, one sentence per line")->required();
  sub->add_option("--tgt-corpus", opts->tgt_corpus_path, "target corpus, one sentence per line")->required();
  sub->add_option("--src-emb", opts->src_emb_path, "source PPEM embedding file")->required();
  sub->add_option("--tgt-emb", opts->tgt_emb_path, "target PPEM embedding file")->required();
  sub->add_option("--out", opts->out_path, "output pseudo-parallel TSV")->required();
  sub->add_option("--threshold", *threshold, "mining threshold (a number, or 'calibrate')")->required();
  sub->add_option("--gold", opts->gold_path, "gold pair TSV, required with --threshold calibrate");
  sub->add_option("--strategy", *strategy, "forward-backward-union | exhaustive")
      ->check(CLI::IsMember({"forward-backward-union", "exhaustive"}))
      ->capture_default_str();
  sub->add_option("--matching", *matching, "many-to-many | best-per-source | one-to-one-greedy")
      ->check(CLI::IsMember({"many-to-many", "best-per-source", "one-to-one-greedy"}))
      ->capture_default_str();
  sub->add_option("--grid", *grid, "calibration grid: observed | uniform:LO,HI,STEP")
      ->capture_default_str();
  sub->add_option("--report-out", *report_out, "also write the calibration report here");
  sub->add_option("--scores-out", *scores_out, "dump the scored candidate pairs here");
  sub->add_option("--seed", opts->seed, "seed for all randomized stages")->capture_default_str();
  flags->attach(sub);

  sub->callback([opts, threshold, flags, strategy, matching, grid, report_out, scores_out] {
    MiningConfig cfg = *opts;
    cfg.k = flags->k;
    cfg.search = flags->params();
    cfg.strategy = *strategy == "exhaustive" ? CandidateStrategy::exhaustive
                                             : CandidateStrategy::forward_backward_union;
    if (*matching == "many-to-many") cfg.matching = Matching::many_to_many;
    else if (*matching == "best-per-source") cfg.matching = Matching::best_per_source;
    else cfg.matching = Matching::one_to_one_greedy;
    cfg.grid = parse_grid(*grid);
    if (*threshold == "calibrate") {
      cfg.calibrate = true;
    } else {
      char* end = nullptr;
      cfg.threshold = std::strtod(threshold->c_str(), &end);
      if (threshold->empty() || end != threshold->c_str() + threshold->size()) {
        fail(ErrorCategory::usage, "bad --threshold value '" + *threshold + "'");
      }
    }

    const MineResult result = mine(cfg);
    auto out = open_output(cfg.out_path);
    write_pseudo_parallel(result.corpus, out);
    finish_output(out, cfg.out_path);
    if (!report_out->empty()) {
      if (!result.calibration) {
        fail(ErrorCategory::config, "--report-out requires --threshold calibrate");
      }
      auto rep = open_output(*report_out);
      write_calibration_report(*result.calibration, rep);
      finish_output(rep, *report_out);
    }
    if (!scores_out->empty()) {
      auto sc = open_output(*scores_out);
      dump_scored_pairs(result.scored, sc);
      finish_output(sc, *scores_out);
    }
    std::cout << "mined " << result.corpus.pairs.size() << " pairs (threshold "
              << format_fixed(result.threshold, 6) << ", candidates "
              << result.scored.size() << ", degenerate "
              << result.degenerate_pairs << ")\n";
  });
}

void setup_calibrate(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "calibrate", "sweep thresholds on a planted task and report P/R/F1");
  add_config_option(sub);

  struct Args {
    std::string src_corpus, tgt_corpus, src_emb, tgt_emb, gold, out, scores_out;
    std::string strategy = "forward-backward-union";
    std::string grid = "observed";
  };
  auto args = std::make_shared<Args>();
  auto flags = std::make_shared<SearchFlags>();

  sub->add_option("--src-emb", args->src_emb, "source PPEM embedding file")->required();
  sub->add_option("--tgt-emb", args->tgt_emb, "target PPEM embedding file")->required();
  sub->add_option("--gold", args->gold, "gold pair TSV")->required();
  sub->add_option("--out", args->out, "calibration report TSV")->required();
  sub->add_option("--src-corpus", args->src_corpus, "optional source corpus for count checks");
  sub->add_option("--tgt-corpus", args->tgt_corpus, "optional target corpus for count checks");
  sub->add_option("--strategy", args->strategy, "forward-backward-union | exhaustive")
      ->check(CLI::IsMember({"forward-backward-union", "exhaustive"}))
      ->capture_default_str();
  sub->add_option("--grid", args->grid, "observed | uniform:LO,HI,STEP")->capture_default_str();
  sub->add_option("--scores-out", args->scores_out, "dump the scored candidate pairs here");
  flags->attach(sub);

  sub->callback([args, flags] {
    const auto load_store = [&](const std::string& emb, const std::string& corpus_path,
                                const char* language) {
      if (corpus_path.empty()) return load_embedding_store(emb, language);
      const Corpus corpus = load_corpus(corpus_path, language);
      return build_store(corpus, read_embedding_file(emb));
    };
    const EmbeddingStore src = load_store(args->src_emb, args->src_corpus, "src");
    const EmbeddingStore tgt = load_store(args->tgt_emb, args->tgt_corpus, "tgt");
    const auto strategy = args->strategy == "exhaustive"
                              ? CandidateStrategy::exhaustive
                              : CandidateStrategy::forward_backward_union;
    const ScoringResult scored =
        score_candidates(src, tgt, flags->k, strategy, flags->params());
    const GoldPairSet gold = GoldPairSet::load(args->gold);
    gold.validate_against(src.rows(), tgt.rows());
    const CalibrationReport report =
        calibrate_threshold(scored.pairs, gold, parse_grid(args->grid));

    if (!args->scores_out.empty()) {
      auto sc = open_output(args->scores_out);
      dump_scored_pairs(scored.pairs, sc);
      finish_output(sc, args->scores_out);
    }
    auto out = open_output(args->out);
    write_calibration_report(report, out);
    finish_output(out, args->out);
    const auto& best =
        *std::find_if(report.grid.begin(), report.grid.end(),
                      [&](const auto& row) { return row.first == report.best_threshold; });
    std::cout << "BEST\t" << format_fixed(report.best_threshold, 6) << '\t'
              << format_percent(best.second.precision) << '\t'
              << format_percent(best.second.recall) << '\t'
              << format_percent(best.second.f1) << '\n';
  });
}

void setup_psm_eval(CLI::App& app) {
  auto* sub = app.add_subcommand("psm-eval",
                                 "precision/recall/F1 of predicted pairs against gold");
  add_config_option(sub);

  auto pred = std::make_shared<std::string>();
  auto gold = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  sub->add_option("--pred", *pred,
                  "predicted pairs TSV (src<TAB>tgt or xsim<TAB>src<TAB>tgt)")->required();
  sub->add_option("--gold", *gold, "gold pair TSV")->required();
  sub->add_option("--out", *out_path, "also write the metrics here");

  sub->callback([pred, gold, out_path] {
    const PsmMetrics metrics =
        psm_eval(load_predicted_pairs(*pred), GoldPairSet::load(*gold));
    print_metrics(metrics, std::cout);
    if (!out_path->empty()) {
      auto out = open_output(*out_path);
      print_metrics(metrics, out);
      finish_output(out, *out_path);
    }
  });
}

void setup_knn_dump(CLI::App& app) {
  auto* sub = app.add_subcommand("knn-dump",
                                 "exact k-NN table of queries over an index");
  add_config_option(sub);

  auto queries = std::make_shared<std::string>();
  auto index = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  auto flags = std::make_shared<SearchFlags>();
  sub->add_option("--src-emb", *queries, "query PPEM embedding file")->required();
  sub->add_option("--tgt-emb", *index, "index PPEM embedding file")->required();
  sub->add_option("--out", *out_path, "neighbor TSV output")->required();
  flags->attach(sub);

  sub->callback([queries, index, out_path, flags] {
    const EmbeddingStore q = load_embedding_store(*queries, "src");
    const EmbeddingStore x = load_embedding_store(*index, "tgt");
    const NeighborTable table = knn_exact(q, x, flags->params());
    auto out = open_output(*out_path);
    dump_neighbors(table, out);
    finish_output(out, *out_path);
    std::size_t rows = 0;
    for (const auto& e : table.entries) rows += e.size();
    std::cout << "dumped " << rows << " neighbor rows\n";
  });
}

void setup_schedule_run(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "schedule-run", "train the toy translator on a cipher task under a schedule");
  add_config_option(sub);

  struct Args {
    std::string mode;
    std::string switch_spec = "plateau:5,0.1";
    std::string trace_out;
    CipherTaskParams task;
    SchedulePlan plan;
    std::uint64_t seed = 0;
  };
  auto args = std::make_shared<Args>();
  args->plan.max_steps = 600;
  args->plan.eval_every = 20;

  sub->add_option("--mode", args->mode,
                  "IBT | PseudoPar | IBT+PseudoPar | IBT+PseudoPar->IBT "
                  "(aliases: ibt-pseudopar, ibt-pseudopar-then-ibt)")->required();
  sub->add_option("--trace-out", args->trace_out, "trace TSV output")->required();
  sub->add_option("--vocab", args->task.vocab_size, "cipher vocabulary size")->capture_default_str();
  sub->add_option("--sentences", args->task.n_sentences, "sentences per monolingual corpus")
      ->capture_default_str();
  sub->add_option("--noise", args->task.noise_rate, "pp target-token corruption rate")
      ->capture_default_str();
  sub->add_option("--min-len", args->task.min_len, "minimum sentence length")->capture_default_str();
  sub->add_option("--max-len", args->task.max_len, "maximum sentence length")->capture_default_str();
  sub->add_option("--pp-pairs", args->task.pp_pairs, "pseudo-parallel pairs (0 = sentences/5)")
      ->capture_default_str();
  sub->add_option("--valid-pairs", args->task.valid_pairs, "validation pairs (0 = sentences/10)")
      ->capture_default_str();
  sub->add_option("--switch", args->switch_spec, "step:N | plateau:P,DELTA")->capture_default_str();
  sub->add_option("--max-steps", args->plan.max_steps, "training steps")->capture_default_str();
  sub->add_option("--eval-every", args->plan.eval_every, "steps between evaluations")
      ->capture_default_str();
  sub->add_option("--batch-size", args->plan.batch_size, "sentences per batch")
      ->capture_default_str();
  sub->add_option("--seed", args->seed, "seed for task generation and batch draws")
      ->capture_default_str();

  sub->callback([args] {
    SchedulePlan plan = args->plan;
    plan.mode = parse_mode(args->mode);
    plan.switch_criterion = parse_switch(args->switch_spec);
    const CipherTask task = make_cipher_task(args->task, args->seed);
    const TrainTrace trace = run_schedule(plan, task.mono_src, task.mono_tgt,
                                          task.pp, task.valid, args->seed);
    auto out = open_output(args->trace_out);
    write_trace(trace, out);
    finish_output(out, args->trace_out);
    const auto& last = trace.records.back();
    std::cout << "final bleu\tfwd " << format_fixed(last.bleu_fwd, 2) << "\tbwd "
              << format_fixed(last.bleu_bwd, 2);
    if (trace.switch_step) std::cout << "\tswitch at step " << *trace.switch_step;
    std::cout << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pseudo-parallel corpus mining and schedule laboratory"};
  app.name("ppmine");
  app.require_subcommand(1);
  setup_mine(app);
  setup_calibrate(app);
  setup_psm_eval(app);
  setup_knn_dump(app);
  setup_schedule_run(app);

  try {
    auto args = expand_arguments(argc, argv);
    // explicit flags override config-derived values
    for (auto* sub : app.get_subcommands({})) {
      for (auto* opt : sub->get_options()) {
        if (opt->get_expected_min() > 0) {
          opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        }
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error:usage: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const ppmine::Error& e) {
    std::cerr << "error:" << to_string(e.category()) << ": " << one_line(e.what())
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error:internal: " << one_line(e.what()) << "\n";
    return 3;
  }
  return 0;
}
