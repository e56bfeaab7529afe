#include "ppmine/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ppmine/error.hpp"
#include "ppmine/format.hpp"

namespace ppmine {

namespace {

PsmMetrics make_metrics(std::size_t tp, std::size_t predicted, std::size_t gold) {
  PsmMetrics m;
  m.true_positives = tp;
  m.predicted = predicted;
  m.gold = gold;
  m.precision = predicted == 0 ? 0.0 : double(tp) / double(predicted);
  m.recall = gold == 0 ? 0.0 : double(tp) / double(gold);
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::vector<double> build_grid(const GridSpec& spec, std::span<const ScoredPair> scored) {
  std::vector<double> grid;
  if (spec.kind == GridSpec::Kind::uniform) {
    if (spec.step <= 0.0) fail(ErrorCategory::config, "grid step must be > 0");
    if (spec.hi < spec.lo) fail(ErrorCategory::config, "grid hi must be >= lo");
    const std::size_t count =
        std::size_t(std::floor((spec.hi - spec.lo) / spec.step + 1e-9)) + 1;
    grid.reserve(count);
    for (std::size_t i = 0; i < count; ++i) grid.push_back(spec.lo + double(i) * spec.step);
  } else {
    std::vector<double> scores;
    scores.reserve(scored.size());
    for (const auto& p : scored) scores.push_back(p.xsim);
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    grid.reserve(scores.size() * 2);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      grid.push_back(scores[i]);
      if (i + 1 < scores.size()) grid.push_back(0.5 * (scores[i] + scores[i + 1]));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  if (grid.empty()) fail(ErrorCategory::data, "empty threshold grid");
  return grid;
}

}  // namespace

PsmMetrics psm_eval(std::vector<IdPair> predicted, const GoldPairSet& gold) {
  std::sort(predicted.begin(), predicted.end());
  predicted.erase(std::unique(predicted.begin(), predicted.end()), predicted.end());
  std::size_t tp = 0;
  for (const auto& [s, t] : predicted) {
    if (gold.contains(s, t)) ++tp;
  }
  return make_metrics(tp, predicted.size(), gold.size());
}

CalibrationReport calibrate_threshold(std::span<const ScoredPair> scored,
                                      const GoldPairSet& gold, const GridSpec& grid_spec) {
  const std::vector<double> grid = build_grid(grid_spec, scored);

  // sort once by descending score, then sweep thresholds from high to low,
  // accumulating the predicted set incrementally
  std::vector<std::pair<double, bool>> by_score;  // (xsim, is_gold)
  by_score.reserve(scored.size());
  for (const auto& p : scored) {
    by_score.emplace_back(p.xsim, gold.contains(p.src_id, p.tgt_id));
  }
  std::sort(by_score.begin(), by_score.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  CalibrationReport report;
  report.grid.reserve(grid.size());
  std::size_t idx = 0, tp = 0;
  bool have_best = false;
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    const double threshold = *it;
    while (idx < by_score.size() && by_score[idx].first > threshold) {
      tp += by_score[idx].second ? 1 : 0;
      ++idx;
    }
    const PsmMetrics metrics = make_metrics(tp, idx, gold.size());
    report.grid.emplace_back(threshold, metrics);
    // descending scan: strict improvement keeps ties at the larger threshold
    if (!have_best || metrics.f1 > report.best_f1) {
      have_best = true;
      report.best_f1 = metrics.f1;
      report.best_threshold = threshold;
    }
  }
  std::reverse(report.grid.begin(), report.grid.end());
  return report;
}

void write_calibration_report(const CalibrationReport& report, std::ostream& out) {
  out << "threshold\tprecision\trecall\tf1\n";
  for (const auto& [threshold, m] : report.grid) {
    out << format_fixed(threshold, 6) << '\t' << format_percent(m.precision) << '\t'
        << format_percent(m.recall) << '\t' << format_percent(m.f1) << '\n';
  }
  // best_threshold is always a grid point
  const auto best = std::find_if(report.grid.begin(), report.grid.end(),
                                 [&](const auto& row) {
                                   return row.first == report.best_threshold;
                                 });
  out << "BEST\t" << format_fixed(report.best_threshold, 6) << '\t'
      << format_percent(best->second.precision) << '\t'
      << format_percent(best->second.recall) << '\t'
      << format_percent(best->second.f1) << '\n';
}

}  // namespace ppmine
