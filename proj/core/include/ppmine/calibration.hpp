#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ppmine/corpus.hpp"
#include "ppmine/scoring.hpp"

namespace ppmine {

struct PsmMetrics {
  double precision = 0.0;  // tp/predicted, 0 when predicted == 0
  double recall = 0.0;     // tp/gold, 0 when gold is empty
  double f1 = 0.0;         // harmonic mean, 0 when both are 0
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

// predicted is treated as a set (duplicates collapse); tp = |predicted ∩ gold|
PsmMetrics psm_eval(std::vector<IdPair> predicted, const GoldPairSet& gold);

struct GridSpec {
  enum class Kind {
    observed_scores,  // all distinct observed scores plus their midpoints
    uniform,          // lo, lo+step, ..., hi
  };

  Kind kind = Kind::observed_scores;
  double lo = 1.0;
  double hi = 1.2;
  double step = 0.001;

  static GridSpec observed() { return {}; }
  static GridSpec uniform(double lo, double hi, double step) {
    return {Kind::uniform, lo, hi, step};
  }
};

struct CalibrationReport {
  std::vector<std::pair<double, PsmMetrics>> grid;  // ascending threshold
  double best_threshold = 0.0;
  double best_f1 = 0.0;
};

// Sweeps the grid over pairs predicted by strict thresholding (xsim > T) and
// picks the T maximizing F1, ties resolved toward the larger threshold.
// Single sort then sweep; scored pairs must be distinct (src,tgt).
CalibrationReport calibrate_threshold(std::span<const ScoredPair> scored,
                                      const GoldPairSet& gold, const GridSpec& grid);

// TSV: header, one row per grid point, footer `BEST <T> <P> <R> <F1>`;
// metrics rendered as percentages with 2 decimals
void write_calibration_report(const CalibrationReport& report, std::ostream& out);

}  // namespace ppmine
