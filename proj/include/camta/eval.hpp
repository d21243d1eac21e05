#pragma once

#include <cstddef>
#include <vector>

namespace camta {

struct MetricReport {
  double ll_conv = 0.0;
  double ll_click = 0.0;
  double auc = 0.0;
  std::size_t journeys = 0;
  std::size_t touchpoints = 0;
  std::size_t conversions = 0;
  std::size_t clicks = 0;
};

struct BoxplotStats {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_low = 0.0, whisker_high = 0.0;  // clamped to observed data
  std::vector<double> outliers;
};

// Mean full binary cross-entropy over journeys, probabilities clamped to
// [1e-12, 1-1e-12].
double log_loss_conv(const std::vector<double>& predictions,
                     const std::vector<int>& labels);

// Mean full binary cross-entropy over valid touchpoints (mask != 0).
double log_loss_click(const std::vector<double>& predictions,
                      const std::vector<int>& labels,
                      const std::vector<int>& mask);

// Mann-Whitney AUC via average ranks, O(n log n); ties count half. Equals the
// brute-force pair count exactly. Needs at least one positive and one negative.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Quartiles by inclusive linear interpolation; whiskers at the most extreme
// observations within q1/q3 -/+ 1.5*IQR, points beyond listed as outliers.
BoxplotStats boxplot_stats(const std::vector<double>& values);

}  // namespace camta
