#include "camta/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace camta {

namespace {

constexpr double kEps = 1e-12;

double bce(double p, int y) {
  p = std::clamp(p, kEps, 1.0 - kEps);
  return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

// inclusive linear interpolation of the order statistics
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

double log_loss_conv(const std::vector<double>& predictions,
                     const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("log_loss_conv: length mismatch");
  if (predictions.empty())
    throw std::invalid_argument("log_loss_conv: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    acc += bce(predictions[i], labels[i]);
  return acc / static_cast<double>(predictions.size());
}

double log_loss_click(const std::vector<double>& predictions,
                      const std::vector<int>& labels,
                      const std::vector<int>& mask) {
  if (predictions.size() != labels.size() || predictions.size() != mask.size())
    throw std::invalid_argument("log_loss_click: length mismatch");
  double acc = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!mask[i]) continue;
    acc += bce(predictions[i], labels[i]);
    ++valid;
  }
  if (valid == 0) throw std::invalid_argument("log_loss_click: no valid steps");
  return acc / static_cast<double>(valid);
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: length mismatch");
  std::size_t pos = 0, neg = 0;
  for (int y : labels) (y ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("auc: single-class input");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // average ranks within tied groups
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

BoxplotStats boxplot_stats(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("boxplot_stats: empty group");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  BoxplotStats s;
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = sorted.back();
  s.whisker_high = sorted.front();
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    }
  }
  return s;
}

}  // namespace camta
