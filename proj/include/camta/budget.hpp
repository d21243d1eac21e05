#pragma once

#include <string>
#include <vector>

#include "camta/data.hpp"
#include "camta/model.hpp"

namespace camta {

struct BudgetReport {
  std::vector<double> roi;        // per channel
  std::vector<double> allocated;  // b_k, sums to B
  double total_budget = 0.0;
  double budget_fraction = 0.0;
  std::size_t true_conversions = 0;
  double total_expenditure = 0.0;  // budget consumed: sum_k (b_k - remaining_k)
  double cpa = 0.0;
  bool cpa_defined = false;  // false when true_conversions == 0
  double cvr = 0.0;
  std::size_t blacklisted = 0;
};

// ROI_k = attributed conversion value on channel k over converted journeys,
// divided by the total spend on channel k across all journeys. Channels with
// zero spend get ROI 0.
std::vector<double> channel_roi(const std::vector<Journey>& journeys,
                                const std::vector<AttributionResult>& attributions,
                                Index num_channels, double value = 1.0);

// b_k = ROI_k / sum(ROI) * B. Rejects an all-zero ROI vector.
std::vector<double> allocate(const std::vector<double>& roi, double total_budget);

// Traverse impressions by serving time (ties by journey id, then position),
// blacklisting a whole journey the first time a channel budget cannot cover
// one of its (scaled) costs. Already-deducted costs stay deducted.
BudgetReport replay(const std::vector<Journey>& journeys,
                    const std::vector<double>& budgets, double cost_scale);

// Table-shaped sweep over budget fractions of the total scaled test-set cost.
std::vector<BudgetReport> budget_sweep(
    const std::vector<Journey>& journeys,
    const std::vector<AttributionResult>& attributions, Index num_channels,
    const std::vector<double>& fractions, double cost_scale, double value = 1.0);

void save_budget_reports(const std::string& path,
                         const std::vector<BudgetReport>& reports);

}  // namespace camta
