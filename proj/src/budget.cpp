#include "camta/budget.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace camta {

using nlohmann::json;

std::vector<double> channel_roi(
    const std::vector<Journey>& journeys,
    const std::vector<AttributionResult>& attributions, Index num_channels,
    double value) {
  if (attributions.size() != journeys.size())
    throw std::invalid_argument("channel_roi: no attribution for some journey");
  std::vector<double> credit(static_cast<std::size_t>(num_channels), 0.0);
  std::vector<double> spend(static_cast<std::size_t>(num_channels), 0.0);
  for (std::size_t n = 0; n < journeys.size(); ++n) {
    const Journey& j = journeys[n];
    const AttributionResult& a = attributions[n];
    if (a.attention.size() != j.touchpoints.size())
      throw std::invalid_argument("channel_roi: attribution length mismatch");
    for (std::size_t t = 0; t < j.touchpoints.size(); ++t) {
      spend[j.touchpoints[t].channel] += j.touchpoints[t].cost;
      if (j.conversion)
        credit[j.touchpoints[t].channel] += a.attention[t] * value;
    }
  }
  std::vector<double> roi(credit.size(), 0.0);
  for (std::size_t k = 0; k < roi.size(); ++k)
    roi[k] = spend[k] > 0.0 ? credit[k] / spend[k] : 0.0;
  return roi;
}

std::vector<double> allocate(const std::vector<double>& roi,
                             double total_budget) {
  if (total_budget <= 0.0) throw std::invalid_argument("allocate: budget <= 0");
  double total = 0.0;
  for (double r : roi) {
    if (r < 0.0) throw std::invalid_argument("allocate: negative ROI");
    total += r;
  }
  if (total == 0.0) throw std::invalid_argument("allocate: all-zero ROI");
  std::vector<double> budgets(roi.size());
  for (std::size_t k = 0; k < roi.size(); ++k)
    budgets[k] = roi[k] / total * total_budget;
  return budgets;
}

BudgetReport replay(const std::vector<Journey>& journeys,
                    const std::vector<double>& budgets, double cost_scale) {
  struct Event {
    std::int64_t timestamp;
    std::size_t journey;
    std::size_t position;
  };
  std::vector<Event> events;
  for (std::size_t n = 0; n < journeys.size(); ++n)
    for (std::size_t t = 0; t < journeys[n].touchpoints.size(); ++t)
      events.push_back({journeys[n].touchpoints[t].timestamp, n, t});
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.journey != b.journey) return a.journey < b.journey;
    return a.position < b.position;
  });

  std::vector<double> remaining = budgets;
  std::vector<char> blacklisted(journeys.size(), 0);
  for (const Event& ev : events) {
    if (blacklisted[ev.journey]) continue;
    const Touchpoint& tp = journeys[ev.journey].touchpoints[ev.position];
    if (tp.channel >= static_cast<Index>(budgets.size()))
      throw std::invalid_argument("replay: channel without a budget entry");
    const double cost = tp.cost * cost_scale;
    if (remaining[tp.channel] < cost) {
      blacklisted[ev.journey] = 1;  // whole journey, deducted costs stay spent
    } else {
      remaining[tp.channel] -= cost;
    }
  }

  BudgetReport report;
  report.allocated = budgets;
  for (double b : budgets) report.total_budget += b;
  for (std::size_t k = 0; k < budgets.size(); ++k)
    report.total_expenditure += budgets[k] - remaining[k];
  for (std::size_t n = 0; n < journeys.size(); ++n) {
    if (blacklisted[n]) {
      ++report.blacklisted;
    } else if (journeys[n].conversion) {
      ++report.true_conversions;
    }
  }
  report.cvr = journeys.empty()
                   ? 0.0
                   : static_cast<double>(report.true_conversions) /
                         static_cast<double>(journeys.size());
  if (report.true_conversions > 0) {
    report.cpa = report.total_expenditure /
                 static_cast<double>(report.true_conversions);
    report.cpa_defined = true;
  }
  return report;
}

std::vector<BudgetReport> budget_sweep(
    const std::vector<Journey>& journeys,
    const std::vector<AttributionResult>& attributions, Index num_channels,
    const std::vector<double>& fractions, double cost_scale, double value) {
  const std::vector<double> roi =
      channel_roi(journeys, attributions, num_channels, value);
  double total_cost = 0.0;
  for (const auto& j : journeys)
    for (const auto& tp : j.touchpoints) total_cost += tp.cost * cost_scale;

  std::vector<BudgetReport> reports;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("budget_sweep: negative fraction");
    BudgetReport report;
    if (f == 0.0 || total_cost == 0.0) {
      // zero budget: everything with a cost blacklists immediately
      report = replay(journeys,
                      std::vector<double>(static_cast<std::size_t>(num_channels), 0.0),
                      cost_scale);
    } else {
      report = replay(journeys, allocate(roi, f * total_cost), cost_scale);
    }
    report.roi = roi;
    report.budget_fraction = f;
    reports.push_back(std::move(report));
  }
  return reports;
}

void save_budget_reports(const std::string& path,
                         const std::vector<BudgetReport>& reports) {
  json rows = json::array();
  for (const auto& r : reports) {
    rows.push_back({{"fraction", r.budget_fraction},
                    {"total_budget", r.total_budget},
                    {"roi", r.roi},
                    {"allocated", r.allocated},
                    {"true_conversions", r.true_conversions},
                    {"total_expenditure", r.total_expenditure},
                    {"cpa", r.cpa},
                    {"cpa_defined", r.cpa_defined},
                    {"cvr", r.cvr},
                    {"blacklisted", r.blacklisted}});
  }
  json doc{{"format_version", 1}, {"reports", std::move(rows)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_budget_reports: cannot open " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace camta
