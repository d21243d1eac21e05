#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "camta/baselines.hpp"
#include "camta/budget.hpp"
#include "camta/synthetic.hpp"

using namespace camta;

namespace {

Journey make_journey(std::vector<std::pair<Index, double>> steps, int conversion,
                     std::vector<std::int64_t> times = {}) {
  Journey j;
  j.user_id = "u";
  for (std::size_t t = 0; t < steps.size(); ++t) {
    Touchpoint tp;
    tp.covariates = {1};
    tp.channel = steps[t].first;
    tp.cost = steps[t].second;
    tp.timestamp = times.empty() ? static_cast<std::int64_t>(t)
                                 : times[t];
    j.touchpoints.push_back(tp);
  }
  j.conversion = conversion;
  return j;
}

AttributionResult uniform_attribution(const Journey& j) {
  AttributionResult r;
  const double w = 1.0 / static_cast<double>(j.touchpoints.size());
  for (std::size_t t = 0; t < j.touchpoints.size(); ++t) {
    r.attention.push_back(w);
    r.click_prob.push_back(0.5);
  }
  r.conversion_prob = j.conversion;
  return r;
}

}  // namespace

TEST_CASE("channel_roi hand evaluation") {
  // two converted journeys with channel-0 attention mass 0.6 and 0.3,
  // total channel-0 cost 3.0 -> ROI_0 = 0.3
  Journey a = make_journey({{0, 1.0}, {0, 1.0}, {1, 2.0}}, 1);
  Journey b = make_journey({{0, 1.0}, {1, 1.0}}, 1);
  AttributionResult ra;
  ra.attention = {0.4, 0.2, 0.4};
  ra.conversion_prob = 1.0;
  AttributionResult rb;
  rb.attention = {0.3, 0.7};
  rb.conversion_prob = 1.0;
  const auto roi = channel_roi({a, b}, {ra, rb}, 2);
  CHECK(roi[0] == doctest::Approx(0.9 / 3.0).epsilon(1e-12));
  CHECK(roi[1] == doctest::Approx((0.4 + 0.7) / 3.0).epsilon(1e-12));

  // non-converted journeys contribute cost but no credit
  Journey c = make_journey({{0, 5.0}}, 0);
  const auto roi2 = channel_roi({a, b, c}, {ra, rb, uniform_attribution(c)}, 2);
  CHECK(roi2[0] == doctest::Approx(0.9 / 8.0).epsilon(1e-12));

  // value multiplier scales credit linearly
  const auto roi3 = channel_roi({a, b}, {ra, rb}, 2, 2.0);
  CHECK(roi3[0] == doctest::Approx(2.0 * roi[0]).epsilon(1e-12));

  // unseen channel has zero spend and ROI 0
  const auto roi4 = channel_roi({a, b}, {ra, rb}, 3);
  CHECK(roi4[2] == 0.0);

  CHECK_THROWS_AS(channel_roi({a, b}, {ra}, 2), std::invalid_argument);
}

TEST_CASE("allocate splits the budget proportionally") {
  const auto b = allocate({0.3, 0.1}, 100.0);
  CHECK(b[0] == doctest::Approx(75.0).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(25.0).epsilon(1e-12));

  const auto single = allocate({0.7}, 42.0);
  CHECK(single[0] == doctest::Approx(42.0).epsilon(1e-12));

  // permutation symmetry
  const auto fwd = allocate({0.5, 0.2, 0.3}, 10.0);
  const auto rev = allocate({0.3, 0.2, 0.5}, 10.0);
  CHECK(fwd[0] == doctest::Approx(rev[2]).epsilon(1e-12));
  CHECK(fwd[1] == doctest::Approx(rev[1]).epsilon(1e-12));

  double total = 0.0;
  for (double v : fwd) total += v;
  CHECK(total == doctest::Approx(10.0).epsilon(1e-9));

  CHECK_THROWS_AS(allocate({0.0, 0.0}, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(allocate({0.5}, 0.0), std::invalid_argument);
}

TEST_CASE("replay handcrafted three-journey instance") {
  // time order of impressions: J1.1 (t=0), J2.1 (t=1), J1.2 (t=2), J3.1 (t=3)
  const Journey j1 = make_journey({{0, 1.0}, {0, 1.0}}, 1, {0, 2});
  const Journey j2 = make_journey({{0, 1.0}}, 1, {1});
  const Journey j3 = make_journey({{1, 1.0}}, 0, {3});
  const BudgetReport rep = replay({j1, j2, j3}, {2.5, 0.0}, 1.0);
  CHECK(rep.true_conversions == 1);
  CHECK(rep.total_expenditure == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.cvr == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  REQUIRE(rep.cpa_defined);
  CHECK(rep.cpa == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.blacklisted == 2);
}

TEST_CASE("replay with ample budget blacklists nothing") {
  const Journey j1 = make_journey({{0, 1.0}, {1, 2.0}}, 1);
  const Journey j2 = make_journey({{1, 0.5}}, 0);
  const BudgetReport rep = replay({j1, j2}, {10.0, 10.0}, 1.0);
  CHECK(rep.blacklisted == 0);
  CHECK(rep.true_conversions == 1);
  CHECK(rep.total_expenditure == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(rep.cvr == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("replay with zero budget blacklists everything") {
  const Journey j1 = make_journey({{0, 1.0}}, 1);
  const Journey j2 = make_journey({{1, 1.0}}, 1);
  const BudgetReport rep = replay({j1, j2}, {0.0, 0.0}, 1.0);
  CHECK(rep.blacklisted == 2);
  CHECK(rep.true_conversions == 0);
  CHECK(rep.cvr == 0.0);
  CHECK_FALSE(rep.cpa_defined);
  CHECK(rep.total_expenditure == 0.0);
}

TEST_CASE("replay scale invariance") {
  SyntheticConfig cfg;
  cfg.num_users = 300;
  cfg.seed = 41;
  const SyntheticDataset ds = generate_synthetic(cfg);
  const std::vector<double> budgets{40.0, 25.0, 10.0, 5.0};
  const BudgetReport base = replay(ds.journeys, budgets, 1.0);

  std::vector<double> scaled_budgets;
  for (double b : budgets) scaled_budgets.push_back(1000.0 * b);
  const BudgetReport scaled = replay(ds.journeys, scaled_budgets, 1000.0);

  CHECK(scaled.blacklisted == base.blacklisted);
  CHECK(scaled.true_conversions == base.true_conversions);
  CHECK(scaled.cvr == doctest::Approx(base.cvr).epsilon(1e-12));
  CHECK(scaled.total_expenditure ==
        doctest::Approx(1000.0 * base.total_expenditure).epsilon(1e-9));
  if (base.cpa_defined)
    CHECK(scaled.cpa == doctest::Approx(1000.0 * base.cpa).epsilon(1e-9));
}

TEST_CASE("replay budget mismatch is rejected") {
  const Journey j = make_journey({{2, 1.0}}, 0);
  CHECK_THROWS_AS(replay({j}, {1.0, 1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("budget sweep is monotone in the fraction") {
  SyntheticConfig cfg;
  cfg.num_users = 400;
  cfg.seed = 43;
  const SyntheticDataset ds = generate_synthetic(cfg);
  const auto attributions =
      baseline_attributions(ds.journeys, "linear", cfg.num_channels);
  const std::vector<double> fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  const auto reports = budget_sweep(ds.journeys, attributions, cfg.num_channels,
                                    fractions, 1.0);
  REQUIRE(reports.size() == fractions.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].budget_fraction == fractions[i]);
    double allocated = 0.0;
    for (double b : reports[i].allocated) {
      CHECK(b >= 0.0);
      allocated += b;
    }
    CHECK(allocated == doctest::Approx(reports[i].total_budget).epsilon(1e-9));
    if (i > 0) {
      CHECK(reports[i].true_conversions >= reports[i - 1].true_conversions);
      CHECK(reports[i].total_expenditure >=
            reports[i - 1].total_expenditure - 1e-9);
    }
  }
}

TEST_CASE("budget report file is valid JSON") {
  const Journey j1 = make_journey({{0, 1.0}}, 1);
  const auto reports =
      budget_sweep({j1}, {uniform_attribution(j1)}, 1, {0.5, 1.0}, 1.0);
  const std::string path = std::string(std::tmpnam(nullptr)) + ".json";
  save_budget_reports(path, reports);
  std::ifstream in(path);
  const nlohmann::json doc = nlohmann::json::parse(in);
  std::remove(path.c_str());
  CHECK(doc.at("format_version") == 1);
  REQUIRE(doc.at("reports").size() == 2);
  CHECK(doc.at("reports")[0].contains("cpa"));
  CHECK(doc.at("reports")[0].contains("cvr"));
  CHECK(doc.at("reports")[0].contains("true_conversions"));
}
