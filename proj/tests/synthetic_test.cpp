#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "camta/synthetic.hpp"

using namespace camta;

namespace {

SyntheticConfig small_config() {
  SyntheticConfig cfg;
  cfg.num_users = 400;
  cfg.seed = 9;
  return cfg;
}

}  // namespace

TEST_CASE("generator output respects journey invariants") {
  const SyntheticConfig cfg = small_config();
  const SyntheticDataset ds = generate_synthetic(cfg);
  CHECK(ds.journeys.size() == cfg.num_users);
  REQUIRE(ds.truth.shares.size() == ds.journeys.size());
  for (std::size_t i = 0; i < ds.journeys.size(); ++i) {
    const Journey& j = ds.journeys[i];
    REQUIRE(!j.touchpoints.empty());
    CHECK(j.touchpoints.size() >= cfg.min_len);
    CHECK(j.touchpoints.size() <= cfg.max_len);
    CHECK((j.conversion == 0 || j.conversion == 1));
    CHECK(ds.truth.shares[i].size() == j.touchpoints.size());
    std::int64_t prev_ts = -1;
    for (const Touchpoint& tp : j.touchpoints) {
      CHECK(tp.channel >= 0);
      CHECK(tp.channel < cfg.num_channels);
      CHECK((tp.click == 0 || tp.click == 1));
      CHECK(tp.cost > 0.0);
      CHECK(tp.timestamp > prev_ts);
      prev_ts = tp.timestamp;
      REQUIRE(tp.covariates.size() == cfg.covariate_cardinalities.size());
      for (std::size_t f = 0; f < tp.covariates.size(); ++f) {
        CHECK(tp.covariates[f] >= 1);  // generator never emits the OOV code
        CHECK(tp.covariates[f] <= cfg.covariate_cardinalities[f]);
      }
    }
  }
}

TEST_CASE("same seed reproduces the dataset exactly") {
  const SyntheticDataset a = generate_synthetic(small_config());
  const SyntheticDataset b = generate_synthetic(small_config());
  REQUIRE(a.journeys.size() == b.journeys.size());
  for (std::size_t i = 0; i < a.journeys.size(); ++i) {
    CHECK(a.journeys[i].conversion == b.journeys[i].conversion);
    REQUIRE(a.journeys[i].touchpoints.size() == b.journeys[i].touchpoints.size());
    for (std::size_t t = 0; t < a.journeys[i].touchpoints.size(); ++t) {
      CHECK(a.journeys[i].touchpoints[t].channel ==
            b.journeys[i].touchpoints[t].channel);
      CHECK(a.journeys[i].touchpoints[t].cost ==
            b.journeys[i].touchpoints[t].cost);
      CHECK(a.journeys[i].touchpoints[t].covariates ==
            b.journeys[i].touchpoints[t].covariates);
    }
  }
}

TEST_CASE("different seeds give different datasets") {
  SyntheticConfig cfg = small_config();
  const SyntheticDataset a = generate_synthetic(cfg);
  cfg.seed = 10;
  const SyntheticDataset b = generate_synthetic(cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.journeys.size() && !differs; ++i) {
    if (a.journeys[i].touchpoints.size() != b.journeys[i].touchpoints.size()) {
      differs = true;
    } else {
      for (std::size_t t = 0; t < a.journeys[i].touchpoints.size(); ++t)
        if (a.journeys[i].touchpoints[t].channel !=
            b.journeys[i].touchpoints[t].channel)
          differs = true;
    }
  }
  CHECK(differs);
}

TEST_CASE("ground-truth shares follow the channel weights") {
  SyntheticConfig cfg = small_config();
  cfg.num_users = 2000;
  const SyntheticDataset ds = generate_synthetic(cfg);
  for (std::size_t i = 0; i < ds.journeys.size(); ++i) {
    const auto shares = ground_truth_attribution(ds.truth, i);
    double sum = 0.0, wsum = 0.0;
    for (std::size_t t = 0; t < shares.size(); ++t)
      wsum += cfg.channel_weights[ds.journeys[i].touchpoints[t].channel];
    for (std::size_t t = 0; t < shares.size(); ++t) {
      const double expect =
          cfg.channel_weights[ds.journeys[i].touchpoints[t].channel] / wsum;
      CHECK(shares[t] == doctest::Approx(expect).epsilon(1e-12));
      sum += shares[t];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(ground_truth_attribution(ds.truth, ds.journeys.size()),
                  std::invalid_argument);
}

TEST_CASE("confounding skews channel usage toward context-favored channels") {
  SyntheticConfig cfg = small_config();
  cfg.num_users = 3000;
  cfg.gamma = 4.0;
  const SyntheticDataset confounded = generate_synthetic(cfg);
  cfg.gamma = 0.0;
  const SyntheticDataset neutral = generate_synthetic(cfg);

  // the confounder acts per user: each user's latent context pulls their
  // touchpoints toward particular channels, so per-user channel usage
  // concentrates while the aggregate stays roughly balanced
  auto modal_fraction = [&](const SyntheticDataset& ds) {
    double acc = 0.0, users = 0.0;
    for (const Journey& j : ds.journeys) {
      if (j.touchpoints.size() < 2) continue;
      std::vector<double> counts(static_cast<std::size_t>(cfg.num_channels), 0);
      for (const Touchpoint& tp : j.touchpoints)
        counts[static_cast<std::size_t>(tp.channel)] += 1.0;
      acc += *std::max_element(counts.begin(), counts.end()) /
             static_cast<double>(j.touchpoints.size());
      users += 1.0;
    }
    return acc / users;
  };
  CHECK(modal_fraction(confounded) > modal_fraction(neutral) + 0.05);
}

TEST_CASE("conversion rate responds to the base rate") {
  SyntheticConfig cfg = small_config();
  cfg.num_users = 3000;
  auto rate = [](const SyntheticDataset& ds) {
    double conv = 0.0;
    for (const Journey& j : ds.journeys) conv += j.conversion;
    return conv / static_cast<double>(ds.journeys.size());
  };
  cfg.base_conversion_rate = 0.05;
  const double low = rate(generate_synthetic(cfg));
  cfg.base_conversion_rate = 0.4;
  const double high = rate(generate_synthetic(cfg));
  CHECK(low > 0.0);
  CHECK(low < high);
  CHECK(high < 1.0);
}

TEST_CASE("cost_scale scales every cost linearly") {
  SyntheticConfig cfg = small_config();
  const SyntheticDataset base = generate_synthetic(cfg);
  cfg.cost_scale = 2.5;
  const SyntheticDataset scaled = generate_synthetic(cfg);
  for (std::size_t i = 0; i < base.journeys.size(); ++i)
    for (std::size_t t = 0; t < base.journeys[i].touchpoints.size(); ++t)
      CHECK(scaled.journeys[i].touchpoints[t].cost ==
            doctest::Approx(2.5 * base.journeys[i].touchpoints[t].cost)
                .epsilon(1e-12));
}

TEST_CASE("config validation rejects bad inputs") {
  SyntheticConfig cfg;
  cfg.num_users = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SyntheticConfig{};
  cfg.gamma = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SyntheticConfig{};
  cfg.channel_weights = {1.0, 1.0};  // wrong length for 4 channels
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SyntheticConfig{};
  cfg.min_len = 5;
  cfg.max_len = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("ground-truth file round-trips") {
  SyntheticConfig cfg = small_config();
  cfg.num_users = 50;
  const SyntheticDataset ds = generate_synthetic(cfg);
  const std::string path = std::string(std::tmpnam(nullptr)) + ".json";
  save_ground_truth(path, ds.truth);
  const SyntheticGroundTruth loaded = load_ground_truth(path);
  std::remove(path.c_str());
  CHECK(loaded.gamma == ds.truth.gamma);
  CHECK(loaded.seed == ds.truth.seed);
  CHECK(loaded.channel_weights == ds.truth.channel_weights);
  REQUIRE(loaded.shares.size() == ds.truth.shares.size());
  for (std::size_t i = 0; i < loaded.shares.size(); ++i)
    CHECK(loaded.shares[i] == ds.truth.shares[i]);
}
