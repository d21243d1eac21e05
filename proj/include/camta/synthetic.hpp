#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camta/data.hpp"

namespace camta {

// Confounded synthetic generator: a latent per-user context drives channel
// assignment (strength gamma), the observed covariates, and the outcome, so
// naive attribution overcredits contextually favored channels. True channel
// effects are the weights w_k, which give known per-touchpoint shares.
struct SyntheticConfig {
  std::size_t num_users = 5000;
  Index num_channels = 4;
  std::vector<Index> covariate_cardinalities = {8, 8};  // excludes the OOV slot
  double gamma = 2.0;                     // confounding strength, >= 0
  std::vector<double> channel_weights = {3.0, 1.0, 1.0, 1.0};  // w_k >= 0
  double base_click_rate = 0.2;
  double base_conversion_rate = 0.1;
  std::size_t min_len = 1;
  std::size_t max_len = 8;
  double cost_scale = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticGroundTruth {
  std::vector<double> channel_weights;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  // per journey, per touchpoint: w_{c_t} / sum_s w_{c_s}
  std::vector<std::vector<double>> shares;
};

struct SyntheticDataset {
  std::vector<Journey> journeys;
  SyntheticGroundTruth truth;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& config);

// Oracle lookup: shares of journey `index` of the generating run.
std::vector<double> ground_truth_attribution(const SyntheticGroundTruth& truth,
                                             std::size_t index);

void save_ground_truth(const std::string& path,
                       const SyntheticGroundTruth& truth);
SyntheticGroundTruth load_ground_truth(const std::string& path);

}  // namespace camta
