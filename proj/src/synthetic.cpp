#include "camta/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "camta/rng.hpp"

namespace camta {

using nlohmann::json;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// relative pull of the generator's internal terms
constexpr double kClickContextCoef = 1.0;
constexpr double kClickEffectCoef = 0.8;
constexpr double kConvEffectCoef = 0.5;
constexpr double kConvContextCoef = 0.8;
constexpr double kCovariateNoise = 0.5;

}  // namespace

void SyntheticConfig::validate() const {
  if (num_users == 0) throw std::invalid_argument("synthetic: num_users == 0");
  if (num_channels < 2) throw std::invalid_argument("synthetic: need >= 2 channels");
  if (gamma < 0) throw std::invalid_argument("synthetic: gamma < 0");
  if (static_cast<Index>(channel_weights.size()) != num_channels)
    throw std::invalid_argument("synthetic: channel_weights size != K");
  for (double w : channel_weights)
    if (w < 0) throw std::invalid_argument("synthetic: negative channel weight");
  if (covariate_cardinalities.empty())
    throw std::invalid_argument("synthetic: no covariate fields");
  for (Index c : covariate_cardinalities)
    if (c < 2) throw std::invalid_argument("synthetic: covariate cardinality < 2");
  if (base_click_rate <= 0 || base_click_rate >= 1 ||
      base_conversion_rate <= 0 || base_conversion_rate >= 1)
    throw std::invalid_argument("synthetic: base rates must be in (0,1)");
  if (min_len < 1 || max_len < min_len)
    throw std::invalid_argument("synthetic: bad length range");
  if (cost_scale <= 0) throw std::invalid_argument("synthetic: cost_scale <= 0");
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const std::size_t dim = config.covariate_cardinalities.size();
  const Index K = config.num_channels;

  // channel k is pulled by context dimension (k mod dim); the outcome is
  // confounded along the direction favoring channel 1, whose true effect is
  // typically small, so a non-causal learner overcredits it
  auto affinity = [&](Index k, std::size_t d) {
    return (d == static_cast<std::size_t>(k) % dim) ? 1.0 : 0.0;
  };
  std::vector<double> outcome_dir(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) outcome_dir[d] = affinity(1 % K, d);

  SyntheticDataset out;
  out.truth.channel_weights = config.channel_weights;
  out.truth.gamma = config.gamma;
  out.truth.seed = config.seed;

  for (std::size_t u = 0; u < config.num_users; ++u) {
    Rng rng(derive_seed(config.seed, /*stream=*/1, u));
    std::vector<double> context(dim);
    for (double& c : context) c = rng.normal();
    double ctx_outcome = 0.0, ctx_mean = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      ctx_outcome += context[d] * outcome_dir[d];
      ctx_mean += context[d];
    }
    ctx_mean /= std::sqrt(static_cast<double>(dim));

    const std::size_t len =
        config.min_len + rng.uniform_int(config.max_len - config.min_len + 1);
    Journey j;
    j.user_id = "u" + std::to_string(u);
    double effect_sum = 0.0;
    std::vector<double> weights_on_path;
    for (std::size_t t = 0; t < len; ++t) {
      Touchpoint tp;
      // confounded channel assignment: p(k) ∝ exp(gamma * affinity(k)·context)
      std::vector<double> logits(K);
      double mx = -HUGE_VAL;
      for (Index k = 0; k < K; ++k) {
        double dot = 0.0;
        for (std::size_t d = 0; d < dim; ++d) dot += affinity(k, d) * context[d];
        logits[k] = config.gamma * dot;
        mx = std::max(mx, logits[k]);
      }
      double z = 0.0;
      for (Index k = 0; k < K; ++k) z += std::exp(logits[k] - mx);
      double r = rng.uniform() * z;
      Index chosen = K - 1;
      for (Index k = 0; k < K; ++k) {
        r -= std::exp(logits[k] - mx);
        if (r <= 0.0) {
          chosen = k;
          break;
        }
      }
      tp.channel = chosen;
      const double w = config.channel_weights[chosen];
      effect_sum += w;
      weights_on_path.push_back(w);

      for (std::size_t f = 0; f < dim; ++f) {
        const double noisy = context[f] + kCovariateNoise * rng.normal();
        const Index card = config.covariate_cardinalities[f];
        Index bucket = static_cast<Index>(normal_cdf(noisy / 1.2) * card);
        bucket = std::min(bucket, card - 1);
        tp.covariates.push_back(bucket + 1);  // 0 stays reserved for OOV
      }

      const double click_logit = logit(config.base_click_rate) +
                                 kClickContextCoef * ctx_mean +
                                 kClickEffectCoef * w;
      tp.click = rng.bernoulli(sigmoid(click_logit)) ? 1 : 0;
      tp.cost = config.cost_scale * std::exp(0.3 * rng.normal());
      tp.timestamp = static_cast<std::int64_t>(t);
      j.touchpoints.push_back(std::move(tp));
    }

    const double conv_logit = logit(config.base_conversion_rate) +
                              kConvEffectCoef * effect_sum +
                              config.gamma * kConvContextCoef * ctx_outcome;
    j.conversion = rng.bernoulli(sigmoid(conv_logit)) ? 1 : 0;

    std::vector<double> shares(weights_on_path.size());
    const double denom = effect_sum;
    for (std::size_t t = 0; t < shares.size(); ++t)
      shares[t] = denom > 0.0
                      ? weights_on_path[t] / denom
                      : 1.0 / static_cast<double>(shares.size());
    out.truth.shares.push_back(std::move(shares));
    out.journeys.push_back(std::move(j));
  }
  return out;
}

std::vector<double> ground_truth_attribution(const SyntheticGroundTruth& truth,
                                             std::size_t index) {
  if (index >= truth.shares.size())
    throw std::invalid_argument("ground_truth_attribution: unknown journey");
  return truth.shares[index];
}

void save_ground_truth(const std::string& path,
                       const SyntheticGroundTruth& truth) {
  json doc{{"format_version", 1},
           {"channel_weights", truth.channel_weights},
           {"gamma", truth.gamma},
           {"seed", truth.seed},
           {"shares", truth.shares}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_ground_truth: cannot open " + path);
  out << doc.dump() << "\n";
}

SyntheticGroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_ground_truth: cannot open " + path);
  json doc = json::parse(in);
  SyntheticGroundTruth truth;
  truth.channel_weights = doc.at("channel_weights").get<std::vector<double>>();
  truth.gamma = doc.at("gamma").get<double>();
  truth.seed = doc.at("seed").get<std::uint64_t>();
  truth.shares = doc.at("shares").get<std::vector<std::vector<double>>>();
  return truth;
}

}  // namespace camta
