#include "camta/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace camta {

RuleKind rule_kind_from_string(const std::string& name) {
  if (name == "first") return RuleKind::kFirst;
  if (name == "last") return RuleKind::kLast;
  if (name == "linear") return RuleKind::kLinear;
  throw std::invalid_argument("rule_attribution: unknown kind '" + name + "'");
}

std::vector<double> rule_attribution(const Journey& journey, RuleKind kind) {
  const std::size_t n = journey.touchpoints.size();
  if (n == 0) throw std::invalid_argument("rule_attribution: empty journey");
  std::vector<double> credits(n, 0.0);
  switch (kind) {
    case RuleKind::kFirst:
      credits.front() = 1.0;
      break;
    case RuleKind::kLast:
      credits.back() = 1.0;
      break;
    case RuleKind::kLinear:
      for (double& c : credits) c = 1.0 / static_cast<double>(n);
      break;
  }
  return credits;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> channel_counts(const Journey& j, Index num_channels) {
  std::vector<double> counts(static_cast<std::size_t>(num_channels), 0.0);
  for (const auto& tp : j.touchpoints) counts[tp.channel] += 1.0;
  return counts;
}

constexpr double kL2 = 1e-4;

// per-example mean loss and gradient of the L2-regularized objective
double lr_objective(const std::vector<Journey>& journeys, Index K,
                    const std::vector<double>& coef, double intercept,
                    std::vector<double>* grad_coef, double* grad_b) {
  const double n = static_cast<double>(journeys.size());
  double loss = 0.0;
  if (grad_coef) {
    grad_coef->assign(coef.size(), 0.0);
    *grad_b = 0.0;
  }
  for (const auto& j : journeys) {
    const auto x = channel_counts(j, K);
    double z = intercept;
    for (std::size_t k = 0; k < x.size(); ++k) z += coef[k] * x[k];
    const double p = sigmoid(z);
    const double y = j.conversion;
    const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
    loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc)) / n;
    if (grad_coef) {
      const double d = (p - y) / n;
      for (std::size_t k = 0; k < x.size(); ++k) (*grad_coef)[k] += d * x[k];
      *grad_b += d;
    }
  }
  for (std::size_t k = 0; k < coef.size(); ++k) {
    loss += 0.5 * kL2 * coef[k] * coef[k];
    if (grad_coef) (*grad_coef)[k] += kL2 * coef[k];
  }
  return loss;
}

}  // namespace

double LogisticModel::predict(const Journey& journey, Index num_channels) const {
  const auto x = channel_counts(journey, num_channels);
  double z = intercept;
  for (std::size_t k = 0; k < x.size(); ++k) z += coefficients[k] * x[k];
  return sigmoid(z);
}

LogisticModel lr_train(const std::vector<Journey>& journeys, Index num_channels) {
  if (journeys.empty()) throw std::invalid_argument("lr_train: empty training set");
  bool has_pos = false, has_neg = false;
  for (const auto& j : journeys) (j.conversion ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw std::invalid_argument("lr_train: single-class data");

  LogisticModel model;
  model.coefficients.assign(static_cast<std::size_t>(num_channels), 0.0);
  std::vector<double> grad;
  double grad_b = 0.0;
  double step = 1.0;
  for (int iter = 0; iter < 10000; ++iter) {
    const double loss = lr_objective(journeys, num_channels, model.coefficients,
                                     model.intercept, &grad, &grad_b);
    double gnorm2 = grad_b * grad_b;
    for (double g : grad) gnorm2 += g * g;
    if (std::sqrt(gnorm2) < 1e-6) break;

    // backtracking line search keeps the loss monotone
    step *= 2.0;
    while (step > 1e-12) {
      std::vector<double> trial = model.coefficients;
      for (std::size_t k = 0; k < trial.size(); ++k) trial[k] -= step * grad[k];
      const double trial_b = model.intercept - step * grad_b;
      const double trial_loss =
          lr_objective(journeys, num_channels, trial, trial_b, nullptr, nullptr);
      if (trial_loss <= loss) {
        model.coefficients = std::move(trial);
        model.intercept = trial_b;
        break;
      }
      step *= 0.5;
    }
    if (step <= 1e-12) break;
  }
  return model;
}

ChannelCredit lr_attribute(const LogisticModel& model) {
  ChannelCredit credit;
  credit.credits.assign(model.coefficients.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < model.coefficients.size(); ++k) {
    credit.credits[k] = std::max(model.coefficients[k], 0.0);
    total += credit.credits[k];
  }
  if (total > 0.0) {
    for (double& c : credit.credits) c /= total;
    credit.normalized = true;
  }
  return credit;
}

std::vector<AttributionResult> baseline_attributions(
    const std::vector<Journey>& journeys, const std::string& method,
    Index num_channels) {
  std::vector<AttributionResult> out;
  out.reserve(journeys.size());
  if (method == "lr") {
    const LogisticModel model = lr_train(journeys, num_channels);
    const ChannelCredit credit = lr_attribute(model);
    for (const auto& j : journeys) {
      AttributionResult r;
      double total = 0.0;
      for (const auto& tp : j.touchpoints) total += credit.credits[tp.channel];
      for (const auto& tp : j.touchpoints) {
        const double w =
            total > 0.0 ? credit.credits[tp.channel] / total
                        : 1.0 / static_cast<double>(j.touchpoints.size());
        r.attention.push_back(w);
        r.click_prob.push_back(0.5);
        r.channel_propensity.emplace_back(
            num_channels, 1.0 / static_cast<double>(num_channels));
      }
      r.conversion_prob = model.predict(j, num_channels);
      out.push_back(std::move(r));
    }
    return out;
  }
  const RuleKind kind = rule_kind_from_string(method);
  for (const auto& j : journeys) {
    AttributionResult r;
    r.attention = rule_attribution(j, kind);
    r.click_prob.assign(j.touchpoints.size(), 0.5);
    r.channel_propensity.assign(
        j.touchpoints.size(),
        std::vector<double>(num_channels,
                            1.0 / static_cast<double>(num_channels)));
    r.conversion_prob = static_cast<double>(j.conversion);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace camta
