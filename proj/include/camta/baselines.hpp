#pragma once

#include <string>
#include <vector>

#include "camta/data.hpp"
#include "camta/model.hpp"

namespace camta {

enum class RuleKind { kFirst, kLast, kLinear };

RuleKind rule_kind_from_string(const std::string& name);

// first -> (1,0,...); last -> (...,0,1); linear -> 1/T each.
std::vector<double> rule_attribution(const Journey& journey, RuleKind kind);

struct ChannelCredit {
  std::vector<double> credits;  // per channel, nonnegative
  bool normalized = false;      // sums to 1 when any credit is positive
};

struct LogisticModel {
  std::vector<double> coefficients;  // per channel
  double intercept = 0.0;

  double predict(const Journey& journey, Index num_channels) const;
};

// Logistic regression on per-journey channel occurrence counts, L2 weight
// 1e-4, gradient descent with backtracking line search until the gradient
// norm drops below 1e-6 (or 10k iterations).
LogisticModel lr_train(const std::vector<Journey>& journeys, Index num_channels);

// max(coefficient, 0), normalized to sum 1; all-nonpositive gives the zero
// vector with `normalized` false.
ChannelCredit lr_attribute(const LogisticModel& model);

// Per-journey attributions in the shared attribution-file format. Rules put
// their credit pattern in `attention`; LR spreads the per-channel credit over
// the journey's touchpoints proportionally.
std::vector<AttributionResult> baseline_attributions(
    const std::vector<Journey>& journeys, const std::string& method,
    Index num_channels);

}  // namespace camta
