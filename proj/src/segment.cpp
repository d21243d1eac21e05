#include "camta/segment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "camta/rng.hpp"

namespace camta {

using nlohmann::json;

UserReturns user_returns(const std::vector<Journey>& journeys,
                         const std::vector<AttributionResult>& attributions) {
  if (journeys.size() != attributions.size())
    throw std::invalid_argument("user_returns: attribution count mismatch");
  struct Acc {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Acc> acc;
  UserReturns out;
  for (std::size_t n = 0; n < journeys.size(); ++n) {
    const Journey& j = journeys[n];
    const AttributionResult& a = attributions[n];
    if (a.attention.size() != j.touchpoints.size())
      throw std::invalid_argument(
          "user_returns: attention length does not match journey " +
          std::to_string(n));
    Acc& u = acc[j.user_id];
    for (std::size_t t = 0; t < j.touchpoints.size(); ++t) {
      if (j.touchpoints[t].cost <= 0.0) {
        ++out.zero_cost_touchpoints;
        continue;
      }
      u.sum += a.attention[t] * a.conversion_prob / j.touchpoints[t].cost;
      ++u.count;
    }
  }
  for (const auto& [user, a] : acc) {
    if (a.count == 0) {
      out.excluded.push_back(user);
    } else {
      out.users.push_back({user, a.sum / static_cast<double>(a.count), -1});
    }
  }
  return out;
}

namespace {

double assign_and_score(const std::vector<double>& values,
                        const std::vector<double>& centroids,
                        std::vector<int>* labels) {
  double wcss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    int best = 0;
    double best_d = HUGE_VAL;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = std::abs(values[i] - centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    (*labels)[i] = best;
    wcss += best_d * best_d;
  }
  return wcss;
}

}  // namespace

Clustering cluster_values(const std::vector<double>& values, int k,
                          std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("cluster_values: k < 1");
  std::set<double> distinct(values.begin(), values.end());
  if (static_cast<int>(distinct.size()) < k)
    throw std::invalid_argument("cluster_values: fewer than k distinct values");

  Clustering best;
  best.wcss = HUGE_VAL;
  Rng rng(derive_seed(seed, /*stream=*/51));
  for (int restart = 0; restart < 100; ++restart) {
    // k-means++ seeding
    std::vector<double> centroids;
    centroids.push_back(values[rng.uniform_int(values.size())]);
    while (static_cast<int>(centroids.size()) < k) {
      std::vector<double> d2(values.size());
      double total = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        double nearest = HUGE_VAL;
        for (double c : centroids)
          nearest = std::min(nearest, std::abs(values[i] - c));
        d2[i] = nearest * nearest;
        total += d2[i];
      }
      if (total == 0.0) {
        centroids.push_back(values[rng.uniform_int(values.size())]);
        continue;
      }
      double r = rng.uniform() * total;
      std::size_t pick = values.size() - 1;
      for (std::size_t i = 0; i < values.size(); ++i) {
        r -= d2[i];
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
      centroids.push_back(values[pick]);
    }

    std::vector<int> labels(values.size(), 0);
    double wcss = assign_and_score(values, centroids, &labels);
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<double> sums(centroids.size(), 0.0);
      std::vector<std::size_t> counts(centroids.size(), 0);
      for (std::size_t i = 0; i < values.size(); ++i) {
        sums[labels[i]] += values[i];
        ++counts[labels[i]];
      }
      for (std::size_t c = 0; c < centroids.size(); ++c)
        if (counts[c] > 0) centroids[c] = sums[c] / static_cast<double>(counts[c]);
      const double new_wcss = assign_and_score(values, centroids, &labels);
      if (new_wcss >= wcss - 1e-15) {
        wcss = new_wcss;
        break;
      }
      wcss = new_wcss;
    }

    if (wcss < best.wcss) {
      best.wcss = wcss;
      best.centroids = centroids;
      best.labels = labels;
    }
  }

  // rename groups by ascending centroid
  std::vector<std::size_t> order(best.centroids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return best.centroids[a] < best.centroids[b];
  });
  std::vector<int> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    rank[order[i]] = static_cast<int>(i);
  for (int& label : best.labels) label = rank[label];
  std::sort(best.centroids.begin(), best.centroids.end());
  return best;
}

void segment_users(UserReturns& returns, std::uint64_t seed) {
  std::vector<double> values;
  values.reserve(returns.users.size());
  for (const auto& u : returns.users) values.push_back(u.mean_return);
  const Clustering c = cluster_values(values, 3, seed);
  for (std::size_t i = 0; i < returns.users.size(); ++i)
    returns.users[i].group = c.labels[i];
}

std::map<std::pair<int, Index>, BoxplotStats> channel_affinity_stats(
    const UserReturns& returns, const std::vector<Journey>& journeys,
    const std::vector<AttributionResult>& attributions, Index num_channels) {
  std::map<std::string, int> group_of;
  for (const auto& u : returns.users) {
    if (u.group < 0)
      throw std::logic_error("channel_affinity_stats: segmentation not done");
    group_of[u.user_id] = u.group;
  }

  // per user, attention mass per channel
  std::map<std::string, std::vector<double>> affinity;
  for (std::size_t n = 0; n < journeys.size(); ++n) {
    const Journey& j = journeys[n];
    if (!group_of.count(j.user_id)) continue;  // excluded user
    auto& vec = affinity[j.user_id];
    if (vec.empty()) vec.assign(static_cast<std::size_t>(num_channels), 0.0);
    for (std::size_t t = 0; t < j.touchpoints.size(); ++t)
      vec[j.touchpoints[t].channel] += attributions[n].attention[t];
  }

  std::map<std::pair<int, Index>, std::vector<double>> grouped;
  for (const auto& [user, vec] : affinity) {
    const int group = group_of.at(user);
    for (Index k = 0; k < num_channels; ++k)
      grouped[{group, k}].push_back(vec[k]);
  }
  std::map<std::pair<int, Index>, BoxplotStats> out;
  for (const auto& [key, vals] : grouped) out[key] = boxplot_stats(vals);
  return out;
}

void save_segment_report(
    const std::string& path, const UserReturns& returns,
    const std::vector<double>& centroids,
    const std::map<std::pair<int, Index>, BoxplotStats>& affinity) {
  static const char* kGroupNames[] = {"low", "medium", "high"};
  json users = json::array();
  for (const auto& u : returns.users)
    users.push_back({{"user_id", u.user_id},
                     {"mean_return", u.mean_return},
                     {"group", kGroupNames[u.group]}});
  json boxes = json::array();
  for (const auto& [key, s] : affinity)
    boxes.push_back({{"group", kGroupNames[key.first]},
                     {"channel", key.second},
                     {"q1", s.q1},
                     {"median", s.median},
                     {"q3", s.q3},
                     {"whisker_low", s.whisker_low},
                     {"whisker_high", s.whisker_high},
                     {"outlier_count", s.outliers.size()}});
  json doc{{"format_version", 1},
           {"centroids", centroids},
           {"excluded_users", returns.excluded},
           {"zero_cost_touchpoints", returns.zero_cost_touchpoints},
           {"users", std::move(users)},
           {"channel_affinity", std::move(boxes)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_segment_report: cannot open " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace camta
