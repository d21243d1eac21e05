#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "camta/data.hpp"
#include "camta/eval.hpp"
#include "camta/model.hpp"

namespace camta {

struct UserReturn {
  std::string user_id;
  double mean_return = 0.0;
  int group = -1;  // 0 = low, 1 = medium, 2 = high (ascending centroid)
};

// ret_t = a_t * yhat / cost_t per costed touchpoint; the user value is the
// mean over the user's touchpoints. Users with no costed touchpoint are
// reported in `excluded` and left out of segmentation.
struct UserReturns {
  std::vector<UserReturn> users;
  std::vector<std::string> excluded;
  std::size_t zero_cost_touchpoints = 0;
};

UserReturns user_returns(const std::vector<Journey>& journeys,
                         const std::vector<AttributionResult>& attributions);

struct Clustering {
  std::vector<int> labels;        // ascending-centroid group per input value
  std::vector<double> centroids;  // ascending
  double wcss = 0.0;
};

// k-means on 1-D values, k-means++ seeding, 100 restarts, best
// within-cluster sum of squares. Needs at least k distinct values.
Clustering cluster_values(const std::vector<double>& values, int k,
                          std::uint64_t seed);

// Fills `group` on each user, k = 3.
void segment_users(UserReturns& returns, std::uint64_t seed);

// Per user, channel-k affinity = sum of a_t over the user's touchpoints on
// channel k; box-plot stats per (group, channel).
std::map<std::pair<int, Index>, BoxplotStats> channel_affinity_stats(
    const UserReturns& returns, const std::vector<Journey>& journeys,
    const std::vector<AttributionResult>& attributions, Index num_channels);

void save_segment_report(
    const std::string& path, const UserReturns& returns,
    const std::vector<double>& centroids,
    const std::map<std::pair<int, Index>, BoxplotStats>& affinity);

}  // namespace camta
