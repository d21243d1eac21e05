#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "camta/eval.hpp"
#include "camta/rng.hpp"

using namespace camta;

namespace {

// quadratic-time reference: ties count half
double auc_brute(const std::vector<double>& scores,
                 const std::vector<int>& labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[i] != 1 || labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  return wins / pairs;
}

}  // namespace

TEST_CASE("auc on small hand-counted inputs") {
  CHECK(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK(auc({0.2, 0.5, 0.5, 0.9}, {0, 1, 0, 1}) ==
        doctest::Approx(0.875).epsilon(1e-12));  // one tied pair counts half
  CHECK(auc({0.5, 0.5}, {1, 0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(auc({0.1, 0.9}, {0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(auc({0.9, 0.1}, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("auc equals the brute-force pair count on random data") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) {
      // coarse quantization forces many ties
      scores.push_back(std::floor(rng.uniform() * 8.0) / 8.0);
      labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    labels[0] = 1;
    labels[1] = 0;
    CHECK(auc(scores, labels) ==
          doctest::Approx(auc_brute(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("auc rejects degenerate inputs") {
  CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.1, 0.2}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(auc({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.1}, {0, 1}), std::invalid_argument);
}

TEST_CASE("conversion log loss") {
  CHECK(log_loss_conv({0.8, 0.2}, {1, 0}) ==
        doctest::Approx(-std::log(0.8)).epsilon(1e-12));
  CHECK(log_loss_conv({0.5}, {1}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // clamped, not infinite
  const double clamped = log_loss_conv({0.0}, {1});
  CHECK(clamped == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
  CHECK(std::isfinite(log_loss_conv({1.0}, {0})));
  CHECK_THROWS_AS(log_loss_conv({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(log_loss_conv({0.5}, {0, 1}), std::invalid_argument);
}

TEST_CASE("click log loss ignores masked touchpoints") {
  CHECK(log_loss_click({0.9, 0.123}, {1, 1}, {1, 0}) ==
        doctest::Approx(-std::log(0.9)).epsilon(1e-12));
  CHECK(log_loss_click({0.9, 0.4}, {1, 0}, {1, 1}) ==
        doctest::Approx((-std::log(0.9) - std::log(0.6)) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(log_loss_click({0.5}, {1}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(log_loss_click({0.5}, {1}, {1, 1}), std::invalid_argument);
}

TEST_CASE("boxplot quartiles use inclusive linear interpolation") {
  const BoxplotStats odd = boxplot_stats({5, 3, 1, 4, 2});
  CHECK(odd.q1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(odd.median == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(odd.q3 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(odd.whisker_low == 1.0);
  CHECK(odd.whisker_high == 5.0);
  CHECK(odd.outliers.empty());

  const BoxplotStats even = boxplot_stats({1, 2, 3, 4});
  CHECK(even.q1 == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(even.median == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(even.q3 == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("boxplot whiskers clamp to data and flag outliers") {
  const BoxplotStats s = boxplot_stats({1, 2, 3, 4, 100});
  CHECK(s.q1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.q3 == doctest::Approx(4.0).epsilon(1e-12));
  // fences 2 - 3 = -1 and 4 + 3 = 7; the most extreme points inside them
  CHECK(s.whisker_low == 1.0);
  CHECK(s.whisker_high == 4.0);
  REQUIRE(s.outliers.size() == 1);
  CHECK(s.outliers[0] == 100.0);
}

TEST_CASE("boxplot degenerate inputs") {
  const BoxplotStats one = boxplot_stats({7.0});
  CHECK(one.q1 == 7.0);
  CHECK(one.median == 7.0);
  CHECK(one.q3 == 7.0);
  CHECK(one.whisker_low == 7.0);
  CHECK(one.whisker_high == 7.0);
  CHECK(one.outliers.empty());

  const BoxplotStats flat = boxplot_stats({2, 2, 2, 2});
  CHECK(flat.median == 2.0);
  CHECK(flat.outliers.empty());

  CHECK_THROWS_AS(boxplot_stats({}), std::invalid_argument);
}
