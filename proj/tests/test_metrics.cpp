#include <gtest/gtest.h>

#include "oracles.hpp"
#include "xgad/metrics.hpp"
#include "xgad/random.hpp"

namespace xgad {
namespace {

TEST(AucRoc, Fixtures) {
  const std::vector<double> s = {0.9, 0.8, 0.4, 0.1};
  const std::vector<int> y = {1, 0, 1, 0};
  EXPECT_EQ(auc_roc(s, y), 0.75);
  EXPECT_EQ(auc_roc(std::vector<double>{3, 2, 1}, std::vector<int>{1, 0, 0}), 1.0);
  EXPECT_EQ(auc_roc(std::vector<double>{1, 1, 1, 1}, std::vector<int>{1, 0, 1, 0}), 0.5);
}

TEST(AucRoc, SingleClassIsUndefined) {
  EXPECT_THROW(auc_roc(std::vector<double>{1, 2}, std::vector<int>{0, 0}), UndefinedMetricError);
  EXPECT_THROW(auc_roc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), UndefinedMetricError);
  EXPECT_THROW(auc_roc(std::vector<double>{1, 2}, std::vector<int>{1}), std::invalid_argument);
}

TEST(AucPr, Fixtures) {
  const std::vector<double> s = {0.9, 0.8, 0.4, 0.1};
  const std::vector<int> y = {1, 0, 1, 0};
  EXPECT_NEAR(auc_pr(s, y), 5.0 / 6.0, 1e-15);
  EXPECT_EQ(auc_pr(std::vector<double>{3, 2, 1}, std::vector<int>{1, 1, 0}), 1.0);
  EXPECT_THROW(auc_pr(std::vector<double>{1, 2}, std::vector<int>{0, 0}), UndefinedMetricError);
}

TEST(AucPr, TiedScoresFormOneThreshold) {
  // One threshold holding everything: precision 1/2 at recall 1.
  EXPECT_EQ(auc_pr(std::vector<double>{0.3, 0.3}, std::vector<int>{1, 0}), 0.5);
}

// Coarse score grid so that ties are common.
TEST(Metrics, MatchBruteForceOracles) {
  RandomStream rng(2024);
  int checked = 0;
  while (checked < 2000) {
    const int n = static_cast<int>(rng.uniform_int(2, 12));
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(0, 5)) / 5.0;
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    const int pos = static_cast<int>(std::count(y.begin(), y.end(), 1));
    if (pos == 0 || pos == n) continue;
    ASSERT_NEAR(auc_roc(s, y), oracle::auc_pairs(s, y), 1e-12);
    ASSERT_NEAR(auc_pr(s, y), oracle::ap_thresholds(s, y), 1e-12);
    ++checked;
  }
}

TEST(AucRoc, InvariantUnderMonotoneTransform) {
  RandomStream rng(5);
  std::vector<double> s(40), t(40);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    s[i] = rng.normal(0, 1);
    t[i] = std::exp(3 * s[i]) + 7;
    y[i] = i % 3 == 0;
  }
  EXPECT_NEAR(auc_roc(s, y), auc_roc(t, y), 1e-15);
  std::vector<double> neg(40);
  for (int i = 0; i < 40; ++i) neg[i] = -s[i];
  EXPECT_NEAR(auc_roc(s, y) + auc_roc(neg, y), 1.0, 1e-12);
}

TEST(Summarize, PopulationStd) {
  MetricSummary m = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.std, std::sqrt(1.25));
  EXPECT_EQ(m.per_trial.size(), 4u);
  EXPECT_EQ(summarize({0.7}).std, 0.0);
}

}  // namespace
}  // namespace xgad
