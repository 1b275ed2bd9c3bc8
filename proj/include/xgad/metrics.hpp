#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace xgad {

// A ranking metric is undefined for the given labels (e.g. one class only).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Probability that a random (anomaly, normal) pair is ordered correctly,
// ties counting one half. Computed from midranks (Mann-Whitney U).
double auc_roc(std::span<const double> scores, std::span<const int> labels);

// Average precision: sum_k (R_k - R_{k-1}) P_k over descending distinct
// score thresholds; equal scores form a single threshold.
double auc_pr(std::span<const double> scores, std::span<const int> labels);

struct MetricSummary {
  std::vector<double> per_trial;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MetricSummary summarize(std::vector<double> values);

}  // namespace xgad
