#include "xgad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace xgad {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels, const char* what) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(scores.size()) +
                                " scores but " + std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument(std::string(what) + ": non-binary label");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw std::invalid_argument(std::string(what) + ": NaN score");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, "auc_roc");
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw UndefinedMetricError("auc_roc is undefined: labels contain a single class");
  }
  const auto idx = order_by_score(scores, false);
  double positive_rank_sum = 0.0;
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t end = start + 1;
    while (end < idx.size() && scores[idx[end]] == scores[idx[start]]) ++end;
    // 1-based ranks start+1 .. end share their mean.
    const double midrank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) {
      if (labels[idx[k]] == 1) positive_rank_sum += midrank;
    }
    start = end;
  }
  const double u = positive_rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double auc_pr(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, "auc_pr");
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0.0) throw UndefinedMetricError("auc_pr is undefined: no positive labels");
  const auto idx = order_by_score(scores, true);
  double tp = 0.0;
  double fp = 0.0;
  double previous_recall = 0.0;
  double ap = 0.0;
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t end = start;
    while (end < idx.size() && scores[idx[end]] == scores[idx[start]]) {
      (labels[idx[end]] == 1 ? tp : fp) += 1.0;
      ++end;
    }
    const double recall = tp / positives;
    ap += (recall - previous_recall) * (tp / (tp + fp));
    previous_recall = recall;
    start = end;
  }
  return ap;
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.per_trial = std::move(values);
  if (s.per_trial.empty()) return s;
  const auto n = static_cast<double>(s.per_trial.size());
  s.mean = std::accumulate(s.per_trial.begin(), s.per_trial.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s.per_trial) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

}  // namespace xgad
