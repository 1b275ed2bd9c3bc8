#pragma once

// Slow reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "xgad/training.hpp"

namespace xgad::oracle {

// Counts every (anomaly, normal) pair; ties count one half.
inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  double good = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) good += 1.0;
      if (s[i] == s[j]) good += 0.5;
    }
  }
  return good / static_cast<double>(pairs);
}

// Enumerates each distinct score as a threshold (score >= t predicted
// positive), from the highest down, and sums (R_k - R_{k-1}) P_k.
inline double ap_thresholds(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  const double positives = static_cast<double>(std::count(y.begin(), y.end(), 1));
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0, predicted = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        ++predicted;
        tp += y[i];
      }
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

// Full sort of the eligible nodes by (score desc, index asc), then slices.
inline PseudoLabelSets pseudo_sort_slice(const std::vector<double>& s, std::vector<int> eligible,
                                         double beta1, double beta2) {
  std::sort(eligible.begin(), eligible.end(), [&](int a, int b) {
    if (s[a] > s[b]) return true;
    if (s[a] < s[b]) return false;
    return a < b;
  });
  const auto n = static_cast<double>(eligible.size());
  const auto top = static_cast<std::size_t>(std::ceil(beta1 * n));
  const auto bottom = static_cast<std::size_t>(std::ceil(beta2 * n));
  PseudoLabelSets out;
  for (std::size_t i = 0; i < top; ++i) out.anomalous.push_back(eligible[i]);
  for (std::size_t i = eligible.size() - bottom; i < eligible.size(); ++i)
    out.normal.push_back(eligible[i]);
  std::sort(out.anomalous.begin(), out.anomalous.end());
  std::sort(out.normal.begin(), out.normal.end());
  return out;
}

}  // namespace xgad::oracle
