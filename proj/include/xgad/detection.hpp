#pragma once

#include <span>

#include "xgad/contrastive.hpp"
#include "xgad/encoder.hpp"

namespace xgad {

// Which class is pulled toward the hypersphere center.
//  kNormalsInside: y = 0 pays -log l, y = 1 pays -log(1 - l) (default).
//  kAsPrinted:     the opposite pairing, roles of y swapped.
enum class LabelPairing { kNormalsInside, kAsPrinted };

// Shared center plus per-domain offsets. With `independent` set the shared
// part is ignored and each offset is a free-standing center.
struct CenterSet {
  Vector shared;
  Vector source_offset;
  Vector target_offset;
  bool independent = false;

  Vector effective(Domain domain) const;
};

struct LossWeights {
  double alpha_balance = 0.5;
};

// exp(-||z - center||^2)
double rbf_similarity(const Vector& z, const Vector& center);

// Mean hypersphere classification loss over all rows of `z`.
double dahsc_loss(const Matrix& z, std::span<const int> labels, const Vector& center,
                  double eps = kClampEps, LabelPairing pairing = LabelPairing::kNormalsInside);

struct DahscGrad {
  Matrix d_z;  // same shape as z; zero on rows not in `nodes`
  Vector d_center;
};

// Loss over the rows listed in `nodes` with matching `labels`.
double dahsc_loss_grad(const Matrix& z, std::span<const int> nodes, std::span<const int> labels,
                       const Vector& center, double eps, LabelPairing pairing, DahscGrad& grad);

double total_loss(double target_loss, double source_loss, double contrastive_loss,
                  const LossWeights& weights);

// s_i = 1 - exp(-||z_i - center||^2)
Vector anomaly_scores(const Matrix& z, const Vector& center);

}  // namespace xgad
