#pragma once

#include "xgad/graph.hpp"

namespace xgad {

// Probabilities are clamped to [eps, 1 - eps] before taking logarithms.
inline constexpr double kClampEps = 1e-7;

// Bilinear scorer D(x, y) = sigmoid(x^T W y).
struct Discriminator {
  Matrix weight;
};

double sigmoid(double t);

double discriminate(const Vector& x, const Vector& y, const Discriminator& disc);

// Node-vs-summary loss: mean_i [-log D(h_i, r) - log(1 - D(h~_i, r))].
double intra_loss(const Matrix& clean, const Matrix& corrupted, const Vector& readout,
                  const Discriminator& disc, double eps = kClampEps);

// Summary-vs-summary loss: -log D(a, pos) - log(1 - D(a, neg)).
double inter_loss(const Vector& anchor, const Vector& positive, const Vector& negative,
                  const Discriminator& disc, double eps = kClampEps);

struct ContrastiveTerms {
  double source_intra = 0.0;
  double source_inter = 0.0;
  double target_intra = 0.0;
  double target_inter = 0.0;
};

double contra_loss(const ContrastiveTerms& terms);

struct IntraGrad {
  Matrix d_clean;
  Matrix d_corrupted;
  Vector d_readout;
  Matrix d_weight;
};

// Value of intra_loss plus its gradient. The readout is treated as an
// independent input here; callers chain d_readout through readout_mean.
double intra_loss_grad(const Matrix& clean, const Matrix& corrupted, const Vector& readout,
                       const Discriminator& disc, double eps, IntraGrad& grad);

struct InterGrad {
  Vector d_anchor;
  Vector d_positive;
  Vector d_negative;
  Matrix d_weight;
};

double inter_loss_grad(const Vector& anchor, const Vector& positive, const Vector& negative,
                       const Discriminator& disc, double eps, InterGrad& grad);

}  // namespace xgad
