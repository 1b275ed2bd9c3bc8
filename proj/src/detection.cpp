#include "xgad/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace xgad {
namespace {

struct KernelTerm {
  double value;
  double slope;  // derivative with respect to the squared distance
};

// -log(clamp(exp(-d2)))
KernelTerm attract(double d2, double eps) {
  const double l = std::exp(-d2);
  if (l <= eps) return {-std::log(eps), 0.0};
  if (l >= 1.0 - eps) return {-std::log(1.0 - eps), 0.0};
  return {d2, 1.0};
}

// -log(1 - clamp(exp(-d2)))
KernelTerm repel(double d2, double eps) {
  const double l = std::exp(-d2);
  if (l <= eps) return {-std::log(1.0 - eps), 0.0};
  if (l >= 1.0 - eps) return {-std::log(eps), 0.0};
  const double one_minus_l = -std::expm1(-d2);
  return {-std::log(one_minus_l), -l / one_minus_l};
}

}  // namespace

Vector CenterSet::effective(Domain domain) const {
  const Vector& offset = domain == Domain::kSource ? source_offset : target_offset;
  return independent ? offset : Vector(shared + offset);
}

double rbf_similarity(const Vector& z, const Vector& center) {
  if (z.size() != center.size()) throw std::invalid_argument("rbf_similarity: width mismatch");
  return std::exp(-(z - center).squaredNorm());
}

double dahsc_loss(const Matrix& z, std::span<const int> labels, const Vector& center, double eps,
                  LabelPairing pairing) {
  std::vector<int> nodes(static_cast<std::size_t>(z.rows()));
  std::iota(nodes.begin(), nodes.end(), 0);
  DahscGrad unused;
  return dahsc_loss_grad(z, nodes, labels, center, eps, pairing, unused);
}

double dahsc_loss_grad(const Matrix& z, std::span<const int> nodes, std::span<const int> labels,
                       const Vector& center, double eps, LabelPairing pairing, DahscGrad& grad) {
  if (nodes.size() != labels.size()) {
    throw std::invalid_argument("dahsc_loss: node and label counts differ");
  }
  if (nodes.empty()) throw std::invalid_argument("dahsc_loss: no labelled nodes");
  if (z.cols() != center.size()) throw std::invalid_argument("dahsc_loss: center width mismatch");

  grad.d_z = Matrix::Zero(z.rows(), z.cols());
  grad.d_center = Vector::Zero(center.size());
  const double inv_n = 1.0 / static_cast<double>(nodes.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const int y = labels[k];
    if (y != 0 && y != 1) {
      throw std::invalid_argument("dahsc_loss: label " + std::to_string(y) + " is not binary");
    }
    const int i = nodes[k];
    if (i < 0 || i >= z.rows()) throw std::invalid_argument("dahsc_loss: node index out of range");
    const Vector diff = z.row(i).transpose() - center;
    const double d2 = diff.squaredNorm();
    const bool pulled = (pairing == LabelPairing::kNormalsInside) ? (y == 0) : (y == 1);
    const KernelTerm term = pulled ? attract(d2, eps) : repel(d2, eps);
    loss += term.value;
    if (term.slope != 0.0) {
      const Vector g = (2.0 * term.slope * inv_n) * diff;
      grad.d_z.row(i) += g.transpose();
      grad.d_center -= g;
    }
  }
  return loss * inv_n;
}

double total_loss(double target_loss, double source_loss, double contrastive_loss,
                  const LossWeights& weights) {
  return target_loss + source_loss + weights.alpha_balance * contrastive_loss;
}

Vector anomaly_scores(const Matrix& z, const Vector& center) {
  if (z.cols() != center.size()) throw std::invalid_argument("anomaly_scores: width mismatch");
  // Past d2 ~ 37 the kernel underflows; cap just below 1 to stay in [0, 1).
  const double cap = std::nextafter(1.0, 0.0);
  Vector s(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    s(i) = std::min(cap, -std::expm1(-(z.row(i).transpose() - center).squaredNorm()));
  }
  return s;
}

}  // namespace xgad
