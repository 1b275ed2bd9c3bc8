#include "xgad/contrastive.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xgad {
namespace {

void check_square(const Discriminator& disc, Eigen::Index width, const char* what) {
  if (disc.weight.rows() != width || disc.weight.cols() != width) {
    throw std::invalid_argument(std::string(what) + ": discriminator is " +
                                std::to_string(disc.weight.rows()) + "x" +
                                std::to_string(disc.weight.cols()) + ", inputs have width " +
                                std::to_string(width));
  }
}

struct LogTerm {
  double value;
  double slope;  // derivative with respect to the bilinear logit
};

// -log(clamp(sigmoid(t)))
LogTerm positive_term(double t, double eps) {
  const double d = sigmoid(t);
  if (d <= eps) return {-std::log(eps), 0.0};
  if (d >= 1.0 - eps) return {-std::log(1.0 - eps), 0.0};
  return {-std::log(d), -(1.0 - d)};
}

// -log(1 - clamp(sigmoid(t)))
LogTerm negative_term(double t, double eps) {
  const double d = sigmoid(t);
  if (d <= eps) return {-std::log(1.0 - eps), 0.0};
  if (d >= 1.0 - eps) return {-std::log(eps), 0.0};
  return {-std::log(1.0 - d), d};
}

}  // namespace

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double discriminate(const Vector& x, const Vector& y, const Discriminator& disc) {
  if (x.size() != y.size()) throw std::invalid_argument("discriminate: vector widths differ");
  check_square(disc, x.size(), "discriminate");
  return sigmoid(x.dot(disc.weight * y));
}

double intra_loss(const Matrix& clean, const Matrix& corrupted, const Vector& readout,
                  const Discriminator& disc, double eps) {
  IntraGrad unused;
  return intra_loss_grad(clean, corrupted, readout, disc, eps, unused);
}

double inter_loss(const Vector& anchor, const Vector& positive, const Vector& negative,
                  const Discriminator& disc, double eps) {
  InterGrad unused;
  return inter_loss_grad(anchor, positive, negative, disc, eps, unused);
}

double contra_loss(const ContrastiveTerms& t) {
  return t.source_intra + t.source_inter + t.target_intra + t.target_inter;
}

double intra_loss_grad(const Matrix& clean, const Matrix& corrupted, const Vector& readout,
                       const Discriminator& disc, double eps, IntraGrad& grad) {
  if (clean.rows() != corrupted.rows() || clean.cols() != corrupted.cols()) {
    throw std::invalid_argument("intra_loss: clean and corrupted shapes differ");
  }
  if (clean.rows() == 0) throw std::invalid_argument("intra_loss: no nodes");
  if (readout.size() != clean.cols()) throw std::invalid_argument("intra_loss: readout width");
  check_square(disc, clean.cols(), "intra_loss");

  const double inv_n = 1.0 / static_cast<double>(clean.rows());
  const Vector wr = disc.weight * readout;
  const Vector pos_logits = clean * wr;
  const Vector neg_logits = corrupted * wr;

  Vector pos_slope(clean.rows());
  Vector neg_slope(clean.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < clean.rows(); ++i) {
    const LogTerm p = positive_term(pos_logits(i), eps);
    const LogTerm q = negative_term(neg_logits(i), eps);
    loss += p.value + q.value;
    pos_slope(i) = p.slope * inv_n;
    neg_slope(i) = q.slope * inv_n;
  }

  grad.d_clean = pos_slope * wr.transpose();
  grad.d_corrupted = neg_slope * wr.transpose();
  const Vector weighted = clean.transpose() * pos_slope + corrupted.transpose() * neg_slope;
  grad.d_readout = disc.weight.transpose() * weighted;
  grad.d_weight = weighted * readout.transpose();
  return loss * inv_n;
}

double inter_loss_grad(const Vector& anchor, const Vector& positive, const Vector& negative,
                       const Discriminator& disc, double eps, InterGrad& grad) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw std::invalid_argument("inter_loss: summary widths differ");
  }
  check_square(disc, anchor.size(), "inter_loss");
  const LogTerm p = positive_term(anchor.dot(disc.weight * positive), eps);
  const LogTerm q = negative_term(anchor.dot(disc.weight * negative), eps);

  grad.d_anchor = p.slope * (disc.weight * positive) + q.slope * (disc.weight * negative);
  grad.d_positive = p.slope * (disc.weight.transpose() * anchor);
  grad.d_negative = q.slope * (disc.weight.transpose() * anchor);
  grad.d_weight = anchor * (p.slope * positive + q.slope * negative).transpose();
  return p.value + q.value;
}

}  // namespace xgad
