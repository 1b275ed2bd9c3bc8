#include "xgad/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xgad {
namespace {

void require_width(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": width mismatch (got " +
                                std::to_string(got) + ", expected " + std::to_string(want) + ")");
  }
}

Matrix uniform_fan_in(int rows, int cols, RandomStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix w(rows, cols);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
  return w;
}

DenseLayer init_dense(int in, int out, RandomStream& rng) {
  return DenseLayer{uniform_fan_in(in, out, rng), Vector::Zero(out)};
}

SageLayer init_sage(int in, int out, bool rectify, RandomStream& rng) {
  SageLayer layer;
  layer.w_self = uniform_fan_in(in, out, rng);
  layer.w_neigh = uniform_fan_in(in, out, rng);
  layer.bias = Vector::Zero(out);
  layer.rectify = rectify;
  return layer;
}

Matrix affine(const Matrix& x, const Matrix& w, const Vector& b) {
  Matrix y = x * w;
  y.rowwise() += b.transpose();
  return y;
}

Matrix rectified(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - top).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

void check_bank(const Matrix& embeddings, const PromptBank& bank) {
  if (bank.size() == 0) throw std::invalid_argument("prompt bank has no bases");
  require_width(embeddings.cols(), bank.width(), "prompt bank");
}

// Gradient through z = h + softmax(h B^T) B.
void enhance_backward(const Matrix& h, const Matrix& alpha, const PromptBank& bank,
                      const Matrix& d_z, Matrix& d_h, Matrix* d_bases) {
  const Matrix d_alpha = d_z * bank.bases.transpose();
  const Vector inner = (alpha.array() * d_alpha.array()).rowwise().sum();
  Matrix d_logits = alpha.array() * (d_alpha.colwise() - inner).array();
  d_h = d_z + d_logits * bank.bases;
  if (d_bases) {
    *d_bases += alpha.transpose() * d_z;
    *d_bases += d_logits.transpose() * h;
  }
}

// Gradient through one SAGE layer given the gradient at its output.
Matrix sage_backward(const Matrix& input, const Matrix& aggregated, const Matrix& output,
                     const Matrix& d_output, const MeanAggregator& aggregator,
                     const SageLayer& layer, SageLayer& grad) {
  Matrix d_pre = d_output;
  if (layer.rectify) d_pre.array() *= (output.array() > 0.0).cast<double>();
  grad.w_self.noalias() += input.transpose() * d_pre;
  grad.w_neigh.noalias() += aggregated.transpose() * d_pre;
  grad.bias += d_pre.colwise().sum().transpose();
  Matrix d_input = d_pre * layer.w_self.transpose();
  d_input += aggregator.apply_transpose(d_pre * layer.w_neigh.transpose());
  return d_input;
}

}  // namespace

const char* domain_name(Domain domain) {
  return domain == Domain::kSource ? "source" : "target";
}

EncoderParams init_encoder(const EncoderShape& shape, RandomStream& rng) {
  if (shape.source_dim <= 0 || shape.target_dim <= 0 || shape.hidden_width <= 0 ||
      shape.output_width <= 0) {
    throw std::invalid_argument("init_encoder: all widths must be positive");
  }
  EncoderParams params;
  params.source_mlp = init_dense(shape.source_dim, shape.hidden_width, rng);
  params.target_mlp = init_dense(shape.target_dim, shape.hidden_width, rng);
  params.layer1 = init_sage(shape.hidden_width, shape.hidden_width, true, rng);
  params.layer2 = init_sage(shape.hidden_width, shape.output_width, false, rng);
  return params;
}

DomainPrompts init_prompts(int num_bases, int hidden_width, int output_width, RandomStream& rng) {
  if (num_bases <= 0) throw std::invalid_argument("init_prompts: need at least one basis");
  auto draw = [&](int width) {
    Matrix b(num_bases, width);
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, j) = rng.normal(0.0, 0.01);
    return PromptBank{b};
  };
  DomainPrompts prompts;
  prompts.layer1 = draw(hidden_width);
  prompts.layer2 = draw(output_width);
  return prompts;
}

EncoderParams zeros_like(const EncoderParams& p) {
  auto dense = [](const DenseLayer& d) {
    return DenseLayer{Matrix::Zero(d.weight.rows(), d.weight.cols()), Vector::Zero(d.bias.size())};
  };
  auto sage = [](const SageLayer& s) {
    SageLayer z;
    z.w_self = Matrix::Zero(s.w_self.rows(), s.w_self.cols());
    z.w_neigh = Matrix::Zero(s.w_neigh.rows(), s.w_neigh.cols());
    z.bias = Vector::Zero(s.bias.size());
    z.rectify = s.rectify;
    return z;
  };
  return EncoderParams{dense(p.source_mlp), dense(p.target_mlp), sage(p.layer1), sage(p.layer2)};
}

DomainPrompts zeros_like(const DomainPrompts& p) {
  return DomainPrompts{
      PromptBank{Matrix::Zero(p.layer1.bases.rows(), p.layer1.bases.cols())},
      PromptBank{Matrix::Zero(p.layer2.bases.rows(), p.layer2.bases.cols())}};
}

Matrix mlp_preprocess(const Matrix& features, Domain domain, const EncoderParams& params) {
  const DenseLayer& mlp = params.mlp(domain);
  require_width(features.cols(), mlp.weight.rows(), "mlp_preprocess");
  return rectified(affine(features, mlp.weight, mlp.bias));
}

Matrix sage_layer(const Matrix& embeddings, const MeanAggregator& aggregator,
                  const SageLayer& layer) {
  require_width(embeddings.cols(), layer.in_width(), "sage_layer");
  if (embeddings.rows() != aggregator.num_nodes()) {
    throw std::invalid_argument("sage_layer: embedding rows do not match graph size");
  }
  Matrix pre = affine(embeddings, layer.w_self, layer.bias);
  pre.noalias() += aggregator.apply(embeddings) * layer.w_neigh;
  return layer.rectify ? rectified(pre) : pre;
}

Matrix sage_layer(const Matrix& embeddings, const EdgeMask& mask, const SageLayer& layer) {
  return sage_layer(embeddings, MeanAggregator(static_cast<int>(embeddings.rows()), mask.kept),
                    layer);
}

Matrix prompt_weights(const Matrix& embeddings, const PromptBank& bank) {
  check_bank(embeddings, bank);
  return softmax_rows(embeddings * bank.bases.transpose());
}

Matrix enhance(const Matrix& embeddings, const PromptBank& bank) {
  return embeddings + prompt_weights(embeddings, bank) * bank.bases;
}

EncoderTrace encode_forward(const Matrix& input, const MeanAggregator& aggregator, Domain domain,
                            const EncoderParams& params, const DomainPrompts* prompts) {
  const DenseLayer& mlp = params.mlp(domain);
  require_width(input.cols(), mlp.weight.rows(), "encode");
  EncoderTrace t;
  t.prompted = prompts != nullptr;
  t.input = input;
  t.mlp_pre = affine(input, mlp.weight, mlp.bias);
  t.h0 = rectified(t.mlp_pre);

  t.agg0 = aggregator.apply(t.h0);
  t.pre1 = affine(t.h0, params.layer1.w_self, params.layer1.bias);
  t.pre1.noalias() += t.agg0 * params.layer1.w_neigh;
  t.h1 = params.layer1.rectify ? rectified(t.pre1) : t.pre1;
  if (t.prompted) {
    t.alpha1 = prompt_weights(t.h1, prompts->layer1);
    t.z1 = t.h1 + t.alpha1 * prompts->layer1.bases;
  } else {
    t.z1 = t.h1;
  }

  t.agg1 = aggregator.apply(t.z1);
  Matrix pre2 = affine(t.z1, params.layer2.w_self, params.layer2.bias);
  pre2.noalias() += t.agg1 * params.layer2.w_neigh;
  t.h2 = params.layer2.rectify ? rectified(pre2) : pre2;
  if (t.prompted) {
    t.alpha2 = prompt_weights(t.h2, prompts->layer2);
    t.out = t.h2 + t.alpha2 * prompts->layer2.bases;
  } else {
    t.out = t.h2;
  }
  return t;
}

void encode_backward(const EncoderTrace& t, const Matrix& d_out, const MeanAggregator& aggregator,
                     Domain domain, const EncoderParams& params, const DomainPrompts* prompts,
                     EncoderParams& grad, DomainPrompts* prompt_grad) {
  Matrix d_h2;
  if (t.prompted) {
    enhance_backward(t.h2, t.alpha2, prompts->layer2, d_out, d_h2,
                     prompt_grad ? &prompt_grad->layer2.bases : nullptr);
  } else {
    d_h2 = d_out;
  }
  const Matrix d_z1 =
      sage_backward(t.z1, t.agg1, t.h2, d_h2, aggregator, params.layer2, grad.layer2);

  Matrix d_h1;
  if (t.prompted) {
    enhance_backward(t.h1, t.alpha1, prompts->layer1, d_z1, d_h1,
                     prompt_grad ? &prompt_grad->layer1.bases : nullptr);
  } else {
    d_h1 = d_z1;
  }
  Matrix d_h0 = sage_backward(t.h0, t.agg0, t.h1, d_h1, aggregator, params.layer1, grad.layer1);

  d_h0.array() *= (t.mlp_pre.array() > 0.0).cast<double>();
  DenseLayer& mlp_grad = grad.mlp(domain);
  mlp_grad.weight.noalias() += t.input.transpose() * d_h0;
  mlp_grad.bias += d_h0.colwise().sum().transpose();
}

Matrix encode(const AttributedGraph& graph, const EdgeMask& mask, Domain domain,
              const EncoderParams& params, const DomainPrompts* prompts, bool corrupted,
              RandomStream& rng) {
  const MeanAggregator aggregator(graph.num_nodes, mask.kept);
  const Matrix input = corrupted ? corrupt_features(graph, rng) : graph.features;
  return encode_forward(input, aggregator, domain, params, prompts).out;
}

}  // namespace xgad
