#pragma once

#include "xgad/graph.hpp"

namespace xgad {

enum class Domain { kSource, kTarget };

const char* domain_name(Domain domain);

inline constexpr int kDefaultHiddenWidth = 256;
inline constexpr int kDefaultOutputWidth = 64;

// Affine map followed by rectification. weight is (in x out).
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

// GraphSAGE mean-aggregator convolution:
//   h'_i = act(W_self^T h_i + W_neigh^T mean_{j in N(i)} h_j + b)
struct SageLayer {
  Matrix w_self;   // in x out
  Matrix w_neigh;  // in x out
  Vector bias;
  bool rectify = true;

  int in_width() const { return static_cast<int>(w_self.rows()); }
  int out_width() const { return static_cast<int>(w_self.cols()); }
};

// m learnable basis vectors stored as rows (m x width).
struct PromptBank {
  Matrix bases;

  int size() const { return static_cast<int>(bases.rows()); }
  int width() const { return static_cast<int>(bases.cols()); }
};

// One bank per encoder layer for a single domain.
struct DomainPrompts {
  PromptBank layer1;
  PromptBank layer2;
};

struct EncoderParams {
  DenseLayer source_mlp;
  DenseLayer target_mlp;
  SageLayer layer1;
  SageLayer layer2;

  const DenseLayer& mlp(Domain domain) const {
    return domain == Domain::kSource ? source_mlp : target_mlp;
  }
  DenseLayer& mlp(Domain domain) { return domain == Domain::kSource ? source_mlp : target_mlp; }
  int input_width(Domain domain) const { return static_cast<int>(mlp(domain).weight.rows()); }
  int output_width() const { return layer2.out_width(); }
};

struct EncoderShape {
  int source_dim = 0;
  int target_dim = 0;
  int hidden_width = kDefaultHiddenWidth;
  int output_width = kDefaultOutputWidth;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
EncoderParams init_encoder(const EncoderShape& shape, RandomStream& rng);
// Bases ~ N(0, 0.01^2).
DomainPrompts init_prompts(int num_bases, int hidden_width, int output_width, RandomStream& rng);

EncoderParams zeros_like(const EncoderParams& params);
DomainPrompts zeros_like(const DomainPrompts& prompts);

Matrix mlp_preprocess(const Matrix& features, Domain domain, const EncoderParams& params);

Matrix sage_layer(const Matrix& embeddings, const MeanAggregator& aggregator, const SageLayer& layer);
Matrix sage_layer(const Matrix& embeddings, const EdgeMask& mask, const SageLayer& layer);

// Row-wise softmax of h_i . p_j over the bank (n x m).
Matrix prompt_weights(const Matrix& embeddings, const PromptBank& bank);

// z_i = h_i + sum_j alpha_ij p_j.
Matrix enhance(const Matrix& embeddings, const PromptBank& bank);

// Full encoder. Without prompts this is the contrastive branch (H); with
// prompts it is the detection branch (Z), enhancing after each layer.
Matrix encode(const AttributedGraph& graph, const EdgeMask& mask, Domain domain,
              const EncoderParams& params, const DomainPrompts* prompts, bool corrupted,
              RandomStream& rng);

// Intermediate activations of one forward pass, kept for backprop.
struct EncoderTrace {
  Matrix input;
  Matrix mlp_pre;
  Matrix h0;
  Matrix agg0;
  Matrix pre1;
  Matrix h1;
  Matrix alpha1;
  Matrix z1;
  Matrix agg1;
  Matrix h2;
  Matrix alpha2;
  Matrix out;
  bool prompted = false;
};

EncoderTrace encode_forward(const Matrix& input, const MeanAggregator& aggregator, Domain domain,
                            const EncoderParams& params, const DomainPrompts* prompts);

// Accumulates (+=) parameter gradients of a scalar whose gradient with
// respect to trace.out is `d_out`.
void encode_backward(const EncoderTrace& trace, const Matrix& d_out,
                     const MeanAggregator& aggregator, Domain domain, const EncoderParams& params,
                     const DomainPrompts* prompts, EncoderParams& grad, DomainPrompts* prompt_grad);

}  // namespace xgad
