#pragma once

#include <string>
#include <vector>

#include "xgad/contrastive.hpp"
#include "xgad/detection.hpp"
#include "xgad/encoder.hpp"

namespace xgad {

// One bilinear discriminator per loss context.
struct Discriminators {
  Discriminator intra_source;
  Discriminator intra_target;
  Discriminator inter;
};

// Which side of the model a tensor belongs to. Self-training only touches
// kTarget and kShared.
enum class ParamGroup { kSource, kTarget, kShared, kDiscriminator };

struct ModelShape {
  EncoderShape encoder;
  int num_bases = 5;
};

// Every learnable parameter of the detector.
struct ModelState {
  EncoderParams encoder;
  DomainPrompts source_prompts;
  DomainPrompts target_prompts;
  Discriminators disc;
  CenterSet centers;
  // When false the detection branch skips prompt enhancement entirely.
  bool use_prompts = true;

  const DomainPrompts* prompts(Domain domain) const {
    if (!use_prompts) return nullptr;
    return domain == Domain::kSource ? &source_prompts : &target_prompts;
  }
  DomainPrompts& prompts_mut(Domain domain) {
    return domain == Domain::kSource ? source_prompts : target_prompts;
  }
  const Discriminator& intra_disc(Domain domain) const {
    return domain == Domain::kSource ? disc.intra_source : disc.intra_target;
  }
  Discriminator& intra_disc(Domain domain) {
    return domain == Domain::kSource ? disc.intra_source : disc.intra_target;
  }
  ModelShape shape() const;
};

ModelState init_model(const ModelShape& shape, RandomStream& rng);
ModelState zeros_like(const ModelState& state);

template <typename T>
struct BasicTensorRef {
  std::string name;
  ParamGroup group;
  T* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
};
using TensorRef = BasicTensorRef<double>;
using ConstTensorRef = BasicTensorRef<const double>;

// Flat views over every tensor in a fixed order. The order and names are
// stable and are used by the optimizer, the gradient checker and
// checkpoints.
std::vector<TensorRef> tensors(ModelState& state);
std::vector<ConstTensorRef> tensors(const ModelState& state);

std::size_t parameter_count(const ModelState& state);

// Largest absolute elementwise difference; throws if shapes differ.
double max_abs_difference(const ModelState& a, const ModelState& b);

}  // namespace xgad
