#include "xgad/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xgad {
namespace {

template <typename State, typename Ref>
std::vector<Ref> collect(State& s) {
  std::vector<Ref> out;
  auto add = [&](const char* name, ParamGroup group, auto& m) {
    out.push_back(Ref{name, group, m.data(), m.rows(), m.cols()});
  };
  add("source_mlp.weight", ParamGroup::kSource, s.encoder.source_mlp.weight);
  add("source_mlp.bias", ParamGroup::kSource, s.encoder.source_mlp.bias);
  add("target_mlp.weight", ParamGroup::kTarget, s.encoder.target_mlp.weight);
  add("target_mlp.bias", ParamGroup::kTarget, s.encoder.target_mlp.bias);
  add("layer1.w_self", ParamGroup::kShared, s.encoder.layer1.w_self);
  add("layer1.w_neigh", ParamGroup::kShared, s.encoder.layer1.w_neigh);
  add("layer1.bias", ParamGroup::kShared, s.encoder.layer1.bias);
  add("layer2.w_self", ParamGroup::kShared, s.encoder.layer2.w_self);
  add("layer2.w_neigh", ParamGroup::kShared, s.encoder.layer2.w_neigh);
  add("layer2.bias", ParamGroup::kShared, s.encoder.layer2.bias);
  add("source_prompts.layer1", ParamGroup::kSource, s.source_prompts.layer1.bases);
  add("source_prompts.layer2", ParamGroup::kSource, s.source_prompts.layer2.bases);
  add("target_prompts.layer1", ParamGroup::kTarget, s.target_prompts.layer1.bases);
  add("target_prompts.layer2", ParamGroup::kTarget, s.target_prompts.layer2.bases);
  add("disc.intra_source", ParamGroup::kDiscriminator, s.disc.intra_source.weight);
  add("disc.intra_target", ParamGroup::kDiscriminator, s.disc.intra_target.weight);
  add("disc.inter", ParamGroup::kDiscriminator, s.disc.inter.weight);
  add("center.shared", ParamGroup::kShared, s.centers.shared);
  add("center.source", ParamGroup::kSource, s.centers.source_offset);
  add("center.target", ParamGroup::kTarget, s.centers.target_offset);
  return out;
}

Matrix init_bilinear(int width, RandomStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  Matrix w(width, width);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

ModelShape ModelState::shape() const {
  ModelShape s;
  s.encoder.source_dim = encoder.input_width(Domain::kSource);
  s.encoder.target_dim = encoder.input_width(Domain::kTarget);
  s.encoder.hidden_width = encoder.layer1.out_width();
  s.encoder.output_width = encoder.output_width();
  s.num_bases = source_prompts.layer1.size();
  return s;
}

ModelState init_model(const ModelShape& shape, RandomStream& rng) {
  ModelState s;
  s.encoder = init_encoder(shape.encoder, rng);
  s.source_prompts = init_prompts(shape.num_bases, shape.encoder.hidden_width,
                                  shape.encoder.output_width, rng);
  s.target_prompts = init_prompts(shape.num_bases, shape.encoder.hidden_width,
                                  shape.encoder.output_width, rng);
  const int k = shape.encoder.output_width;
  s.disc.intra_source.weight = init_bilinear(k, rng);
  s.disc.intra_target.weight = init_bilinear(k, rng);
  s.disc.inter.weight = init_bilinear(k, rng);
  s.centers.shared = Vector::Zero(k);
  s.centers.source_offset = Vector::Zero(k);
  s.centers.target_offset = Vector::Zero(k);
  return s;
}

ModelState zeros_like(const ModelState& state) {
  ModelState z = state;
  for (TensorRef& t : tensors(z)) std::fill_n(t.data, t.size(), 0.0);
  return z;
}

std::vector<TensorRef> tensors(ModelState& state) {
  return collect<ModelState, TensorRef>(state);
}

std::vector<ConstTensorRef> tensors(const ModelState& state) {
  return collect<const ModelState, ConstTensorRef>(state);
}

std::size_t parameter_count(const ModelState& state) {
  std::size_t total = 0;
  for (const auto& t : tensors(state)) total += static_cast<std::size_t>(t.size());
  return total;
}

double max_abs_difference(const ModelState& a, const ModelState& b) {
  const auto ta = tensors(a);
  const auto tb = tensors(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].rows != tb[k].rows || ta[k].cols != tb[k].cols) {
      throw std::invalid_argument("max_abs_difference: shape mismatch in " + ta[k].name);
    }
    for (Eigen::Index i = 0; i < ta[k].size(); ++i) {
      worst = std::max(worst, std::abs(ta[k].data[i] - tb[k].data[i]));
    }
  }
  return worst;
}

}  // namespace xgad
