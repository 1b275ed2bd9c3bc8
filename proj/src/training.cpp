#include "xgad/training.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>

#include "xgad/tsv.hpp"

namespace xgad {
namespace {

using nlohmann::json;

// Denominator floor for relative gradient errors. Entries whose analytic
// and numeric gradients are both below it are compared in absolute terms.
constexpr double kRelativeErrorFloor = 1e-6;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("invalid training config: " + message);
}

void require_finite(double value, const char* term, int epoch) {
  if (!std::isfinite(value)) {
    throw TrainingError(std::string("non-finite loss term '") + term + "' at epoch " +
                        std::to_string(epoch));
  }
}

const char* pairing_name(LabelPairing p) {
  return p == LabelPairing::kNormalsInside ? "normals-inside" : "as-printed";
}

LabelPairing parse_pairing(const std::string& s) {
  if (s == "normals-inside") return LabelPairing::kNormalsInside;
  if (s == "as-printed") return LabelPairing::kAsPrinted;
  throw std::invalid_argument("unknown label pairing '" + s + "'");
}

void add_broadcast(Matrix& m, const Vector& v) { m.rowwise() += v.transpose(); }

// Forward state for one domain within a joint-training epoch.
struct DomainPass {
  MeanAggregator aggregator;
  EncoderTrace clean;
  EncoderTrace corrupted;
  EncoderTrace detect;
  Vector readout;
  Vector readout_corrupted;
};

DomainPass run_domain(const ModelState& state, Domain domain, const AttributedGraph& graph,
                      const EdgeMask& mask, const std::vector<int>& perm, bool with_contrast) {
  DomainPass pass{MeanAggregator(graph.num_nodes, mask.kept), {}, {}, {}, {}, {}};
  if (with_contrast) {
    pass.clean = encode_forward(graph.features, pass.aggregator, domain, state.encoder, nullptr);
    pass.corrupted = encode_forward(permute_rows(graph.features, perm), pass.aggregator, domain,
                                    state.encoder, nullptr);
    pass.readout = readout_mean(pass.clean.out);
    pass.readout_corrupted = readout_mean(pass.corrupted.out);
  }
  pass.detect = encode_forward(graph.features, pass.aggregator, domain, state.encoder,
                               state.prompts(domain));
  return pass;
}

void accumulate_center_grad(ModelState& grad, const ModelState& state, Domain domain,
                            const Vector& d_center) {
  Vector& offset = domain == Domain::kSource ? grad.centers.source_offset
                                             : grad.centers.target_offset;
  offset += d_center;
  if (!state.centers.independent) grad.centers.shared += d_center;
}

std::vector<int> all_nodes(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Vector mean_rows(const Matrix& m, std::span<const int> rows) {
  Vector acc = Vector::Zero(m.cols());
  for (int r : rows) acc += m.row(r).transpose();
  return acc / static_cast<double>(rows.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be positive");
  require(std::isfinite(alpha_balance) && alpha_balance >= 0.0,
          "alpha_balance must be nonnegative");
  require(drop_p >= 0.0 && drop_p <= 1.0, "drop_p must lie in [0, 1]");
  require(m_bases >= 1, "m_bases must be at least 1");
  require(beta1 > 0.0 && beta1 < 1.0, "beta1 must lie in (0, 1)");
  require(beta2 > 0.0 && beta2 < 1.0, "beta2 must lie in (0, 1)");
  require(beta1 + beta2 <= 1.0, "beta1 + beta2 must not exceed 1");
  require(epochs_joint >= 0, "epochs_joint must be nonnegative");
  require(epochs_self >= 0, "epochs_self must be nonnegative");
  require(shots >= 1, "shots (K) must be at least 1");
  require(hidden_width >= 1 && output_width >= 1, "layer widths must be positive");
  require(clamp_eps > 0.0 && clamp_eps < 0.5, "clamp_eps must lie in (0, 0.5)");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
}

std::string config_to_json(const TrainConfig& c) {
  const PipelineSwitches& s = c.switches;
  const json j = {
      {"learning_rate", c.learning_rate},
      {"alpha_balance", c.alpha_balance},
      {"drop_p", c.drop_p},
      {"m_bases", c.m_bases},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"epochs_joint", c.epochs_joint},
      {"epochs_self", c.epochs_self},
      {"shots", c.shots},
      {"seed", c.seed},
      {"hidden_width", c.hidden_width},
      {"output_width", c.output_width},
      {"clamp_eps", c.clamp_eps},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_eps", c.adam_eps},
      {"switches",
       {{"use_prompts", s.use_prompts},
        {"use_intra", s.use_intra},
        {"use_inter", s.use_inter},
        {"independent_centers", s.independent_centers},
        {"use_source", s.use_source},
        {"self_train", s.self_train},
        {"contrast_in_update", s.contrast_in_update},
        {"pairing", pairing_name(s.pairing)}}},
  };
  return j.dump(2) + "\n";
}

TrainConfig config_from_json(const std::string& text, const TrainConfig& base,
                             const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(origin, "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(origin, "expected a JSON object");
  TrainConfig c = base;
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.alpha_balance = j.value("alpha_balance", c.alpha_balance);
    c.drop_p = j.value("drop_p", c.drop_p);
    c.m_bases = j.value("m_bases", c.m_bases);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epochs_joint = j.value("epochs_joint", c.epochs_joint);
    c.epochs_self = j.value("epochs_self", c.epochs_self);
    c.shots = j.value("shots", c.shots);
    c.seed = j.value("seed", c.seed);
    c.hidden_width = j.value("hidden_width", c.hidden_width);
    c.output_width = j.value("output_width", c.output_width);
    c.clamp_eps = j.value("clamp_eps", c.clamp_eps);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    if (j.contains("switches")) {
      const json& s = j.at("switches");
      PipelineSwitches& w = c.switches;
      w.use_prompts = s.value("use_prompts", w.use_prompts);
      w.use_intra = s.value("use_intra", w.use_intra);
      w.use_inter = s.value("use_inter", w.use_inter);
      w.independent_centers = s.value("independent_centers", w.independent_centers);
      w.use_source = s.value("use_source", w.use_source);
      w.self_train = s.value("self_train", w.self_train);
      w.contrast_in_update = s.value("contrast_in_update", w.contrast_in_update);
      if (s.contains("pairing")) w.pairing = parse_pairing(s.at("pairing").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw FormatError(origin, e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(origin, e.what());
  }
  return c;
}

std::string config_hash(const TrainConfig& config) {
  return sha256_hex(config_to_json(config)).substr(0, 16);
}

// ---------------------------------------------------------------------------
// Bundles

DomainBundle make_bundle(AttributedGraph source, AttributedGraph target, int shots,
                         std::uint64_t seed, const std::function<int(int)>& label_of) {
  if (!source.labels) throw std::invalid_argument("make_bundle: source graph must be labelled");
  DomainBundle b;
  b.target_split = make_split(target, seed);
  b.target_labeled = sample_few_shot(b.target_split.train, label_of, shots, seed);
  target.labels.reset();
  b.source = std::move(source);
  b.target = std::move(target);
  return b;
}

DomainBundle make_bundle(AttributedGraph source, AttributedGraph target, int shots,
                         std::uint64_t seed) {
  if (!target.labels) throw std::invalid_argument("make_bundle: target graph has no labels");
  const std::vector<int> y = *target.labels;
  return make_bundle(std::move(source), std::move(target), shots, seed,
                     [&y](int node) { return y.at(static_cast<std::size_t>(node)); });
}

std::vector<int> unlabeled_train_nodes(const DomainBundle& bundle) {
  const std::set<int> labeled(bundle.target_labeled.begin(), bundle.target_labeled.end());
  std::vector<int> out;
  for (int node : bundle.target_split.train) {
    if (!labeled.count(node)) out.push_back(node);
  }
  return out;
}

LabeledNodes joint_target_labels(const DomainBundle& bundle) {
  const std::set<int> labeled(bundle.target_labeled.begin(), bundle.target_labeled.end());
  LabeledNodes out;
  out.nodes = bundle.target_split.train;
  out.labels.reserve(out.nodes.size());
  for (int node : out.nodes) out.labels.push_back(labeled.count(node) ? 1 : 0);
  return out;
}

// ---------------------------------------------------------------------------
// Objective

EpochSample draw_epoch_sample(const DomainBundle& bundle, double drop_p, RandomStream& augment,
                              RandomStream& corrupt) {
  EpochSample s;
  s.source_mask = drop_edges(bundle.source, drop_p, augment);
  s.target_mask = drop_edges(bundle.target, drop_p, augment);
  s.source_perm = corrupt.permutation(bundle.source.num_nodes);
  s.target_perm = corrupt.permutation(bundle.target.num_nodes);
  return s;
}

LossBreakdown joint_objective(const ModelState& state, const DomainBundle& bundle,
                              const EpochSample& sample, const TrainConfig& config,
                              ModelState* grad) {
  const PipelineSwitches& sw = config.switches;
  const bool with_source = sw.use_source;
  const bool with_intra = sw.use_intra;
  const bool with_inter = sw.use_inter && with_source;
  const bool with_contrast = with_intra || with_inter;
  const double eps = config.clamp_eps;
  const double contrast_scale = sw.contrast_in_update ? config.alpha_balance : 0.0;

  if (grad) *grad = zeros_like(state);
  LossBreakdown out;

  DomainPass target = run_domain(state, Domain::kTarget, bundle.target, sample.target_mask,
                                 sample.target_perm, with_contrast);
  std::optional<DomainPass> source;
  if (with_source) {
    source = run_domain(state, Domain::kSource, bundle.source, sample.source_mask,
                        sample.source_perm, with_contrast);
  }

  // Contrastive terms: gradients with respect to clean/corrupted node
  // embeddings and their readouts, per domain.
  struct ContrastGrad {
    Matrix d_clean;
    Matrix d_corrupted;
    Vector d_readout;
    Vector d_readout_corrupted;
  };
  auto zero_contrast = [&](const DomainPass& p) {
    return ContrastGrad{Matrix::Zero(p.clean.out.rows(), p.clean.out.cols()),
                        Matrix::Zero(p.corrupted.out.rows(), p.corrupted.out.cols()),
                        Vector::Zero(p.readout.size()), Vector::Zero(p.readout.size())};
  };
  ContrastGrad target_cg;
  ContrastGrad source_cg;
  if (with_contrast) {
    target_cg = zero_contrast(target);
    if (source) source_cg = zero_contrast(*source);
  }

  if (with_intra) {
    auto intra = [&](Domain d, const DomainPass& p, ContrastGrad& cg) {
      IntraGrad g;
      const double value = intra_loss_grad(p.clean.out, p.corrupted.out, p.readout,
                                           state.intra_disc(d), eps, g);
      cg.d_clean += g.d_clean;
      cg.d_corrupted += g.d_corrupted;
      cg.d_readout += g.d_readout;
      if (grad) grad->intra_disc(d).weight += contrast_scale * g.d_weight;
      return value;
    };
    out.contrastive.target_intra = intra(Domain::kTarget, target, target_cg);
    if (source) out.contrastive.source_intra = intra(Domain::kSource, *source, source_cg);
  }
  if (with_inter) {
    InterGrad g;
    out.contrastive.target_inter = inter_loss_grad(
        target.readout, source->readout, source->readout_corrupted, state.disc.inter, eps, g);
    target_cg.d_readout += g.d_anchor;
    source_cg.d_readout += g.d_positive;
    source_cg.d_readout_corrupted += g.d_negative;
    if (grad) grad->disc.inter.weight += contrast_scale * g.d_weight;

    out.contrastive.source_inter = inter_loss_grad(
        source->readout, target.readout, target.readout_corrupted, state.disc.inter, eps, g);
    source_cg.d_readout += g.d_anchor;
    target_cg.d_readout += g.d_positive;
    target_cg.d_readout_corrupted += g.d_negative;
    if (grad) grad->disc.inter.weight += contrast_scale * g.d_weight;
  }
  out.contrastive_total = contra_loss(out.contrastive);

  // Hypersphere terms.
  const LabeledNodes target_labels = joint_target_labels(bundle);
  DahscGrad target_dg;
  out.target = dahsc_loss_grad(target.detect.out, target_labels.nodes, target_labels.labels,
                               state.centers.effective(Domain::kTarget), eps, sw.pairing,
                               target_dg);
  DahscGrad source_dg;
  if (source) {
    if (!bundle.source.labels) throw std::invalid_argument("joint_objective: unlabeled source");
    const std::vector<int> nodes = all_nodes(bundle.source.num_nodes);
    out.source = dahsc_loss_grad(source->detect.out, nodes, *bundle.source.labels,
                                 state.centers.effective(Domain::kSource), eps, sw.pairing,
                                 source_dg);
  }
  out.total = total_loss(out.target, out.source, out.contrastive_total,
                         LossWeights{config.alpha_balance});

  if (!grad) return out;

  auto backward = [&](Domain d, const DomainPass& p, ContrastGrad& cg, const DahscGrad& dg) {
    DomainPrompts* prompt_grad = state.use_prompts ? &grad->prompts_mut(d) : nullptr;
    encode_backward(p.detect, dg.d_z, p.aggregator, d, state.encoder, state.prompts(d),
                    grad->encoder, prompt_grad);
    accumulate_center_grad(*grad, state, d, dg.d_center);
    if (!with_contrast || contrast_scale == 0.0) return;
    const double inv_n = 1.0 / static_cast<double>(p.clean.out.rows());
    add_broadcast(cg.d_clean, cg.d_readout * inv_n);
    add_broadcast(cg.d_corrupted, cg.d_readout_corrupted * inv_n);
    encode_backward(p.clean, contrast_scale * cg.d_clean, p.aggregator, d, state.encoder,
                    nullptr, grad->encoder, nullptr);
    encode_backward(p.corrupted, contrast_scale * cg.d_corrupted, p.aggregator, d,
                    state.encoder, nullptr, grad->encoder, nullptr);
  };
  backward(Domain::kTarget, target, target_cg, target_dg);
  if (source) backward(Domain::kSource, *source, source_cg, source_dg);
  return out;
}

// ---------------------------------------------------------------------------
// Training loops

ModelState initialize_state(const DomainBundle& bundle, const TrainConfig& config) {
  config.validate();
  const PipelineSwitches& sw = config.switches;
  ModelShape shape;
  shape.encoder.source_dim = bundle.source.feature_dim();
  shape.encoder.target_dim = bundle.target.feature_dim();
  shape.encoder.hidden_width = config.hidden_width;
  shape.encoder.output_width = config.output_width;
  shape.num_bases = config.m_bases;

  RandomStream rng = RandomStream::derive(config.seed, "init");
  ModelState state = init_model(shape, rng);
  if (!sw.use_prompts) {
    state.use_prompts = false;
    state.source_prompts = zeros_like(state.source_prompts);
    state.target_prompts = zeros_like(state.target_prompts);
  }
  state.centers.independent = sw.independent_centers;

  auto initial_embeddings = [&](Domain d, const AttributedGraph& g) {
    const MeanAggregator full(g.num_nodes, g.edges);
    return encode_forward(g.features, full, d, state.encoder, state.prompts(d)).out;
  };
  const Vector target_mean = mean_rows(initial_embeddings(Domain::kTarget, bundle.target),
                                       bundle.target_split.train);
  if (sw.independent_centers) {
    state.centers.target_offset = target_mean;
    if (sw.use_source) {
      state.centers.source_offset =
          readout_mean(initial_embeddings(Domain::kSource, bundle.source));
    }
  } else {
    state.centers.shared = target_mean;
  }
  return state;
}

Adam::Adam(const ModelState& like, double learning_rate, double beta1, double beta2, double eps)
    : first_(zeros_like(like)),
      second_(zeros_like(like)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(ModelState& params, const ModelState& grad,
                const std::function<bool(ParamGroup)>& updatable) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  auto p = tensors(params);
  const auto g = tensors(grad);
  auto m = tensors(first_);
  auto v = tensors(second_);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!updatable(p[k].group)) continue;
    for (Eigen::Index i = 0; i < p[k].size(); ++i) {
      const double gi = g[k].data[i];
      m[k].data[i] = beta1_ * m[k].data[i] + (1.0 - beta1_) * gi;
      v[k].data[i] = beta2_ * v[k].data[i] + (1.0 - beta2_) * gi * gi;
      const double m_hat = m[k].data[i] / c1;
      const double v_hat = v[k].data[i] / c2;
      p[k].data[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

TrainResult joint_train(const DomainBundle& bundle, const TrainConfig& config) {
  return joint_train(bundle, config, initialize_state(bundle, config));
}

TrainResult joint_train(const DomainBundle& bundle, const TrainConfig& config,
                        ModelState initial) {
  config.validate();
  TrainResult result{std::move(initial), {}};
  ModelState& state = result.state;
  RandomStream augment = RandomStream::derive(config.seed, "augment");
  RandomStream corrupt = RandomStream::derive(config.seed, "corrupt");
  Adam adam(state, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps);
  ModelState grad;
  for (int epoch = 1; epoch <= config.epochs_joint; ++epoch) {
    const EpochSample sample = draw_epoch_sample(bundle, config.drop_p, augment, corrupt);
    const LossBreakdown loss = joint_objective(state, bundle, sample, config, &grad);
    require_finite(loss.target, "target hypersphere", epoch);
    require_finite(loss.source, "source hypersphere", epoch);
    require_finite(loss.contrastive.source_intra, "source intra contrastive", epoch);
    require_finite(loss.contrastive.source_inter, "source inter contrastive", epoch);
    require_finite(loss.contrastive.target_intra, "target intra contrastive", epoch);
    require_finite(loss.contrastive.target_inter, "target inter contrastive", epoch);
    require_finite(loss.total, "total", epoch);
    result.trace.push_back(
        LossRecord{epoch, loss.target, loss.source, loss.contrastive_total, loss.total});
    adam.step(state, grad, [](ParamGroup) { return true; });
  }
  return result;
}

PseudoLabelSets pseudo_label(std::span<const double> scores, std::span<const int> eligible,
                             double beta1, double beta2) {
  if (!(beta1 >= 0.0 && beta1 <= 1.0 && beta2 >= 0.0 && beta2 <= 1.0)) {
    throw std::invalid_argument("pseudo_label: beta1 and beta2 must lie in [0, 1]");
  }
  if (beta1 + beta2 > 1.0) {
    throw std::invalid_argument("pseudo_label: beta1 + beta2 must not exceed 1");
  }
  if (eligible.empty()) throw std::invalid_argument("pseudo_label: no eligible nodes");
  const auto count = static_cast<double>(eligible.size());
  const auto n_top = static_cast<std::size_t>(std::ceil(beta1 * count));
  const auto n_bottom = static_cast<std::size_t>(std::ceil(beta2 * count));
  if (n_top + n_bottom > eligible.size()) {
    throw std::invalid_argument("pseudo_label: ceil(beta1 n) + ceil(beta2 n) exceeds n = " +
                                std::to_string(eligible.size()));
  }
  std::vector<int> order(eligible.begin(), eligible.end());
  for (int node : order) {
    if (node < 0 || static_cast<std::size_t>(node) >= scores.size()) {
      throw std::invalid_argument("pseudo_label: eligible node outside the score vector");
    }
  }
  // One ranking, most anomalous first; equal scores rank lower indices first.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  PseudoLabelSets sets;
  sets.anomalous.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_top));
  sets.normal.assign(order.end() - static_cast<std::ptrdiff_t>(n_bottom), order.end());
  std::sort(sets.anomalous.begin(), sets.anomalous.end());
  std::sort(sets.normal.begin(), sets.normal.end());
  return sets;
}

TrainResult self_train(ModelState state, const DomainBundle& bundle, const PseudoLabelSets& pseudo,
                       const TrainConfig& config) {
  config.validate();
  std::map<int, int> label_of;
  for (int node : pseudo.normal) label_of[node] = 0;
  for (int node : pseudo.anomalous) label_of[node] = 1;
  for (int node : bundle.target_labeled) label_of[node] = 1;
  if (label_of.empty()) throw std::invalid_argument("self_train: no labelled nodes");
  std::vector<int> nodes;
  std::vector<int> labels;
  for (const auto& [node, y] : label_of) {
    nodes.push_back(node);
    labels.push_back(y);
  }

  TrainResult result{std::move(state), {}};
  ModelState& s = result.state;
  const AttributedGraph& g = bundle.target;
  const MeanAggregator full(g.num_nodes, g.edges);
  Adam adam(s, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps);
  const auto target_side = [](ParamGroup group) {
    return group == ParamGroup::kTarget || group == ParamGroup::kShared;
  };
  for (int epoch = 1; epoch <= config.epochs_self; ++epoch) {
    const EncoderTrace trace =
        encode_forward(g.features, full, Domain::kTarget, s.encoder, s.prompts(Domain::kTarget));
    DahscGrad dg;
    const double loss =
        dahsc_loss_grad(trace.out, nodes, labels, s.centers.effective(Domain::kTarget),
                        config.clamp_eps, config.switches.pairing, dg);
    require_finite(loss, "target hypersphere (self-training)", epoch);
    result.trace.push_back(LossRecord{epoch, loss, 0.0, 0.0, loss});

    ModelState grad = zeros_like(s);
    DomainPrompts* prompt_grad = s.use_prompts ? &grad.target_prompts : nullptr;
    encode_backward(trace, dg.d_z, full, Domain::kTarget, s.encoder, s.prompts(Domain::kTarget),
                    grad.encoder, prompt_grad);
    accumulate_center_grad(grad, s, Domain::kTarget, dg.d_center);
    adam.step(s, grad, target_side);
  }
  return result;
}

Vector score_nodes(const ModelState& state, const AttributedGraph& graph) {
  const MeanAggregator full(graph.num_nodes, graph.edges);
  const EncoderTrace trace = encode_forward(graph.features, full, Domain::kTarget, state.encoder,
                                            state.prompts(Domain::kTarget));
  return anomaly_scores(trace.out, state.centers.effective(Domain::kTarget));
}

// ---------------------------------------------------------------------------
// Gradient check

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const ModelState& state, const DomainBundle& bundle,
                           const TrainConfig& config, const GradCheckOptions& options) {
  if (!(options.step > 0.0) || !std::isfinite(options.step)) {
    throw std::invalid_argument("grad_check: step must be a positive finite number");
  }
  if (options.samples < 1) throw std::invalid_argument("grad_check: need at least one sample");
  if (bundle.source.num_nodes + bundle.target.num_nodes > 50) {
    throw std::invalid_argument("grad_check: bundle must have at most 50 nodes in total");
  }
  if (!config.switches.contrast_in_update) {
    throw std::invalid_argument("grad_check: contrastive terms must be part of the update");
  }

  RandomStream rng = RandomStream::derive(options.seed, "gradcheck");
  RandomStream augment = rng.derive("augment");
  RandomStream corrupt = rng.derive("corrupt");
  const EpochSample sample = draw_epoch_sample(bundle, config.drop_p, augment, corrupt);

  ModelState analytic;
  joint_objective(state, bundle, sample, config, &analytic);
  auto grads = tensors(analytic);

  ModelState work = state;
  auto params = tensors(work);
  const std::size_t per_tensor =
      (static_cast<std::size_t>(options.samples) + params.size() - 1) / params.size();

  GradCheckReport report;
  bool mutated = false;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto size = static_cast<int>(params[k].size());
    std::vector<int> picks = rng.permutation(size);
    picks.resize(std::min<std::size_t>(per_tensor, picks.size()));
    for (int idx : picks) {
      double a = grads[k].data[idx];
      if (options.mutate_tensor && *options.mutate_tensor == params[k].name && !mutated) {
        a += 1.0;
        mutated = true;
      }
      double& p = params[k].data[idx];
      const double original = p;
      p = original + options.step;
      const double up = joint_objective(work, bundle, sample, config, nullptr).total;
      p = original - options.step;
      const double down = joint_objective(work, bundle, sample, config, nullptr).total;
      p = original;
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(a, numeric);
      ++report.checked;
      if (err > report.max_rel_error || report.worst_tensor.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        report.worst_tensor = params[k].name;
        report.worst_index = idx;
      }
    }
  }
  if (options.mutate_tensor && !mutated) {
    throw std::invalid_argument("grad_check: unknown tensor '" + *options.mutate_tensor + "'");
  }
  return report;
}

}  // namespace xgad
