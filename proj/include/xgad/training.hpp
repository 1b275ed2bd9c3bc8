#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "xgad/dataset.hpp"
#include "xgad/model.hpp"

namespace xgad {

// Raised when a loss term becomes non-finite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Switches used by the ablation variants. The defaults are the full model.
struct PipelineSwitches {
  bool use_prompts = true;
  bool use_intra = true;
  bool use_inter = true;
  bool independent_centers = false;
  bool use_source = true;
  bool self_train = true;
  // When false the contrastive terms are still evaluated and logged but
  // contribute nothing to the parameter update.
  bool contrast_in_update = true;
  LabelPairing pairing = LabelPairing::kNormalsInside;
};

struct TrainConfig {
  double learning_rate = 0.0005;
  double alpha_balance = 0.5;
  double drop_p = 0.1;
  int m_bases = 5;
  double beta1 = 0.02;
  double beta2 = 0.25;
  int epochs_joint = 50;
  int epochs_self = 100;
  int shots = 1;
  std::uint64_t seed = 0;
  int hidden_width = kDefaultHiddenWidth;
  int output_width = kDefaultOutputWidth;
  double clamp_eps = kClampEps;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  PipelineSwitches switches;

  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

std::string config_to_json(const TrainConfig& config);
// Keys present in `text` override `base`. Throws FormatError.
TrainConfig config_from_json(const std::string& text, const TrainConfig& base = {},
                             const std::string& origin = "<config>");
// Short digest of the canonical JSON form.
std::string config_hash(const TrainConfig& config);

// Source graph (fully labelled) plus target graph whose labels are hidden
// except for the K labelled anomalies.
struct DomainBundle {
  AttributedGraph source;
  AttributedGraph target;
  SplitMasks target_split;
  std::vector<int> target_labeled;
};

// Splits the target, samples K train-mask anomalies and drops every other
// target label. `label_of` is only queried for train-mask nodes.
DomainBundle make_bundle(AttributedGraph source, AttributedGraph target, int shots,
                         std::uint64_t seed, const std::function<int(int)>& label_of);
DomainBundle make_bundle(AttributedGraph source, AttributedGraph target, int shots,
                         std::uint64_t seed);

// Target training nodes that carry no ground-truth label.
std::vector<int> unlabeled_train_nodes(const DomainBundle& bundle);

struct LossRecord {
  int epoch = 0;
  double target = 0.0;
  double source = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
};

// Randomness consumed by one joint-training epoch.
struct EpochSample {
  EdgeMask source_mask;
  EdgeMask target_mask;
  std::vector<int> source_perm;
  std::vector<int> target_perm;
};

EpochSample draw_epoch_sample(const DomainBundle& bundle, double drop_p, RandomStream& augment,
                              RandomStream& corrupt);

struct LossBreakdown {
  double target = 0.0;
  double source = 0.0;
  ContrastiveTerms contrastive;
  double contrastive_total = 0.0;
  double total = 0.0;
};

// Joint objective L_t + L_s + alpha * L_contra for one epoch sample. When
// `grad` is non-null it receives the gradient (overwritten, same shape as
// `state`).
LossBreakdown joint_objective(const ModelState& state, const DomainBundle& bundle,
                              const EpochSample& sample, const TrainConfig& config,
                              ModelState* grad);

// Labelled target nodes used during joint training: every train-mask node,
// y = 1 for the K labelled anomalies and y = 0 otherwise.
struct LabeledNodes {
  std::vector<int> nodes;
  std::vector<int> labels;
};
LabeledNodes joint_target_labels(const DomainBundle& bundle);

// Fresh parameters with centers placed at the mean initial embedding.
ModelState initialize_state(const DomainBundle& bundle, const TrainConfig& config);

// Adam over all tensors whose group is enabled.
class Adam {
 public:
  Adam(const ModelState& like, double learning_rate, double beta1, double beta2, double eps);

  void step(ModelState& params, const ModelState& grad,
            const std::function<bool(ParamGroup)>& updatable);

 private:
  ModelState first_;
  ModelState second_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  int t_ = 0;
};

struct TrainResult {
  ModelState state;
  std::vector<LossRecord> trace;
};

TrainResult joint_train(const DomainBundle& bundle, const TrainConfig& config);
TrainResult joint_train(const DomainBundle& bundle, const TrainConfig& config, ModelState initial);

struct PseudoLabelSets {
  std::vector<int> anomalous;
  std::vector<int> normal;
};

// Top ceil(beta1 |E|) and bottom ceil(beta2 |E|) eligible nodes by score,
// ties broken by ascending node index.
PseudoLabelSets pseudo_label(std::span<const double> scores, std::span<const int> eligible,
                             double beta1, double beta2);

// Target-only refinement on pseudo labels plus the K true anomalies, using
// the full target adjacency. Trace records carry only the target term.
TrainResult self_train(ModelState state, const DomainBundle& bundle, const PseudoLabelSets& pseudo,
                       const TrainConfig& config);

// Detection-branch anomaly scores for every node of `graph` under the full
// adjacency, against the effective target center.
Vector score_nodes(const ModelState& state, const AttributedGraph& graph);

struct GradCheckOptions {
  double step = 1e-5;
  int samples = 200;
  std::uint64_t seed = 0;
  // Adds 1.0 to one analytic gradient entry of this tensor before comparing.
  std::optional<std::string> mutate_tensor;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_index = 0;
  int checked = 0;
};

// Compares analytic gradients of the joint objective with central finite
// differences on a stratified sample covering every tensor.
GradCheckReport grad_check(const ModelState& state, const DomainBundle& bundle,
                           const TrainConfig& config, const GradCheckOptions& options);

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric);

}  // namespace xgad
