#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xgad/metrics.hpp"
#include "xgad/training.hpp"

namespace xgad {

enum class Variant {
  kFull,
  kNoPrompt,     // no domain-specific prompt tokens
  kNoIntra,      // drop the intra-domain contrastive terms
  kNoContra,     // drop all contrastive terms
  kHscOnly,      // two unrelated per-domain centers, no shared center
  kNoSource,     // ignore the source graph
  kNoSelfTrain,  // stop after joint training
};

std::string_view variant_name(Variant variant);
std::optional<Variant> parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();

// Config with the variant's pipeline switches applied.
TrainConfig apply_variant(TrainConfig config, Variant variant);

struct MetricReport {
  std::string variant = "full";
  int shots = 0;
  int trials = 0;
  MetricSummary auc_roc;
  MetricSummary auc_pr;
  std::string config_hash;
};

std::string report_to_json(const MetricReport& report);
std::string report_tsv_header();
// One row: variant, shots, trials, then "mean±std" to three decimals.
std::string report_to_tsv_row(const MetricReport& report);

enum class Stage { kBundle, kJointTraining, kPseudoLabel, kSelfTraining, kScoring, kEvaluation };

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  SplitMasks split;
  std::vector<int> labeled;
  PseudoLabelSets pseudo;
  std::vector<LossRecord> joint_trace;
  std::vector<LossRecord> self_trace;
  Vector scores;  // every target node
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  std::optional<double> validation_auc_roc;
};

// Hooks for instrumented runs. Every read of a target label goes through
// on_label_read.
class ExperimentObserver {
 public:
  virtual ~ExperimentObserver() = default;
  virtual void on_stage(int /*trial*/, Stage /*stage*/) {}
  virtual void on_label_read(int /*trial*/, int /*node*/) {}
  virtual void on_trial(const TrialRecord& /*record*/) {}
};

struct ExperimentResult {
  MetricReport report;
  std::vector<TrialRecord> trials;
};

// Trial i uses seed config.seed + i for its split, K-shot sample and
// training. Target labels are only consulted for the training mask while
// sampling the K shots, and for the validation/test masks once scoring is
// finished.
ExperimentResult run_experiment(const AttributedGraph& source, const AttributedGraph& target,
                                const TrainConfig& config, int trials,
                                ExperimentObserver* observer = nullptr);

ExperimentResult run_ablation(const AttributedGraph& source, const AttributedGraph& target,
                              const TrainConfig& config, Variant variant, int trials,
                              ExperimentObserver* observer = nullptr);

}  // namespace xgad
