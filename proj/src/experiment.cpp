#include "xgad/experiment.hpp"

#include <cstdio>
#include <json.hpp>
#include <stdexcept>

namespace xgad {
namespace {

using nlohmann::json;

struct VariantEntry {
  Variant variant;
  const char* name;
};

constexpr VariantEntry kVariants[] = {
    {Variant::kFull, "full"},
    {Variant::kNoPrompt, "no-prompt"},
    {Variant::kNoIntra, "no-intra"},
    {Variant::kNoContra, "no-contra"},
    {Variant::kHscOnly, "hsc-only"},
    {Variant::kNoSource, "no-source"},
    {Variant::kNoSelfTrain, "no-selftrain"},
};

json summary_json(const MetricSummary& s) {
  return {{"per_trial", s.per_trial}, {"mean", s.mean}, {"std", s.std}};
}

std::string mean_pm_std(const MetricSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f±%.3f", s.mean, s.std);
  return buf;
}

std::vector<double> gather(const Vector& scores, const std::vector<int>& nodes) {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (int node : nodes) out.push_back(scores(node));
  return out;
}

}  // namespace

std::string_view variant_name(Variant variant) {
  for (const auto& e : kVariants) {
    if (e.variant == variant) return e.name;
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto& e : kVariants) {
    if (name == e.name) return e.variant;
  }
  return std::nullopt;
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants = [] {
    std::vector<Variant> v;
    for (const auto& e : kVariants) v.push_back(e.variant);
    return v;
  }();
  return variants;
}

TrainConfig apply_variant(TrainConfig config, Variant variant) {
  PipelineSwitches& s = config.switches;
  switch (variant) {
    case Variant::kFull:
      break;
    case Variant::kNoPrompt:
      s.use_prompts = false;
      break;
    case Variant::kNoIntra:
      s.use_intra = false;
      break;
    case Variant::kNoContra:
      s.use_intra = false;
      s.use_inter = false;
      break;
    case Variant::kHscOnly:
      s.independent_centers = true;
      break;
    case Variant::kNoSource:
      s.use_source = false;
      break;
    case Variant::kNoSelfTrain:
      s.self_train = false;
      config.epochs_self = 0;
      break;
  }
  return config;
}

std::string report_to_json(const MetricReport& r) {
  const json j = {{"variant", r.variant},
                  {"shots", r.shots},
                  {"trials", r.trials},
                  {"auc_roc", summary_json(r.auc_roc)},
                  {"auc_pr", summary_json(r.auc_pr)},
                  {"config_hash", r.config_hash}};
  return j.dump(2) + "\n";
}

std::string report_tsv_header() { return "variant\tshots\ttrials\tauc_roc\tauc_pr\n"; }

std::string report_to_tsv_row(const MetricReport& r) {
  return r.variant + "\t" + std::to_string(r.shots) + "\t" + std::to_string(r.trials) + "\t" +
         mean_pm_std(r.auc_roc) + "\t" + mean_pm_std(r.auc_pr) + "\n";
}

ExperimentResult run_experiment(const AttributedGraph& source, const AttributedGraph& target,
                                const TrainConfig& config, int trials,
                                ExperimentObserver* observer) {
  config.validate();
  if (trials < 1) throw std::invalid_argument("run_experiment: trials must be at least 1");
  if (!target.labels) throw std::invalid_argument("run_experiment: target graph has no labels");

  // Training only ever sees an unlabeled copy of the target graph.
  const std::vector<int>& truth = *target.labels;
  AttributedGraph hidden = target;
  hidden.labels.reset();

  ExperimentResult result;
  std::vector<double> rocs;
  std::vector<double> prs;
  for (int t = 0; t < trials; ++t) {
    auto stage = [&](Stage s) {
      if (observer) observer->on_stage(t, s);
    };
    auto read_label = [&](int node) {
      if (observer) observer->on_label_read(t, node);
      return truth.at(static_cast<std::size_t>(node));
    };

    TrainConfig cfg = config;
    cfg.seed = config.seed + static_cast<std::uint64_t>(t);
    TrialRecord rec;
    rec.trial = t;
    rec.seed = cfg.seed;

    stage(Stage::kBundle);
    const DomainBundle bundle = make_bundle(source, hidden, cfg.shots, cfg.seed, read_label);
    rec.split = bundle.target_split;
    rec.labeled = bundle.target_labeled;

    stage(Stage::kJointTraining);
    TrainResult trained = joint_train(bundle, cfg);
    rec.joint_trace = std::move(trained.trace);
    ModelState state = std::move(trained.state);

    if (cfg.switches.self_train) {
      stage(Stage::kPseudoLabel);
      const Vector scores = score_nodes(state, bundle.target);
      const std::vector<int> eligible = unlabeled_train_nodes(bundle);
      rec.pseudo = pseudo_label({scores.data(), static_cast<std::size_t>(scores.size())},
                                eligible, cfg.beta1, cfg.beta2);
      stage(Stage::kSelfTraining);
      TrainResult refined = self_train(std::move(state), bundle, rec.pseudo, cfg);
      rec.self_trace = std::move(refined.trace);
      state = std::move(refined.state);
    }

    stage(Stage::kScoring);
    rec.scores = score_nodes(state, bundle.target);

    stage(Stage::kEvaluation);
    std::vector<int> test_labels;
    for (int node : rec.split.test) test_labels.push_back(read_label(node));
    const std::vector<double> test_scores = gather(rec.scores, rec.split.test);
    rec.auc_roc = auc_roc(test_scores, test_labels);
    rec.auc_pr = auc_pr(test_scores, test_labels);
    std::vector<int> val_labels;
    for (int node : rec.split.validation) val_labels.push_back(read_label(node));
    try {
      rec.validation_auc_roc = auc_roc(gather(rec.scores, rec.split.validation), val_labels);
    } catch (const UndefinedMetricError&) {
      rec.validation_auc_roc.reset();
    }

    rocs.push_back(rec.auc_roc);
    prs.push_back(rec.auc_pr);
    if (observer) observer->on_trial(rec);
    result.trials.push_back(std::move(rec));
  }

  MetricReport& report = result.report;
  report.variant = "full";
  report.shots = config.shots;
  report.trials = trials;
  report.auc_roc = summarize(std::move(rocs));
  report.auc_pr = summarize(std::move(prs));
  report.config_hash = config_hash(config);
  return result;
}

ExperimentResult run_ablation(const AttributedGraph& source, const AttributedGraph& target,
                              const TrainConfig& config, Variant variant, int trials,
                              ExperimentObserver* observer) {
  ExperimentResult result =
      run_experiment(source, target, apply_variant(config, variant), trials, observer);
  result.report.variant = std::string(variant_name(variant));
  return result;
}

}  // namespace xgad
