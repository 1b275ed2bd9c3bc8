#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "xgad/checkpoint.hpp"
#include "xgad/experiment.hpp"
#include "xgad/synthetic.hpp"
#include "xgad/tsv.hpp"

namespace xgad::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown for bad command-line values detected after parsing.
class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for validation failures that are not library exceptions.
class DomainFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optional overrides layered on top of the config file.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<double> learning_rate;
  std::optional<double> alpha;
  std::optional<double> drop_p;
  std::optional<int> bases;
  std::optional<double> beta1;
  std::optional<double> beta2;
  std::optional<int> epochs_joint;
  std::optional<int> epochs_self;
  std::optional<int> shots;
  std::optional<std::uint64_t> seed;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "TrainConfig JSON; flags override its values");
  cmd->add_option("--lr", o.learning_rate, "learning rate");
  cmd->add_option("--alpha", o.alpha, "contrastive balance weight");
  cmd->add_option("--drop-p", o.drop_p, "edge drop probability");
  cmd->add_option("--bases", o.bases, "prompt bases per bank");
  cmd->add_option("--beta1", o.beta1, "pseudo-anomaly fraction");
  cmd->add_option("--beta2", o.beta2, "pseudo-normal fraction");
  cmd->add_option("--epochs-joint", o.epochs_joint, "joint training epochs");
  cmd->add_option("--epochs-self", o.epochs_self, "self-training epochs");
  cmd->add_option("--shots", o.shots, "labelled target anomalies (K)");
  cmd->add_option("--seed", o.seed, "base seed");
}

TrainConfig resolve_config(const Overrides& o) {
  TrainConfig c;
  if (o.config_path) c = config_from_json(read_file(*o.config_path), c, *o.config_path);
  if (o.learning_rate) c.learning_rate = *o.learning_rate;
  if (o.alpha) c.alpha_balance = *o.alpha;
  if (o.drop_p) c.drop_p = *o.drop_p;
  if (o.bases) c.m_bases = *o.bases;
  if (o.beta1) c.beta1 = *o.beta1;
  if (o.beta2) c.beta2 = *o.beta2;
  if (o.epochs_joint) c.epochs_joint = *o.epochs_joint;
  if (o.epochs_self) c.epochs_self = *o.epochs_self;
  if (o.shots) c.shots = *o.shots;
  if (o.seed) c.seed = *o.seed;
  return c;
}

json descriptor_json(const DatasetDescriptor& d) {
  return {{"name", d.name},           {"num_nodes", d.num_nodes},
          {"num_attrs", d.num_attrs}, {"num_edges", d.num_edges},
          {"num_anomalies", d.num_anomalies}, {"directed", d.directed}};
}

// Written before any heavy computation.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::optional<TrainConfig> config;
  json datasets = json::array();
  json outputs = json::object();
  json extra = json::object();
  std::uint64_t seed = 0;

  void write(const fs::path& path) const {
    json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["args"] = args;
    j["seed"] = seed;
    j["config"] = config ? json::parse(config_to_json(*config)) : json(nullptr);
    j["datasets"] = datasets;
    j["outputs"] = outputs;
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_file(path, j.dump(2) + "\n");
  }
};

std::string indices_tsv(const std::vector<int>& nodes) {
  std::string s = "node_index\n";
  for (int v : nodes) s += std::to_string(v) + "\n";
  return s;
}

std::string trace_tsv(const std::vector<LossRecord>& trace) {
  std::string s = "epoch\tl_t\tl_s\tl_contra\ttotal\n";
  for (const auto& r : trace) {
    s += std::to_string(r.epoch) + "\t" + format_double(r.target) + "\t" + format_double(r.source) +
         "\t" + format_double(r.contrastive) + "\t" + format_double(r.total) + "\n";
  }
  return s;
}

std::string scores_tsv(const Vector& scores) {
  std::string s = "node_index\tscore\n";
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    s += std::to_string(i) + "\t" + format_double(scores(i)) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::optional<std::string> config_path;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  SyntheticPairConfig sc;
  if (a.config_path) sc = synthetic_config_from_json(read_file(*a.config_path), *a.config_path);
  validate_config(sc);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  RunManifest m;
  m.command = "generate";
  m.args = args;
  m.seed = sc.seed;
  m.extra["synthetic_config"] = json::parse(synthetic_config_to_json(sc));
  m.outputs = {{"source", "source"}, {"target", "target"}};
  m.write(dir / "manifest.json");

  const SyntheticPair pair = gen_synthetic_pair(sc);
  save_dataset(pair.source.graph, pair.source.descriptor.name, dir / "source");
  save_dataset(pair.target.graph, pair.target.descriptor.name, dir / "target");

  m.datasets = json::array(
      {descriptor_json(pair.source.descriptor), descriptor_json(pair.target.descriptor)});
  m.write(dir / "manifest.json");
  out << "wrote " << (dir / "source").string() << " and " << (dir / "target").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string source;
  std::string target;
  std::string out;
  std::string variant = "full";
  Overrides overrides;
};

Variant variant_or_throw(const std::string& name) {
  if (auto v = parse_variant(name)) return *v;
  std::string valid;
  for (Variant v : all_variants()) {
    if (!valid.empty()) valid += ", ";
    valid += variant_name(v);
  }
  throw ArgumentError("unknown variant '" + name + "'; valid variants: " + valid);
}

int cmd_train(const TrainArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const Variant variant = variant_or_throw(a.variant);
  const TrainConfig config = apply_variant(resolve_config(a.overrides), variant);
  config.validate();

  LoadedDataset source = load_dataset(a.source);
  LoadedDataset target = load_dataset(a.target);
  if (!target.graph.labels) throw DomainFailure("target dataset carries no labels");

  const fs::path dir = a.out;
  fs::create_directories(dir);
  const std::string final_phase = config.switches.self_train ? "self" : "joint";
  RunManifest m;
  m.command = "train";
  m.args = args;
  m.config = config;
  m.seed = config.seed;
  m.datasets = json::array({descriptor_json(source.descriptor), descriptor_json(target.descriptor)});
  m.outputs = {{"config", "config.json"},
               {"split", "split.json"},
               {"labeled", "labeled.tsv"},
               {"loss_trace", "loss_trace.tsv"},
               {"joint_checkpoint", "joint"},
               {"final_checkpoint", final_phase}};
  if (config.switches.self_train) {
    m.outputs["self_trace"] = "self_trace.tsv";
    m.outputs["pseudo_labels"] = "pseudo_labels.tsv";
    m.outputs["self_checkpoint"] = "self";
  }
  m.extra["variant"] = a.variant;
  m.write(dir / "manifest.json");
  write_file(dir / "config.json", config_to_json(config));

  const std::vector<int> truth = *target.graph.labels;
  const DomainBundle bundle =
      make_bundle(std::move(source.graph), std::move(target.graph), config.shots, config.seed,
                  [&](int node) { return truth.at(static_cast<std::size_t>(node)); });
  save_split(bundle.target_split, dir / "split.json");
  write_file(dir / "labeled.tsv", indices_tsv(bundle.target_labeled));

  TrainResult joint = joint_train(bundle, config);
  write_file(dir / "loss_trace.tsv", trace_tsv(joint.trace));
  save_checkpoint(joint.state, dir / "joint", {config.seed, "joint"});
  if (!joint.trace.empty()) {
    out << "joint: total " << joint.trace.front().total << " -> " << joint.trace.back().total
        << " over " << joint.trace.size() << " epochs\n";
  }

  if (config.switches.self_train) {
    const Vector scores = score_nodes(joint.state, bundle.target);
    const PseudoLabelSets pseudo =
        pseudo_label({scores.data(), static_cast<std::size_t>(scores.size())},
                     unlabeled_train_nodes(bundle), config.beta1, config.beta2);
    std::string rows = "node_index\tpseudo_label\n";
    for (int v : pseudo.anomalous) rows += std::to_string(v) + "\t1\n";
    for (int v : pseudo.normal) rows += std::to_string(v) + "\t0\n";
    write_file(dir / "pseudo_labels.tsv", rows);

    TrainResult refined = self_train(std::move(joint.state), bundle, pseudo, config);
    write_file(dir / "self_trace.tsv", trace_tsv(refined.trace));
    save_checkpoint(refined.state, dir / "self", {config.seed, "self"});
    out << "self-training: " << pseudo.anomalous.size() << " pseudo-anomalies, "
        << pseudo.normal.size() << " pseudo-normals, " << refined.trace.size() << " epochs\n";
  }
  out << "run written to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoreArgs {
  std::string run;
  std::string target;
  std::string out;
};

fs::path final_checkpoint(const fs::path& run) {
  const fs::path manifest = run / "manifest.json";
  json j;
  try {
    j = json::parse(read_file(manifest));
    return run / j.at("outputs").at("final_checkpoint").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(manifest, e.what());
  }
}

int cmd_score(const ScoreArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const fs::path ckpt = final_checkpoint(a.run);
  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  RunManifest m;
  m.command = "score";
  m.args = args;
  m.outputs = {{"scores", out_path.filename().string()}};
  m.extra["checkpoint"] = ckpt.string();
  const fs::path manifest_path = fs::path(out_path.string() + ".manifest.json");

  CheckpointInfo info;
  const ModelState state = load_checkpoint(ckpt, &info);
  const LoadedDataset target = load_dataset(a.target);
  m.seed = info.seed;
  m.datasets = json::array({descriptor_json(target.descriptor)});
  m.write(manifest_path);

  if (target.graph.feature_dim() != state.encoder.target_mlp.weight.rows()) {
    throw DomainFailure("target feature width " + std::to_string(target.graph.feature_dim()) +
                        " does not match the checkpoint (" +
                        std::to_string(state.encoder.target_mlp.weight.rows()) + ")");
  }
  const Vector scores = score_nodes(state, target.graph);
  write_file(out_path, scores_tsv(scores));
  out << "scored " << scores.size() << " nodes into " << out_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string scores;
  std::string labels;
  std::optional<std::string> mask;
  std::string mask_set = "test";
  std::string out;
};

// Accepts "node_index\tscore" rows (header optional) or a bare score column.
std::vector<double> read_scores(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  std::vector<double> scores;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cols = split_tabs(lines[i]);
    if (i == 0 && !cols.empty() && cols[0] == "node_index") continue;
    if (cols.size() == 2) {
      const long long idx = parse_integer(cols[0], path, i + 1);
      if (idx != static_cast<long long>(scores.size())) {
        throw FormatError(path, i + 1, "node indices must be 0..n-1 in order");
      }
      scores.push_back(parse_double(cols[1], path, i + 1));
    } else if (cols.size() == 1) {
      scores.push_back(parse_double(cols[0], path, i + 1));
    } else {
      throw FormatError(path, i + 1, "expected 1 or 2 columns");
    }
  }
  return scores;
}

std::vector<int> read_labels(fs::path path) {
  if (fs::is_directory(path)) path /= "labels.tsv";
  const std::string text = read_file(path);
  std::vector<int> labels;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const long long v = parse_integer(lines[i], path, i + 1);
    if (v != 0 && v != 1) throw FormatError(path, i + 1, "labels must be 0 or 1");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

std::vector<int> read_mask(const fs::path& path, const std::string& set) {
  if (path.extension() == ".json") {
    const SplitMasks split = load_split(path);
    if (set == "train") return split.train;
    if (set == "val" || set == "validation") return split.validation;
    if (set == "test") return split.test;
    throw ArgumentError("--mask-set must be train, val or test");
  }
  std::vector<int> nodes;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == 0 && lines[i] == "node_index") continue;
    nodes.push_back(static_cast<int>(parse_integer(lines[i], path, i + 1)));
  }
  return nodes;
}

int cmd_evaluate(const EvaluateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  RunManifest m;
  m.command = "evaluate";
  m.args = args;
  m.outputs = {{"metrics", out_path.filename().string()}};
  m.write(fs::path(out_path.string() + ".manifest.json"));

  const std::vector<double> all_scores = read_scores(a.scores);
  const std::vector<int> all_labels = read_labels(a.labels);
  if (all_scores.size() != all_labels.size()) {
    throw DomainFailure("length mismatch: " + std::to_string(all_scores.size()) + " scores but " +
                        std::to_string(all_labels.size()) + " labels");
  }
  std::vector<double> scores;
  std::vector<int> labels;
  if (a.mask) {
    for (int node : read_mask(*a.mask, a.mask_set)) {
      if (node < 0 || static_cast<std::size_t>(node) >= all_scores.size()) {
        throw DomainFailure("mask index " + std::to_string(node) + " out of range");
      }
      scores.push_back(all_scores[node]);
      labels.push_back(all_labels[node]);
    }
  } else {
    scores = all_scores;
    labels = all_labels;
  }

  const double roc = auc_roc(scores, labels);
  const double pr = auc_pr(scores, labels);
  const json j = {{"auc_roc", roc},
                  {"auc_pr", pr},
                  {"nodes", scores.size()},
                  {"anomalies", std::count(labels.begin(), labels.end(), 1)}};
  write_file(out_path, j.dump(2) + "\n");
  out << "auc_roc " << format_double(roc) << " auc_pr " << format_double(pr) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  std::string source;
  std::string target;
  std::string variant = "full";
  int trials = 5;
  std::string out;
  Overrides overrides;
};

int cmd_ablate(const AblateArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const Variant variant = variant_or_throw(a.variant);
  if (a.trials < 1) throw ArgumentError("--trials must be at least 1");
  const TrainConfig base = resolve_config(a.overrides);
  const TrainConfig config = apply_variant(base, variant);
  config.validate();

  const LoadedDataset source = load_dataset(a.source);
  const LoadedDataset target = load_dataset(a.target);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  RunManifest m;
  m.command = "ablate";
  m.args = args;
  m.config = config;
  m.seed = config.seed;
  m.datasets = json::array({descriptor_json(source.descriptor), descriptor_json(target.descriptor)});
  m.outputs = {{"metrics", "metrics.json"}, {"row", "ablation.tsv"}, {"trials", "trials.tsv"}};
  m.extra["variant"] = a.variant;
  m.extra["trials"] = a.trials;
  m.write(dir / "manifest.json");

  const ExperimentResult result = run_ablation(source.graph, target.graph, base, variant, a.trials);
  write_file(dir / "metrics.json", report_to_json(result.report));
  write_file(dir / "ablation.tsv",
             report_tsv_header() + report_to_tsv_row(result.report));
  std::string rows = "trial\tseed\tauc_roc\tauc_pr\tval_auc_roc\n";
  for (const auto& t : result.trials) {
    rows += std::to_string(t.trial) + "\t" + std::to_string(t.seed) + "\t" +
            format_double(t.auc_roc) + "\t" + format_double(t.auc_pr) + "\t" +
            (t.validation_auc_roc ? format_double(*t.validation_auc_roc) : "nan") + "\n";
  }
  write_file(dir / "trials.tsv", rows);
  out << report_tsv_header() << report_to_tsv_row(result.report);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  double step = 1e-5;
  int samples = 200;
  std::uint64_t seed = 0;
  int warmup = 5;
  double threshold = 1e-4;
  bool mutate = false;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  if (!(a.step > 0.0)) throw ArgumentError("--step must be positive");
  if (a.samples < 1) throw ArgumentError("--samples must be at least 1");
  if (a.warmup < 0) throw ArgumentError("--warmup must be nonnegative");

  // 24 + 24 nodes, both domains with anomalies of each kind.
  SyntheticPairConfig sc;
  sc.num_nodes = 24;
  sc.num_blocks = 2;
  sc.p_intra = 0.3;
  sc.p_inter = 0.05;
  sc.source_dim = 6;
  sc.target_dim = 8;
  sc.anomaly_fraction = 0.2;
  sc.clique_size = 3;
  sc.seed = 3;
  const SyntheticPair pair = gen_synthetic_pair(sc);

  TrainConfig config;
  config.seed = a.seed;
  config.epochs_joint = a.warmup;
  const DomainBundle bundle = make_bundle(pair.source.graph, pair.target.graph, 1, config.seed);
  // A few steps away from initialization so prompts and discriminators are
  // no longer at their starting values.
  const ModelState state = joint_train(bundle, config).state;

  GradCheckOptions options;
  options.step = a.step;
  options.samples = a.samples;
  options.seed = a.seed;
  if (a.mutate) options.mutate_tensor = "layer1.w_self";
  const GradCheckReport r = grad_check(state, bundle, config, options);
  out << "max relative error " << r.max_rel_error << " (" << r.worst_tensor << "["
      << r.worst_index << "]) over " << r.checked << " entries\n";
  if (r.max_rel_error > a.threshold) {
    out << "FAIL: exceeds " << a.threshold << "\n";
    return kExitDomain;
  }
  out << "OK\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cross-domain few-shot graph anomaly detection", "xgad"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic source/target pair");
  generate->add_option("--config", gen.config_path, "SyntheticPairConfig JSON");
  generate->add_option("--out", gen.out, "output directory")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "joint training, pseudo-labelling and self-training");
  train->add_option("--source", train_args.source, "source dataset directory")->required();
  train->add_option("--target", train_args.target, "target dataset directory")->required();
  train->add_option("--out", train_args.out, "run directory")->required();
  train->add_option("--variant", train_args.variant, "pipeline variant");
  add_overrides(train, train_args.overrides);

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "score every target node with a trained run");
  score->add_option("--run", score_args.run, "run directory written by train")->required();
  score->add_option("--target", score_args.target, "target dataset directory")->required();
  score->add_option("--out", score_args.out, "scores TSV")->required();

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "AUC-ROC and AUC-PR of a score file");
  evaluate->add_option("--scores", eval_args.scores, "scores TSV")->required();
  evaluate->add_option("--labels", eval_args.labels, "labels TSV or dataset directory")
      ->required();
  evaluate->add_option("--mask", eval_args.mask, "split.json or a node index list");
  evaluate->add_option("--mask-set", eval_args.mask_set, "train, val or test (split.json only)");
  evaluate->add_option("--out", eval_args.out, "metrics JSON")->required();

  AblateArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "multi-trial run of one pipeline variant");
  ablate->add_option("--source", ablate_args.source, "source dataset directory")->required();
  ablate->add_option("--target", ablate_args.target, "target dataset directory")->required();
  ablate->add_option("--variant", ablate_args.variant, "pipeline variant");
  ablate->add_option("--trials", ablate_args.trials, "independent trials");
  ablate->add_option("--out", ablate_args.out, "output directory")->required();
  add_overrides(ablate, ablate_args.overrides);

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the joint loss");
  gradcheck->add_option("--step", gc.step, "central difference step");
  gradcheck->add_option("--samples", gc.samples, "entries to check across all tensors");
  gradcheck->add_option("--seed", gc.seed, "seed");
  gradcheck->add_option("--warmup", gc.warmup, "joint epochs before checking");
  gradcheck->add_option("--threshold", gc.threshold, "largest accepted relative error");
  gradcheck->add_flag("--mutate-gradient", gc.mutate, "corrupt one analytic entry on purpose");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }

  try {
    if (*generate) return cmd_generate(gen, args, out);
    if (*train) return cmd_train(train_args, args, out);
    if (*score) return cmd_score(score_args, args, out);
    if (*evaluate) return cmd_evaluate(eval_args, args, out);
    if (*ablate) return cmd_ablate(ablate_args, args, out);
    if (*gradcheck) return cmd_gradcheck(gc, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const UndefinedMetricError& e) {
    err << "error: undefined metric: " << e.what() << "\n";
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    // invalid_argument from config validation, TrainingError, DomainFailure
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitIo;
}

}  // namespace xgad::cli
