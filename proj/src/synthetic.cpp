#include "xgad/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>
#include <stdexcept>

#include "xgad/encoder.hpp"
#include "xgad/tsv.hpp"

namespace xgad {
namespace {

using nlohmann::json;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

SyntheticGraph build_graph(const SyntheticPairConfig& cfg, const Matrix& block_means,
                           Domain domain) {
  const int n = cfg.num_nodes;
  const int d = static_cast<int>(block_means.cols());
  RandomStream rng = RandomStream::derive(cfg.seed, domain_name(domain));
  RandomStream edge_rng = rng.derive("edges");
  RandomStream feature_rng = rng.derive("features");
  RandomStream anomaly_rng = rng.derive("anomalies");

  SyntheticGraph out;
  AttributedGraph& g = out.graph;
  g.num_nodes = n;
  out.block.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.block[static_cast<std::size_t>(i)] =
        static_cast<int>(static_cast<long long>(i) * cfg.num_blocks / n);
  }

  std::set<Edge> edge_set;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool same = out.block[static_cast<std::size_t>(i)] ==
                        out.block[static_cast<std::size_t>(j)];
      if (edge_rng.bernoulli(same ? cfg.p_intra : cfg.p_inter)) edge_set.insert(Edge{i, j});
    }
  }

  g.features.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const int b = out.block[static_cast<std::size_t>(i)];
    for (int c = 0; c < d; ++c) {
      g.features(i, c) = block_means(b, c) + feature_rng.normal(0.0, cfg.feature_noise);
    }
  }

  const int total = static_cast<int>(std::lround(cfg.anomaly_fraction * n));
  const int n_struct = static_cast<int>(std::lround(total * cfg.structural_share));
  const int n_ctx = total - n_struct;
  const std::vector<int> perm = anomaly_rng.permutation(n);
  out.structural.assign(perm.begin(), perm.begin() + n_struct);
  out.contextual.assign(perm.begin() + n_struct, perm.begin() + n_struct + n_ctx);

  // Cliques of clique_size; a trailing singleton joins the previous clique.
  std::vector<std::vector<int>> cliques;
  for (int k = 0; k < n_struct; k += cfg.clique_size) {
    const int end = std::min(n_struct, k + cfg.clique_size);
    std::vector<int> members(out.structural.begin() + k, out.structural.begin() + end);
    if (members.size() == 1 && !cliques.empty()) {
      cliques.back().push_back(members.front());
    } else {
      cliques.push_back(std::move(members));
    }
  }
  for (const auto& members : cliques) {
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        edge_set.insert(Edge{members[a], members[b]}.canonical());
  }

  for (int node : out.contextual) {
    const int b = out.block[static_cast<std::size_t>(node)];
    Vector direction(d);
    for (int c = 0; c < d; ++c) direction(c) = anomaly_rng.normal(0.0, 1.0);
    direction.normalize();
    for (int c = 0; c < d; ++c) {
      g.features(node, c) = block_means(b, c) + cfg.contextual_distance * direction(c) +
                            anomaly_rng.normal(0.0, cfg.feature_noise);
    }
  }

  g.edges.assign(edge_set.begin(), edge_set.end());
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int node : out.structural) labels[static_cast<std::size_t>(node)] = 1;
  for (int node : out.contextual) labels[static_cast<std::size_t>(node)] = 1;
  g.labels = std::move(labels);

  std::sort(out.structural.begin(), out.structural.end());
  std::sort(out.contextual.begin(), out.contextual.end());
  out.descriptor = describe(g, std::string("synthetic-") + domain_name(domain));
  return out;
}

}  // namespace

void validate_config(const SyntheticPairConfig& c) {
  if (!is_probability(c.p_intra) || !is_probability(c.p_inter)) {
    throw std::invalid_argument("synthetic config: edge probabilities must lie in [0, 1]");
  }
  if (c.num_nodes < 5) throw std::invalid_argument("synthetic config: need at least 5 nodes");
  if (c.num_blocks < 1 || c.num_blocks > c.num_nodes) {
    throw std::invalid_argument("synthetic config: block count must be in [1, num_nodes]");
  }
  if (c.source_dim < 1 || c.target_dim < 1) {
    throw std::invalid_argument("synthetic config: attribute dimensions must be positive");
  }
  if (!(c.anomaly_fraction > 0.0 && c.anomaly_fraction <= 0.2)) {
    throw std::invalid_argument("synthetic config: anomaly fraction must lie in (0, 0.2]");
  }
  if (!(c.structural_share > 0.0 && c.structural_share < 1.0)) {
    throw std::invalid_argument("synthetic config: structural share must lie in (0, 1)");
  }
  const int total = static_cast<int>(std::lround(c.anomaly_fraction * c.num_nodes));
  const int n_struct = static_cast<int>(std::lround(total * c.structural_share));
  if (n_struct < 2 || total - n_struct < 1) {
    throw std::invalid_argument(
        "synthetic config: too few anomalies to inject both structural and contextual kinds");
  }
  if (c.clique_size < 2) throw std::invalid_argument("synthetic config: clique size must be >= 2");
  if (!(c.feature_noise >= 0.0) || !(c.block_mean_scale >= 0.0) ||
      !(c.contextual_distance >= 0.0) || !std::isfinite(c.shift_scale) ||
      !std::isfinite(c.shift_offset)) {
    throw std::invalid_argument("synthetic config: scales must be finite and nonnegative");
  }
}

SyntheticPair gen_synthetic_pair(const SyntheticPairConfig& config) {
  validate_config(config);
  const int width = std::max(config.source_dim, config.target_dim);
  RandomStream mean_rng = RandomStream::derive(config.seed, "block-means");
  Matrix base(config.num_blocks, width);
  for (Eigen::Index i = 0; i < base.rows(); ++i)
    for (Eigen::Index j = 0; j < base.cols(); ++j)
      base(i, j) = mean_rng.normal(0.0, config.block_mean_scale);

  const Matrix source_means = base.leftCols(config.source_dim);
  const Matrix target_means =
      (config.shift_scale * base.leftCols(config.target_dim)).array() + config.shift_offset;

  SyntheticPair pair;
  pair.source = build_graph(config, source_means, Domain::kSource);
  pair.target = build_graph(config, target_means, Domain::kTarget);
  return pair;
}

std::string synthetic_config_to_json(const SyntheticPairConfig& c) {
  const json j = {{"num_nodes", c.num_nodes},
                  {"num_blocks", c.num_blocks},
                  {"p_intra", c.p_intra},
                  {"p_inter", c.p_inter},
                  {"source_dim", c.source_dim},
                  {"target_dim", c.target_dim},
                  {"block_mean_scale", c.block_mean_scale},
                  {"feature_noise", c.feature_noise},
                  {"shift_scale", c.shift_scale},
                  {"shift_offset", c.shift_offset},
                  {"anomaly_fraction", c.anomaly_fraction},
                  {"structural_share", c.structural_share},
                  {"clique_size", c.clique_size},
                  {"contextual_distance", c.contextual_distance},
                  {"seed", c.seed}};
  return j.dump(2) + "\n";
}

SyntheticPairConfig synthetic_config_from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(origin, "invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(origin, "expected a JSON object");
  SyntheticPairConfig c;
  try {
    c.num_nodes = j.value("num_nodes", c.num_nodes);
    c.num_blocks = j.value("num_blocks", c.num_blocks);
    c.p_intra = j.value("p_intra", c.p_intra);
    c.p_inter = j.value("p_inter", c.p_inter);
    c.source_dim = j.value("source_dim", c.source_dim);
    c.target_dim = j.value("target_dim", c.target_dim);
    c.block_mean_scale = j.value("block_mean_scale", c.block_mean_scale);
    c.feature_noise = j.value("feature_noise", c.feature_noise);
    c.shift_scale = j.value("shift_scale", c.shift_scale);
    c.shift_offset = j.value("shift_offset", c.shift_offset);
    c.anomaly_fraction = j.value("anomaly_fraction", c.anomaly_fraction);
    c.structural_share = j.value("structural_share", c.structural_share);
    c.clique_size = j.value("clique_size", c.clique_size);
    c.contextual_distance = j.value("contextual_distance", c.contextual_distance);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw FormatError(origin, e.what());
  }
  return c;
}

}  // namespace xgad
