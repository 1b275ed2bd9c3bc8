#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xgad/dataset.hpp"

namespace xgad {

// Seeded two-domain benchmark built from a stochastic block model. Both
// graphs share block structure; target block means are an affine image of
// the source means. Anomalies come in two kinds: structural (members of a
// densely wired clique) and contextual (features drawn around a point far
// from the node's block mean).
struct SyntheticPairConfig {
  int num_nodes = 400;
  int num_blocks = 3;
  double p_intra = 0.08;
  double p_inter = 0.002;
  int source_dim = 24;
  int target_dim = 32;
  double block_mean_scale = 1.0;
  double feature_noise = 1.0;
  // target_mean = shift_scale * base_mean + shift_offset
  double shift_scale = 1.5;
  double shift_offset = 0.5;
  double anomaly_fraction = 0.05;
  double structural_share = 0.5;
  int clique_size = 10;
  double contextual_distance = 12.0;
  std::uint64_t seed = 7;
};

struct SyntheticGraph {
  AttributedGraph graph;
  DatasetDescriptor descriptor;
  std::vector<int> block;       // block id per node
  std::vector<int> structural;  // sorted node ids
  std::vector<int> contextual;  // sorted node ids
};

struct SyntheticPair {
  SyntheticGraph source;
  SyntheticGraph target;
};

// Throws std::invalid_argument on an infeasible configuration.
void validate_config(const SyntheticPairConfig& config);

SyntheticPair gen_synthetic_pair(const SyntheticPairConfig& config);

std::string synthetic_config_to_json(const SyntheticPairConfig& config);
// Missing keys keep their defaults. Throws FormatError on malformed input.
SyntheticPairConfig synthetic_config_from_json(const std::string& text,
                                               const std::string& origin = "<config>");

}  // namespace xgad
