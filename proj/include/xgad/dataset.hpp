#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xgad/graph.hpp"

namespace xgad {

struct DatasetDescriptor {
  std::string name;
  int num_nodes = 0;
  int num_attrs = 0;
  int num_edges = 0;
  int num_anomalies = 0;
  bool directed = false;

  friend bool operator==(const DatasetDescriptor&, const DatasetDescriptor&) = default;
};

DatasetDescriptor describe(const AttributedGraph& graph, std::string name);

struct LoadedDataset {
  AttributedGraph graph;
  DatasetDescriptor descriptor;
};

// Directory layout:
//   meta.json     descriptor fields
//   edges.tsv     header "src\tdst", then one "u\tv" row per edge with u < v
//   features.tsv  n rows of d tab-separated reals
//   labels.tsv    n rows of 0/1
// Errors raise IoError (missing/unreadable files) or FormatError naming the
// file and line.
LoadedDataset load_dataset(const std::filesystem::path& dir);

// Edges are written sorted, so saving is byte-deterministic.
void save_dataset(const AttributedGraph& graph, const std::string& name,
                  const std::filesystem::path& dir);

struct SplitMasks {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

// Uniform 40/20/40 partition of [0, n). Sizes are floor(0.4n), floor(0.2n),
// floor(0.4n) with the remainder handed out one node at a time to train,
// then validation, then test.
SplitMasks make_split(int num_nodes, std::uint64_t seed);
SplitMasks make_split(const AttributedGraph& graph, std::uint64_t seed);

void save_split(const SplitMasks& split, const std::filesystem::path& path);
SplitMasks load_split(const std::filesystem::path& path);

// K anomalies drawn uniformly without replacement from the anomalies in
// `train`. `label_of` is queried once per train node. Result is sorted.
std::vector<int> sample_few_shot(std::span<const int> train, const std::function<int(int)>& label_of,
                                 int shots, std::uint64_t seed);
std::vector<int> sample_few_shot(const AttributedGraph& graph, const SplitMasks& split, int shots,
                                 std::uint64_t seed);

}  // namespace xgad
