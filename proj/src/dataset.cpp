#include "xgad/dataset.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>
#include <stdexcept>

#include "xgad/tsv.hpp"

namespace xgad {
namespace {

using nlohmann::json;

std::string require_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing file " + path.string());
  return read_file(path);
}

void check_count(const std::filesystem::path& file, const char* what, long long declared,
                 long long found) {
  if (declared != found) {
    throw FormatError(file, std::string(what) + " declared as " + std::to_string(declared) +
                                " but the data has " + std::to_string(found));
  }
}

std::vector<int> to_sorted(std::span<const int> perm) {
  std::vector<int> v(perm.begin(), perm.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

DatasetDescriptor describe(const AttributedGraph& graph, std::string name) {
  DatasetDescriptor d;
  d.name = std::move(name);
  d.num_nodes = graph.num_nodes;
  d.num_attrs = graph.feature_dim();
  d.num_edges = graph.num_edges();
  d.num_anomalies = graph.num_anomalies();
  return d;
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  const auto edges_path = dir / "edges.tsv";
  const auto features_path = dir / "features.tsv";
  const auto labels_path = dir / "labels.tsv";

  LoadedDataset out;
  DatasetDescriptor& d = out.descriptor;
  try {
    const json meta = json::parse(require_file(meta_path));
    d.name = meta.at("name").get<std::string>();
    d.num_nodes = meta.at("num_nodes").get<int>();
    d.num_attrs = meta.at("num_attrs").get<int>();
    d.num_edges = meta.at("num_edges").get<int>();
    d.num_anomalies = meta.at("num_anomalies").get<int>();
    d.directed = meta.value("directed", false);
  } catch (const json::exception& e) {
    throw FormatError(meta_path, e.what());
  }
  if (d.directed) throw FormatError(meta_path, "directed graphs are not supported");
  if (d.num_nodes <= 0) throw FormatError(meta_path, "num_nodes must be positive");

  AttributedGraph& g = out.graph;
  g.num_nodes = d.num_nodes;
  const int n = d.num_nodes;

  // Edges.
  {
    const std::string body = require_file(edges_path);
    const auto lines = split_lines(body);
    if (lines.empty() || lines.front() != "src\tdst") {
      throw FormatError(edges_path, 1, "expected header 'src\\tdst'");
    }
    std::set<Edge> seen;
    for (std::size_t k = 1; k < lines.size(); ++k) {
      const auto fields = split_tabs(lines[k]);
      if (fields.size() != 2) throw FormatError(edges_path, k + 1, "expected two columns");
      const long long u = parse_integer(fields[0], edges_path, k + 1);
      const long long v = parse_integer(fields[1], edges_path, k + 1);
      if (u < 0 || u >= n || v < 0 || v >= n) {
        throw FormatError(edges_path, k + 1,
                          "endpoint outside [0, " + std::to_string(n) + ")");
      }
      if (u == v) throw FormatError(edges_path, k + 1, "self-loop");
      if (u > v) throw FormatError(edges_path, k + 1, "edge must be written with src < dst");
      const Edge e{static_cast<int>(u), static_cast<int>(v)};
      if (!seen.insert(e).second) throw FormatError(edges_path, k + 1, "duplicate edge");
      g.edges.push_back(e);
    }
    check_count(meta_path, "num_edges", d.num_edges, g.num_edges());
  }

  // Features.
  {
    const std::string body = require_file(features_path);
    g.features = matrix_from_tsv(body, features_path);
    check_count(meta_path, "num_nodes (feature rows)", n, g.features.rows());
    check_count(meta_path, "num_attrs", d.num_attrs, g.features.cols());
    if (!g.features.allFinite()) throw FormatError(features_path, "non-finite feature value");
  }

  // Labels.
  {
    const std::string body = require_file(labels_path);
    const auto lines = split_lines(body);
    std::vector<int> y;
    y.reserve(lines.size());
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const long long v = parse_integer(lines[k], labels_path, k + 1);
      if (v != 0 && v != 1) throw FormatError(labels_path, k + 1, "label must be 0 or 1");
      y.push_back(static_cast<int>(v));
    }
    check_count(meta_path, "num_nodes (label rows)", n, static_cast<long long>(y.size()));
    g.labels = std::move(y);
    check_count(meta_path, "num_anomalies", d.num_anomalies, g.num_anomalies());
  }

  const auto diagnostics = validate_graph(g);
  if (!diagnostics.empty()) throw FormatError(dir, diagnostics.front().message);
  return out;
}

void save_dataset(const AttributedGraph& graph, const std::string& name,
                  const std::filesystem::path& dir) {
  const auto diagnostics = validate_graph(graph);
  if (!diagnostics.empty()) {
    throw std::invalid_argument("save_dataset: invalid graph: " + diagnostics.front().message);
  }
  if (!graph.labels) throw std::invalid_argument("save_dataset: graph has no labels");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const DatasetDescriptor d = describe(graph, name);
  const json meta = {{"name", d.name},
                     {"num_nodes", d.num_nodes},
                     {"num_attrs", d.num_attrs},
                     {"num_edges", d.num_edges},
                     {"num_anomalies", d.num_anomalies},
                     {"directed", false}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::vector<Edge> edges;
  edges.reserve(graph.edges.size());
  for (const Edge& e : graph.edges) edges.push_back(e.canonical());
  std::sort(edges.begin(), edges.end());
  std::string body = "src\tdst\n";
  for (const Edge& e : edges) body += std::to_string(e.u) + "\t" + std::to_string(e.v) + "\n";
  write_file(dir / "edges.tsv", body);

  write_file(dir / "features.tsv", matrix_to_tsv(graph.features));

  std::string labels;
  for (int y : *graph.labels) labels += y ? "1\n" : "0\n";
  write_file(dir / "labels.tsv", labels);
}

SplitMasks make_split(int n, std::uint64_t seed) {
  if (n < 5) {
    throw std::invalid_argument("make_split: need at least 5 nodes, got " + std::to_string(n));
  }
  int sizes[3] = {2 * n / 5, n / 5, 2 * n / 5};
  int remainder = n - sizes[0] - sizes[1] - sizes[2];
  for (int k = 0; remainder > 0; k = (k + 1) % 3, --remainder) ++sizes[k];

  RandomStream rng = RandomStream::derive(seed, "split");
  const std::vector<int> perm = rng.permutation(n);
  const auto begin = perm.begin();
  SplitMasks split;
  split.train = to_sorted({begin, begin + sizes[0]});
  split.validation = to_sorted({begin + sizes[0], begin + sizes[0] + sizes[1]});
  split.test = to_sorted({begin + sizes[0] + sizes[1], perm.end()});
  return split;
}

SplitMasks make_split(const AttributedGraph& graph, std::uint64_t seed) {
  return make_split(graph.num_nodes, seed);
}

void save_split(const SplitMasks& split, const std::filesystem::path& path) {
  const json j = {{"train", split.train}, {"val", split.validation}, {"test", split.test}};
  write_file(path, j.dump() + "\n");
}

SplitMasks load_split(const std::filesystem::path& path) {
  try {
    const json j = json::parse(read_file(path));
    SplitMasks s;
    s.train = j.at("train").get<std::vector<int>>();
    s.validation = j.at("val").get<std::vector<int>>();
    s.test = j.at("test").get<std::vector<int>>();
    return s;
  } catch (const json::exception& e) {
    throw FormatError(path, e.what());
  }
}

std::vector<int> sample_few_shot(std::span<const int> train, const std::function<int(int)>& label_of,
                                 int shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample_few_shot: K must be at least 1");
  std::vector<int> eligible;
  for (int node : train) {
    if (label_of(node) == 1) eligible.push_back(node);
  }
  std::sort(eligible.begin(), eligible.end());
  if (static_cast<int>(eligible.size()) < shots) {
    throw std::invalid_argument("sample_few_shot: requested K = " + std::to_string(shots) +
                                " but the training mask holds only " +
                                std::to_string(eligible.size()) + " anomalies");
  }
  RandomStream rng = RandomStream::derive(seed, "few-shot");
  const std::vector<int> perm = rng.permutation(static_cast<int>(eligible.size()));
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(shots));
  for (int k = 0; k < shots; ++k) chosen.push_back(eligible[static_cast<std::size_t>(perm[k])]);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<int> sample_few_shot(const AttributedGraph& graph, const SplitMasks& split, int shots,
                                 std::uint64_t seed) {
  if (!graph.labels) throw std::invalid_argument("sample_few_shot: graph has no labels");
  const auto& y = *graph.labels;
  return sample_few_shot(
      split.train, [&](int node) { return y.at(static_cast<std::size_t>(node)); }, shots, seed);
}

}  // namespace xgad
