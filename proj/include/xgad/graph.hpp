#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <optional>
#include <string>
#include <vector>

#include "xgad/random.hpp"

namespace xgad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Undirected edge. Canonical form has u < v.
struct Edge {
  int u = 0;
  int v = 0;

  Edge canonical() const { return u < v ? Edge{u, v} : Edge{v, u}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Node-attributed undirected graph with optional binary anomaly labels
// (1 = anomaly). The struct is a plain value; validate_graph() reports any
// violated invariant instead of the constructor throwing, so that loaders
// can produce precise diagnostics.
struct AttributedGraph {
  int num_nodes = 0;
  std::vector<Edge> edges;
  Matrix features;  // num_nodes x d
  std::optional<std::vector<int>> labels;

  int feature_dim() const { return static_cast<int>(features.cols()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_anomalies() const;

  // Dense symmetric 0/1 adjacency. Only meant for small graphs and tests.
  Eigen::MatrixXi adjacency() const;
};

// Subset of a parent graph's edges surviving augmentation.
struct EdgeMask {
  std::vector<Edge> kept;
};

EdgeMask full_mask(const AttributedGraph& graph);

// Removes each undirected edge independently with probability `p`.
EdgeMask drop_edges(const AttributedGraph& graph, double p, RandomStream& rng);

// Row-shuffled copy of the features (uniform over permutations).
Matrix corrupt_features(const AttributedGraph& graph, RandomStream& rng);
Matrix permute_rows(const Matrix& x, const std::vector<int>& perm);

// Mean of rows. Throws std::invalid_argument on an empty matrix.
Vector readout_mean(const Matrix& embeddings);

enum class DiagnosticKind {
  kEndpointOutOfRange,
  kSelfLoop,
  kDuplicateEdge,
  kFeatureRowMismatch,
  kLabelCountMismatch,
  kNonBinaryLabel,
  kNonFiniteFeature,
  kEmptyGraph,
};

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
};

std::vector<Diagnostic> validate_graph(const AttributedGraph& graph);

// Row-normalised adjacency operator: (P h)_i is the mean of h_j over the
// neighbours j of i in the mask, and zero for isolated nodes.
class MeanAggregator {
 public:
  MeanAggregator(int num_nodes, const std::vector<Edge>& edges);

  Matrix apply(const Matrix& h) const { return op_ * h; }
  Matrix apply_transpose(const Matrix& g) const { return op_.transpose() * g; }
  int num_nodes() const { return static_cast<int>(op_.rows()); }
  int degree(int node) const { return degree_[static_cast<std::size_t>(node)]; }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> op_;
  std::vector<int> degree_;
};

}  // namespace xgad
