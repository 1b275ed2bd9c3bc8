#include "xgad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace xgad {

int AttributedGraph::num_anomalies() const {
  if (!labels) return 0;
  return static_cast<int>(std::count(labels->begin(), labels->end(), 1));
}

Eigen::MatrixXi AttributedGraph::adjacency() const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(num_nodes, num_nodes);
  for (const Edge& e : edges) {
    a(e.u, e.v) = 1;
    a(e.v, e.u) = 1;
  }
  return a;
}

EdgeMask full_mask(const AttributedGraph& graph) { return EdgeMask{graph.edges}; }

EdgeMask drop_edges(const AttributedGraph& graph, double p, RandomStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("drop_edges: probability must lie in [0, 1], got " +
                                std::to_string(p));
  }
  EdgeMask mask;
  mask.kept.reserve(graph.edges.size());
  // One coin per undirected edge keeps the masked adjacency symmetric.
  for (const Edge& e : graph.edges) {
    if (rng.bernoulli(1.0 - p)) mask.kept.push_back(e);
  }
  return mask;
}

Matrix permute_rows(const Matrix& x, const std::vector<int>& perm) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
  return out;
}

Matrix corrupt_features(const AttributedGraph& graph, RandomStream& rng) {
  return permute_rows(graph.features, rng.permutation(graph.num_nodes));
}

Vector readout_mean(const Matrix& embeddings) {
  if (embeddings.rows() == 0) {
    throw std::invalid_argument("readout_mean: empty embedding matrix");
  }
  return embeddings.colwise().mean().transpose();
}

std::vector<Diagnostic> validate_graph(const AttributedGraph& graph) {
  std::vector<Diagnostic> out;
  const int n = graph.num_nodes;
  if (n <= 0) {
    out.push_back({DiagnosticKind::kEmptyGraph, "graph has no nodes"});
  }
  std::set<Edge> seen;
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    const Edge& e = graph.edges[k];
    const std::string where = "edge " + std::to_string(k) + " (" + std::to_string(e.u) + ", " +
                              std::to_string(e.v) + ")";
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n) {
      out.push_back({DiagnosticKind::kEndpointOutOfRange,
                     where + ": endpoint outside [0, " + std::to_string(n) + ")"});
      continue;
    }
    if (e.u == e.v) {
      out.push_back({DiagnosticKind::kSelfLoop, where + ": self-loop"});
      continue;
    }
    if (!seen.insert(e.canonical()).second) {
      out.push_back({DiagnosticKind::kDuplicateEdge, where + ": duplicate edge"});
    }
  }
  if (graph.features.rows() != n) {
    out.push_back({DiagnosticKind::kFeatureRowMismatch,
                   "features have " + std::to_string(graph.features.rows()) + " rows, expected " +
                       std::to_string(n)});
  } else if (!graph.features.allFinite()) {
    out.push_back({DiagnosticKind::kNonFiniteFeature, "features contain non-finite values"});
  }
  if (graph.labels) {
    const auto& y = *graph.labels;
    if (static_cast<int>(y.size()) != n) {
      out.push_back({DiagnosticKind::kLabelCountMismatch,
                     "labels have " + std::to_string(y.size()) + " entries, expected " +
                         std::to_string(n)});
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != 0 && y[i] != 1) {
        out.push_back({DiagnosticKind::kNonBinaryLabel,
                       "label of node " + std::to_string(i) + " is " + std::to_string(y[i])});
      }
    }
  }
  return out;
}

MeanAggregator::MeanAggregator(int num_nodes, const std::vector<Edge>& edges)
    : op_(num_nodes, num_nodes), degree_(static_cast<std::size_t>(num_nodes), 0) {
  for (const Edge& e : edges) {
    ++degree_[static_cast<std::size_t>(e.u)];
    ++degree_[static_cast<std::size_t>(e.v)];
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    triplets.emplace_back(e.u, e.v, 1.0 / degree_[static_cast<std::size_t>(e.u)]);
    triplets.emplace_back(e.v, e.u, 1.0 / degree_[static_cast<std::size_t>(e.v)]);
  }
  op_.setFromTriplets(triplets.begin(), triplets.end());
}

}  // namespace xgad
