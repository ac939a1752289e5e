#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "ftdo/errors.hpp"

namespace ftdo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One undirected edge; endpoints are stored 0-based with i < j, the public
// edge-list interface is 1-based.
struct Edge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
};

// Undirected weighted network over agents 1..N (stored 0-based internally).
class Network {
 public:
  // `edges` uses 1-based endpoints as they appear in config files.
  static Network from_edges(int num_nodes, const std::vector<Edge>& edges) {
    require(num_nodes >= 1, ErrorCode::invalid_config,
            "network needs at least one node");
    Network net;
    net.n_ = num_nodes;
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges) {
      require(e.i >= 1 && e.i <= num_nodes && e.j >= 1 && e.j <= num_nodes,
              ErrorCode::invalid_config,
              "edge endpoint out of range: (" + std::to_string(e.i) + "," +
                  std::to_string(e.j) + ")");
      require(e.i != e.j, ErrorCode::invalid_config,
              "self-loop at node " + std::to_string(e.i));
      require(e.weight > 0.0, ErrorCode::invalid_config,
              "edge weight must be positive on (" + std::to_string(e.i) + "," +
                  std::to_string(e.j) + ")");
      const int a = std::min(e.i, e.j) - 1;
      const int b = std::max(e.i, e.j) - 1;
      require(seen.insert({a, b}).second, ErrorCode::invalid_config,
              "duplicate edge (" + std::to_string(a + 1) + "," +
                  std::to_string(b + 1) + ")");
      net.edges_.push_back({a, b, e.weight});
    }
    // Lexicographic edge order fixes the incidence column order and every
    // iteration order downstream (reproducibility).
    std::sort(net.edges_.begin(), net.edges_.end(),
              [](const Edge& a, const Edge& b) {
                return a.i != b.i ? a.i < b.i : a.j < b.j;
              });
    net.neighbors_.assign(net.n_, {});
    for (const Edge& e : net.edges_) {
      net.neighbors_[e.i].push_back({e.j, e.weight});
      net.neighbors_[e.j].push_back({e.i, e.weight});
    }
    for (auto& nbrs : net.neighbors_)
      std::sort(nbrs.begin(), nbrs.end());
    return net;
  }

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  // Sorted (neighbor, weight) pairs, 0-based.
  const std::vector<std::pair<int, double>>& neighbors(int node) const {
    return neighbors_[node];
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, double>>> neighbors_;
};

// Weighted incidence matrix B0 (N x m): column k for edge e_k = {i, j} with
// i < j carries +w at row i and -w at row j, edges in lexicographic order.
inline Mat build_incidence(const Network& net) {
  Mat b0 = Mat::Zero(net.num_nodes(), net.num_edges());
  int k = 0;
  for (const Edge& e : net.edges()) {
    b0(e.i, k) = e.weight;
    b0(e.j, k) = -e.weight;
    ++k;
  }
  return b0;
}

struct SpectralInfo {
  double lambda2 = 0.0;   // smallest eigenvalue above tol
  Vec eigenvalues;        // all eigenvalues of B0^T B0, ascending
  double tol = 1e-9;
};

// Smallest positive eigenvalue of B0^T B0 (values <= tol count as zero).
// For a connected graph this equals the algebraic connectivity of the
// weighted Laplacian B0 B0^T; callers must check connectivity separately.
inline SpectralInfo lambda2_pos(const Mat& b0, double tol_eig = 1e-9) {
  require(b0.cols() > 0, ErrorCode::invalid_config,
          "spectral gap undefined for a network with no edges");
  const Mat gram = b0.transpose() * b0;
  Eigen::SelfAdjointEigenSolver<Mat> solver(gram);
  require(solver.info() == Eigen::Success, ErrorCode::numeric_failure,
          "eigenvalue decomposition failed");
  SpectralInfo info;
  info.eigenvalues = solver.eigenvalues();
  info.tol = tol_eig;
  for (int k = 0; k < info.eigenvalues.size(); ++k) {
    if (info.eigenvalues(k) > tol_eig) {
      info.lambda2 = info.eigenvalues(k);
      return info;
    }
  }
  fail(ErrorCode::numeric_failure,
       "no eigenvalue of B0^T B0 exceeds the zero tolerance");
}

struct Connectivity {
  bool connected = false;
  std::vector<int> component;  // per node, 0-based component label
};

// BFS component labelling.  A single node with no edges is connected.
inline Connectivity connectivity_check(const Network& net) {
  Connectivity result;
  result.component.assign(net.num_nodes(), -1);
  int label = 0;
  for (int start = 0; start < net.num_nodes(); ++start) {
    if (result.component[start] != -1) continue;
    std::queue<int> frontier;
    frontier.push(start);
    result.component[start] = label;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const auto& [v, w] : net.neighbors(u)) {
        if (result.component[v] == -1) {
          result.component[v] = label;
          frontier.push(v);
        }
      }
    }
    ++label;
  }
  result.connected = (label <= 1);
  return result;
}

// Human-readable membership of the first extra component (1-based nodes),
// used by validation errors.
inline std::string describe_disconnection(const Connectivity& c) {
  std::string nodes;
  for (std::size_t v = 0; v < c.component.size(); ++v) {
    if (c.component[v] == 1) {
      if (!nodes.empty()) nodes += ",";
      nodes += std::to_string(v + 1);
    }
  }
  return "graph is disconnected: nodes {" + nodes +
         "} form a separate component";
}

// Throws when the network is disconnected, naming the offending component.
inline void require_connected(const Network& net) {
  const Connectivity c = connectivity_check(net);
  if (!c.connected) fail(ErrorCode::disconnected_graph, describe_disconnection(c));
}

}  // namespace ftdo
