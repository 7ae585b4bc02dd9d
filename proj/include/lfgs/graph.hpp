#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lfgs/errors.hpp"

namespace lfgs {

// Two directed graphs over one agent set: node 0 is the leader, 1..N are
// followers. Physical couplings may touch the leader in both directions;
// information flow never enters the leader.
struct NetworkTopology {
  int num_followers = 0;                           // N
  std::set<std::pair<int, int>> coupling_edges;    // (from, to) over {0..N}
  std::set<std::pair<int, int>> comm_edges;        // (from, to) over {1..N}
  std::vector<int> pinned;                         // follower ids with g_i = 1

  bool is_pinned(int i) const;
  // d_i: the leader's state enters follower i's coupling forces.
  bool leader_to(int i) const { return coupling_edges.count({0, i}) > 0; }
  // dbar_i: follower i's state enters the leader's coupling forces.
  bool to_leader(int i) const { return coupling_edges.count({i, 0}) > 0; }

  // Follower coupling in-neighbourhood S^phi_i, ascending, leader excluded.
  std::vector<int> coupling_in(int i) const;
  // Followers j with i in S^phi_j (targets of i's couplings), ascending.
  std::vector<int> coupling_out(int i) const;
  // Communication in-neighbourhood S^c_i, ascending.
  std::vector<int> comm_in(int i) const;
  // Followers k with dbar_k = 1, ascending.
  std::vector<int> to_leader_nodes() const;

  void check_node(int i) const;  // UnknownNode unless 1 <= i <= N
};

struct ValidationReport {
  bool pass = false;
  bool has_spanning_tree = false;
  std::vector<std::string> issues;
};

// PASS iff some pinned follower reaches every follower along comm edges,
// no self loops exist and all edge endpoints are in range.
ValidationReport validate_topology(const NetworkTopology& topo);

struct ConsensusConstants {
  Eigen::VectorXd theta;    // (L + G)^{-1} 1, entrywise positive
  double sigma = 0.0;       // 0.5 lambda_min(Th^{-1}(L+G) + (L+G)' Th^{-1})
  double lambda_hat = 0.0;  // lambda_max((L+G)' Th^{-2} (L+G))
  Eigen::MatrixXd Q_bar;    // (sigma^2 / lambda_hat) Q
};

// In-degree Laplacian of the follower communication graph plus the pinning
// matrix G = diag(g).
Eigen::MatrixXd comm_laplacian_plus_pinning(const NetworkTopology& topo);

ConsensusConstants consensus_constants(const NetworkTopology& topo,
                                       const Eigen::MatrixXd& Q);

}  // namespace lfgs
