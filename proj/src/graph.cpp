#include "lfgs/graph.hpp"

#include <algorithm>
#include <deque>

namespace lfgs {

bool NetworkTopology::is_pinned(int i) const {
  return std::find(pinned.begin(), pinned.end(), i) != pinned.end();
}

void NetworkTopology::check_node(int i) const {
  if (i < 1 || i > num_followers)
    throw UnknownNode("follower index " + std::to_string(i) +
                      " outside 1.." + std::to_string(num_followers));
}

std::vector<int> NetworkTopology::coupling_in(int i) const {
  check_node(i);
  std::vector<int> out;
  for (const auto& [j, k] : coupling_edges)
    if (k == i && j >= 1) out.push_back(j);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> NetworkTopology::coupling_out(int i) const {
  check_node(i);
  std::vector<int> out;
  for (const auto& [j, k] : coupling_edges)
    if (j == i && k >= 1) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> NetworkTopology::comm_in(int i) const {
  check_node(i);
  std::vector<int> out;
  for (const auto& [j, k] : comm_edges)
    if (k == i) out.push_back(j);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> NetworkTopology::to_leader_nodes() const {
  std::vector<int> out;
  for (int i = 1; i <= num_followers; ++i)
    if (to_leader(i)) out.push_back(i);
  return out;
}

ValidationReport validate_topology(const NetworkTopology& topo) {
  ValidationReport rep;
  const int N = topo.num_followers;
  if (N < 0) {
    rep.issues.push_back("negative follower count");
    return rep;
  }
  for (const auto& [j, k] : topo.coupling_edges) {
    if (j == k)
      rep.issues.push_back("coupling self loop at node " + std::to_string(j));
    if (j < 0 || j > N || k < 0 || k > N)
      rep.issues.push_back("coupling edge (" + std::to_string(j) + "," +
                           std::to_string(k) + ") out of range");
  }
  for (const auto& [j, k] : topo.comm_edges) {
    if (j == k)
      rep.issues.push_back("comm self loop at node " + std::to_string(j));
    if (j < 1 || j > N || k < 1 || k > N)
      rep.issues.push_back("comm edge (" + std::to_string(j) + "," +
                           std::to_string(k) + ") touches the leader or is out of range");
  }
  for (int i : topo.pinned)
    if (i < 1 || i > N)
      rep.issues.push_back("pinned id " + std::to_string(i) + " out of range");

  if (!rep.issues.empty()) return rep;

  if (N == 0) {
    // Leader alone: nothing to reach.
    rep.has_spanning_tree = true;
    rep.pass = true;
    return rep;
  }

  // BFS along comm edges from each pinned follower.
  std::vector<std::vector<int>> succ(N + 1);
  for (const auto& [j, k] : topo.comm_edges) succ[j].push_back(k);
  for (int root : topo.pinned) {
    std::vector<char> seen(N + 1, 0);
    std::deque<int> queue{root};
    seen[root] = 1;
    int count = 0;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      ++count;
      for (int v : succ[u])
        if (!seen[v]) {
          seen[v] = 1;
          queue.push_back(v);
        }
    }
    if (count == N) {
      rep.has_spanning_tree = true;
      break;
    }
  }
  if (!rep.has_spanning_tree)
    rep.issues.push_back(
        "no pinned follower reaches every follower along comm edges");
  rep.pass = rep.has_spanning_tree;
  return rep;
}

Eigen::MatrixXd comm_laplacian_plus_pinning(const NetworkTopology& topo) {
  const int N = topo.num_followers;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  for (const auto& [j, i] : topo.comm_edges) {
    M(i - 1, i - 1) += 1.0;
    M(i - 1, j - 1) -= 1.0;
  }
  for (int i : topo.pinned) M(i - 1, i - 1) += 1.0;
  return M;
}

ConsensusConstants consensus_constants(const NetworkTopology& topo,
                                       const Eigen::MatrixXd& Q) {
  const int N = topo.num_followers;
  ConsensusConstants cc;
  Eigen::MatrixXd LG = comm_laplacian_plus_pinning(topo);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(LG);
  if (!lu.isInvertible())
    throw SingularSystem("communication Laplacian plus pinning is singular");
  cc.theta = lu.solve(Eigen::VectorXd::Ones(N));
  for (int i = 0; i < N; ++i)
    if (!(cc.theta(i) > 0.0))
      throw SingularSystem("consensus weights not positive; topology violates "
                           "the rooted spanning tree assumption");
  Eigen::VectorXd th_inv = cc.theta.cwiseInverse();
  Eigen::MatrixXd TiLG = th_inv.asDiagonal() * LG;
  Eigen::MatrixXd sym = TiLG + TiLG.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalBreakdown("eigensolve failed on symmetrized consensus matrix");
  cc.sigma = 0.5 * es.eigenvalues().minCoeff();
  if (!(cc.sigma > 0.0))
    throw SingularSystem("nonpositive consensus margin sigma");
  Eigen::MatrixXd W = th_inv.asDiagonal() * LG;  // Th^{-1} (L+G)
  Eigen::MatrixXd M2 = W.transpose() * W;        // (L+G)' Th^{-2} (L+G)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(M2);
  if (es2.info() != Eigen::Success)
    throw NumericalBreakdown("eigensolve failed on weighted gram matrix");
  cc.lambda_hat = es2.eigenvalues().maxCoeff();
  cc.Q_bar = (cc.sigma * cc.sigma / cc.lambda_hat) * Q;
  return cc;
}

}  // namespace lfgs
