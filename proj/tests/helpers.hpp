#pragma once

// Shared scenario factories for the test suites. Everything here is built
// directly through the C++ structs so the tests do not depend on the JSON
// loader except where the loader itself is under test.

#include <Eigen/Dense>

#include "lfgs/plant.hpp"

namespace testutil {

// Two followers on a physical chain 0 - 1 - 2 with bidirectional couplings,
// communication edge 1 -> 2, follower 1 pinned. The consensus constants have
// closed forms: theta = [1, 2], sigma = (3 - sqrt(2)) / 4,
// lambda_hat = (3 + sqrt(5)) / 4.
inline lfgs::Scenario two_follower_chain() {
  lfgs::Scenario scn;
  scn.plant.n = 2;
  scn.plant.p = 1;
  scn.plant.m = 1;
  Eigen::MatrixXd A0(2, 2), A1(2, 2);
  A0 << 0.0, 1.0, -0.8, 0.0;
  A1 << 0.0, 0.0, 1.4 / 3.0, 0.0;
  scn.plant.A_coeffs = {A0, A1};
  Eigen::MatrixXd B(2, 1);
  B << 0.0, 1.0 / 3.0;
  scn.plant.B1 = B;
  scn.plant.B2 = B;
  scn.plant.gamma_lo = -1.0;
  scn.plant.gamma_hi = 1.0;

  scn.topology.num_followers = 2;
  scn.topology.coupling_edges = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  scn.topology.comm_edges = {{1, 2}};
  scn.topology.pinned = {1};
  Eigen::MatrixXd C(1, 2);
  C << 0.1, 0.1;
  for (const auto& e : scn.topology.coupling_edges)
    scn.couplings.push_back({e.first, e.second, C});

  scn.Q = Eigen::Vector2d(10.0, 100.0).asDiagonal();
  scn.R = Eigen::MatrixXd::Constant(1, 1, 0.001);

  scn.rho_profile.kind = lfgs::RhoProfile::Kind::Cosine;
  scn.rho_profile.amplitude = 1.0;
  scn.rho_profile.frequency = 1.0;
  scn.rho_profile.offset = 0.0;

  scn.init = {Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(0.45, 0.0),
              Eigen::Vector2d(0.4, 0.0)};
  scn.sim.T = 1.0;
  scn.sim.dt = 1e-3;
  return scn;
}

// Four followers covering every leader-coupling pattern:
//   follower 1: leader couples in and out (edges (0,1) and (1,0))
//   follower 2: leader couples in only (edge (0,2))
//   follower 3: leader couples out only (edge (3,0))
//   follower 4: no leader coupling
// Follower couplings form the chain 1 - 2 - 3 - 4 in both directions.
inline lfgs::Scenario four_follower_all_leader_cases() {
  lfgs::Scenario scn = two_follower_chain();
  scn.topology.num_followers = 4;
  scn.topology.coupling_edges = {{0, 1}, {1, 0}, {0, 2}, {3, 0}, {1, 2},
                                 {2, 1}, {2, 3}, {3, 2}, {3, 4}, {4, 3}};
  scn.topology.comm_edges = {{1, 2}, {2, 3}, {3, 4}};
  scn.topology.pinned = {1};
  scn.couplings.clear();
  Eigen::MatrixXd C(1, 2);
  C << 0.1, 0.1;
  for (const auto& e : scn.topology.coupling_edges)
    scn.couplings.push_back({e.first, e.second, C});
  scn.init = {Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(0.45, 0.0),
              Eigen::Vector2d(0.4, 0.0), Eigen::Vector2d(0.35, 0.0),
              Eigen::Vector2d(0.3, 0.0)};
  return scn;
}

// Single follower with scalar dynamics x' = a x + u, no couplings, pinned.
// The closed loop has closed-form solutions for constant gains.
inline lfgs::Scenario scalar_pair(double a) {
  lfgs::Scenario scn;
  scn.plant.n = 1;
  scn.plant.p = 1;
  scn.plant.m = 1;
  scn.plant.A_coeffs = {Eigen::MatrixXd::Constant(1, 1, a)};
  scn.plant.B1 = Eigen::MatrixXd::Identity(1, 1);
  scn.plant.B2 = Eigen::MatrixXd::Identity(1, 1);
  scn.plant.gamma_lo = -1.0;
  scn.plant.gamma_hi = 1.0;
  scn.topology.num_followers = 1;
  scn.topology.pinned = {1};
  scn.Q = Eigen::MatrixXd::Identity(1, 1);
  scn.R = Eigen::MatrixXd::Identity(1, 1);
  scn.rho_profile.kind = lfgs::RhoProfile::Kind::Constant;
  scn.rho_profile.value = 0.0;
  scn.init = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1)};
  scn.sim.T = 1.0;
  scn.sim.dt = 1e-3;
  return scn;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

}  // namespace testutil
