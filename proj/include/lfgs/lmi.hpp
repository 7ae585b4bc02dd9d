#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lfgs/graph.hpp"
#include "lfgs/plant.hpp"
#include "lfgs/solver.hpp"

namespace lfgs {

// Scalar multipliers attached to the coupling structure. Each directed
// coupling edge between followers carries two: `nu` absorbs the receiver-side
// error term, `mu` the sender-side one. Leader-incident edges carry one each.
// `pi` (one per follower) absorbs the parameter-variation ball; it is empty
// for the reduced (interpolation) form, which has no such ball.
struct MultiplierSet {
  std::map<std::pair<int, int>, double> nu;  // key (from, to)
  std::map<std::pair<int, int>, double> mu;  // key (from, to)
  std::vector<double> pi;                    // index i-1 for follower i
  std::map<int, double> nu_from_leader;      // follower i with edge leader -> i
  std::map<int, double> mu_to_leader;        // follower i with edge i -> leader
};

// Precomputed quantities shared by every block of one scenario.
struct LmiContext {
  int N = 0;
  LpvPlant plant;
  ConsensusConstants constants;
  Eigen::MatrixXd R;
  Eigen::MatrixXd Qbar_sqrt;   // symmetric square root of the scaled weight
  Eigen::MatrixXd input_quad;  // B1 R^{-1} B1'
  Eigen::MatrixXd b2_quad;     // B2 B2'
  std::vector<std::vector<int>> in_followers;   // follower i -> senders j
  std::vector<std::vector<int>> out_followers;  // follower i -> receivers r
  std::vector<char> from_leader_flag;           // leader couples into i
  std::vector<char> to_leader_flag;             // i couples into the leader
  std::vector<int> to_leader_list;              // ascending followers with flag set
  std::map<std::pair<int, int>, Eigen::MatrixXd> coupling_C;

  const Eigen::MatrixXd& C(int from, int to) const;
};

LmiContext make_context(const Scenario& scenario);

// Flat-variable layout for the feasibility problem:
// [ svec(Y) | 1/nu per edge | 1/mu per edge | 1/pi per follower (full only)
//   | 1/nu per leader-in edge | 1/mu per leader-out edge ]
// svec walks the upper triangle row-major: (0,0), (0,1), ..., (n-1,n-1).
struct VarMap {
  int n = 0;
  bool reduced = false;
  int num_vars = 0;
  std::vector<std::pair<int, int>> edges;  // follower-follower (from, to), ascending
  std::vector<int> from_leader;            // ascending follower ids
  std::vector<int> to_leader;
  int off_y = 0, off_nu = 0, off_mu = 0, off_pi = 0;
  int off_nu_leader = 0, off_mu_leader = 0;

  int y_dim() const { return n * (n + 1) / 2; }
  Eigen::MatrixXd decode_Y(const Eigen::VectorXd& v) const;
  MultiplierSet decode_multipliers(const Eigen::VectorXd& v) const;
  Eigen::VectorXd encode(const Eigen::MatrixXd& Y, const MultiplierSet& m) const;
};

// Full synthesis block for one follower: negative definiteness certifies the
// guaranteed-cost tracking condition at design point rho with robustness
// radius beta against parameter drift.
Eigen::MatrixXd build_tracking_block(const LmiContext& ctx, int follower,
                                     double rho, double beta,
                                     const Eigen::MatrixXd& Y,
                                     const MultiplierSet& m);

// Reduced block used along interpolation segments: same structure minus the
// parameter-variation ball, so it is jointly affine in Y and the inverse
// multipliers at fixed rho.
Eigen::MatrixXd build_interp_block(const LmiContext& ctx, int follower,
                                   double rho, const Eigen::MatrixXd& Y,
                                   const MultiplierSet& m);

// Equivalent scalar certificate for the full block, obtained by folding all
// quadratic rows back into the top-left corner: its largest eigenvalue has
// the same sign as the block's. Used as an independent cross-check.
double riccati_residual(const LmiContext& ctx, int follower, double rho,
                        double beta, const Eigen::MatrixXd& Y,
                        const MultiplierSet& m);

struct AssembledProblem {
  ConicProblem problem;
  VarMap map;
};

// All follower blocks plus a floor on Y, expressed over the flat variables.
AssembledProblem assemble_feasibility_problem(const LmiContext& ctx, double rho,
                                              double beta, bool reduced,
                                              double init_y_scale);

}  // namespace lfgs
