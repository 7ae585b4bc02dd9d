#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lfgs/errors.hpp"

namespace lfgs {

// Eigendecomposition of a symmetric matrix with explicit sanity checks:
// rejects non-square or visibly asymmetric input, and verifies the residual
// ||S V - V diag(w)|| after the fact so silent solver failures cannot leak
// garbage into downstream certificates.
struct EigPair {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
};

EigPair sym_eig(const Eigen::MatrixXd& S);

// One semidefinite constraint B(v) = F0 + sum_j v_j * F_j  (all F symmetric).
// Feasibility means B(v) <= -eps_margin * I.
struct AffineBlock {
  Eigen::MatrixXd F0;
  std::vector<std::pair<int, Eigen::MatrixXd>> coeffs;  // (variable index, F_j)
  std::string label;

  Eigen::MatrixXd eval(const Eigen::VectorXd& v) const;
};

// A conjunction of affine semidefinite blocks plus an elementwise box on the
// flat variable vector (entries of lower/upper may be +-infinity).
struct ConicProblem {
  int num_vars = 0;
  std::vector<AffineBlock> blocks;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd init;
  double eps_margin = 1e-6;
};

struct SolverOptions {
  int max_iterations = 30000;
  double tol = 1e-9;                  // stall threshold on iterate movement
  double work_margin_factor = 10.0;   // projections aim this far past eps_margin
  bool use_barrier_fallback = true;   // phase-1 barrier when projections stall
  std::optional<Eigen::VectorXd> warm_start;
};

enum class SolveStatus { Feasible, Infeasible, MaxIterations };

struct FeasibilityResult {
  SolveStatus status = SolveStatus::MaxIterations;
  Eigen::VectorXd v;
  double margin = -std::numeric_limits<double>::infinity();  // -max_k lambda_max(B_k(v))
  int iterations = 0;
  std::string detail;
};

// Deterministic feasibility search: Dykstra-corrected alternating projections
// in the product of the shifted semidefinite cones and the box, with a
// log-det barrier phase-1 fallback. Accepts once every block clears
// eps_margin. Never uses randomness or threads.
FeasibilityResult solve_feasibility(const ConicProblem& problem,
                                    const SolverOptions& options = {});

// Independent recheck of a candidate point: returns -max_k lambda_max(B_k(v)).
// Throws ValidationError if v leaves the box by more than 1e-9.
double verify_margin(const ConicProblem& problem, const Eigen::VectorXd& v);

}  // namespace lfgs
