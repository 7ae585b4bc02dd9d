#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lfgs/errors.hpp"
#include "lfgs/graph.hpp"

namespace lfgs {

// State matrix polynomial in the scheduling parameter:
// A(rho) = sum_r rho^r A_coeffs[r], rho confined to [gamma_lo, gamma_hi].
struct LpvPlant {
  int n = 0;  // state dimension
  int p = 0;  // control input dimension (B1 columns)
  int m = 0;  // coupling input dimension (B2 columns)
  std::vector<Eigen::MatrixXd> A_coeffs;
  Eigen::MatrixXd B1, B2;
  double gamma_lo = 0.0, gamma_hi = 0.0;
};

// Horner evaluation; OutOfRange when rho leaves [gamma_lo, gamma_hi].
Eigen::MatrixXd eval_A(const LpvPlant& plant, double rho);

// C matrix of one directed coupling influence "from -> to" (q x n).
struct CouplingShape {
  int from = 0, to = 0;
  Eigen::MatrixXd C;
};

struct RhoProfile {
  enum class Kind { Constant, Cosine };
  Kind kind = Kind::Constant;
  double value = 0.0;                                  // constant
  double amplitude = 0.0, frequency = 0.0, offset = 0.0;  // cosine
  double eval(double t) const;
  double sup_rate() const;  // sup_t |d rho / dt|
};

struct SimParams {
  double T = 0.0;
  double dt = 0.0;
};

struct Scenario {
  LpvPlant plant;
  NetworkTopology topology;
  std::vector<CouplingShape> couplings;
  Eigen::MatrixXd Q, R;
  RhoProfile rho_profile;
  std::vector<Eigen::VectorXd> init;  // x_i(0) for nodes 0..N
  SimParams sim;

  // nullptr when the pair is not a coupling edge.
  const Eigen::MatrixXd* coupling(int from, int to) const;
};

bool operator==(const Scenario& a, const Scenario& b);

// Strict JSON loader: unknown keys rejected at every level, matrices are
// row-major nested arrays of finite numbers, topology must validate.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);
void save_scenario(const Scenario& scn, const std::string& path);
std::string scenario_to_json(const Scenario& scn);

// The 21-mass spring-damper chain benchmark: leader plus 20 followers on a
// physical ring, pinned followers {1,8,12,15}, chain communication.
Scenario build_mass_spring_example();

// Time-varying coupling uncertainty on one edge, spectral norm at most one.
struct DeltaSignal {
  enum class Kind { Zero, Constant, Sinusoid };
  Kind kind = Kind::Zero;
  Eigen::MatrixXd M;        // m x q
  double amplitude = 1.0;   // sinusoid scale
  double frequency = 0.0;
  double phase = 0.0;

  Eigen::MatrixXd eval(double t) const;
  double norm_bound() const;  // sup_t ||Delta(t)||_2
};

struct UncertaintyRealization {
  std::string name;
  std::map<std::pair<int, int>, DeltaSignal> delta;  // keyed (from, to)

  // ValidationError when any signal can exceed unit spectral norm (tol 1e-9).
  void check() const;
  // Zero matrix of the edge's shape when the edge carries no entry.
  Eigen::MatrixXd eval(int from, int to, double t, int m, int q) const;
};

// phi = Delta * C * z for one edge; shapes are checked.
Eigen::VectorXd coupling_force(const CouplingShape& shape,
                               const Eigen::MatrixXd& delta_value,
                               const Eigen::VectorXd& z);

}  // namespace lfgs
