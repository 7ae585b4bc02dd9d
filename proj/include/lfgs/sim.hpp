#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfgs/plant.hpp"
#include "lfgs/schedule.hpp"

namespace lfgs {

// Closed-loop sample record. Node states are stacked by node id (leader
// first), controls by follower id; column k is time t(k).
struct Trajectory {
  int n = 0;
  int p = 0;
  int num_followers = 0;
  Eigen::VectorXd t;
  Eigen::VectorXd rho;
  Eigen::MatrixXd states;        // (N+1)*n x K+1
  Eigen::MatrixXd controls;      // N*p x K+1
  Eigen::VectorXd cost_running;  // K+1, Simpson prefix of the tracking cost
};

// Per-follower feedback gain as a function of the scheduling parameter.
using GainFn = std::function<Eigen::MatrixXd(int follower, double rho)>;

// Fixed-step fourth-order Runge-Kutta integration of the interconnected
// closed loop; gains and the parameter are evaluated at stage times.
// Throws NumericalBreakdown if the state blows past 1e12.
Trajectory simulate(const Scenario& scenario, const GainFn& gain,
                    const UncertaintyRealization& uncertainty);
Trajectory simulate(const Scenario& scenario, const GainSchedule& schedule,
                    const UncertaintyRealization& uncertainty);

// e_i = x_0 - x_i stacked by follower: N*n x K+1.
Eigen::MatrixXd tracking_errors(const Trajectory& traj);

// Right-hand side re-evaluated at every stored sample: (N+1)*n x K+1.
Eigen::MatrixXd state_derivatives(const Scenario& scenario,
                                  const GainSchedule& schedule,
                                  const UncertaintyRealization& uncertainty,
                                  const Trajectory& traj);
Eigen::MatrixXd state_derivatives(const Scenario& scenario, const GainFn& gain,
                                  const UncertaintyRealization& uncertainty,
                                  const Trajectory& traj);

// Tracking cost sum_i int e_i'Q e_i + u_i'R u_i dt by composite Simpson on
// the sample grid (trapezoid on the last interval when the count is odd).
double evaluate_cost(const Trajectory& traj, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R);
Eigen::VectorXd running_cost(const Trajectory& traj, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R);

struct CostReport {
  double J = 0.0;
  double bound_scheduled = 0.0;          // guaranteed bound for the schedule
  std::optional<double> bound_fixed;     // single design point only
  RateReport rate;
  double rho_dot_sup = 0.0;
  double horizon = 0.0;
  double tail_estimate = 0.0;  // crude exponential-tail residual, diagnostic only
};

// Measured cost against the guaranteed bound. Throws RateViolated when the
// parameter moves too fast for the schedule (q >= 1), in which case no bound
// holds.
CostReport performance_report(const Scenario& scenario,
                              const GainSchedule& schedule,
                              const Trajectory& traj);

struct SweepEntry {
  std::string name;
  double J = 0.0;
};

// Closed-loop cost under each uncertainty realization, same schedule.
std::vector<SweepEntry> uncertainty_sweep(
    const Scenario& scenario, const GainSchedule& schedule,
    const std::vector<UncertaintyRealization>& realizations);

// Named realization families: "zero", "nominal" (unit constant), "sin5"
// (sinusoid at 5 rad/s), "random:K" (K seeded sinusoids).
std::vector<UncertaintyRealization> standard_realizations(
    const Scenario& scenario, const std::string& spec, std::uint64_t seed);

void write_trajectory_csv(const Trajectory& traj, const std::string& path);
void write_cost_report(const CostReport& report, const std::string& path);
std::string cost_report_to_json(const CostReport& report);

}  // namespace lfgs
