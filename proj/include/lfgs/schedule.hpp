#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lfgs/lmi.hpp"

namespace lfgs {

// Design grid along the scheduling parameter. `coverage` is the validity
// interval of each design point (clipped to the scheduling range), `corners`
// the blending window between consecutive points: below the window the lower
// design point is used as-is, above it the upper one, inside them a convex
// blend.
struct DesignGrid {
  std::vector<double> points;
  std::vector<double> betas;
  std::vector<std::pair<double, double>> coverage;  // one per point
  std::vector<std::pair<double, double>> corners;   // one per adjacent pair
};

// Certificate obtained at one design point (or blended between two).
// `margin` is the verified distance of the worst block eigenvalue from zero;
// blended solutions carry NaN there because they are not re-certified.
struct LmiSolution {
  double rho = 0.0;
  double beta = 0.0;
  double margin = 0.0;
  int iterations = 0;
  Eigen::MatrixXd Y;
  MultiplierSet mult;
};

enum class ScheduleMode { Interpolated, Switching };

struct RateReport {
  double eta = 0.0;     // worst-case decay floor over the scheduling range
  double varrho = 0.0;  // steepest certified slope of the scheduled inverse
  double q = 0.0;       // rho_dot_sup * varrho / eta; the theory needs q < 1
};

struct GainSchedule {
  ScheduleMode mode = ScheduleMode::Interpolated;
  int n = 0;
  int p = 0;
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;
  ConsensusConstants constants;
  Eigen::MatrixXd R;
  Eigen::MatrixXd B1;
  DesignGrid grid;
  std::vector<LmiSolution> solutions;

  // Solution in effect at rho: exact design solution, or the blend inside a
  // corner window (Interpolated), or the nearest design point (Switching,
  // ties broken toward the lower point).
  LmiSolution solution_at(double rho) const;
  Eigen::MatrixXd Y_of_rho(double rho) const;
  // K_i(rho) = -(theta_i * sigma)^{-1} R^{-1} B1' Y(rho)^{-1}
  Eigen::MatrixXd gain(int follower, double rho) const;
};

// Largest drift of A over a parameter ball: max_{|d| <= radius} ||A(rho+d) - A(rho)||_2.
// Exact for affine A; sampled on a fixed grid for higher-degree dependence.
double beta_for_point(const LpvPlant& plant, double rho, double radius);

// Inverse of the above in the radius: how far the parameter may drift from
// rho before the drift in A exhausts the robustness budget beta.
// Returns +infinity when A does not depend on the parameter.
double coverage_radius(const LpvPlant& plant, double rho, double beta);

// Equally spaced design points and matching robustness budgets sized so that
// adjacent validity intervals overlap.
std::vector<double> auto_grid(const LpvPlant& plant, int count);
std::vector<double> auto_betas(const LpvPlant& plant,
                               const std::vector<double>& points);

// Blending windows at 25% / 75% of each pairwise validity overlap.
// Throws NoOverlap naming the pair whose validity intervals fail to meet.
std::vector<std::pair<double, double>> place_corners(const DesignGrid& grid);

// Convex blend of two certificates: Y linearly, multipliers harmonically
// (their inverses linearly), so the blend inherits feasibility of the
// reduced block at fixed rho. gamma = 1 returns `a` exactly, 0 returns `b`.
LmiSolution interpolate_solution(const LmiSolution& a, const LmiSolution& b,
                                 double gamma);

// Decay floor, steepest slope, and their ratio scaled by the parameter rate.
RateReport rate_condition(const GainSchedule& schedule, double rho_dot_sup);

// Full pipeline: certify every design point (warm-starting each from the
// previous one), cross-check the certificates independently, and place the
// blending windows.
GainSchedule synthesize(const Scenario& scenario,
                        const std::vector<double>& points,
                        const std::vector<double>& betas,
                        ScheduleMode mode = ScheduleMode::Interpolated,
                        const SolverOptions& solver_options = {});

std::string schedule_to_json(const GainSchedule& schedule);
GainSchedule parse_schedule(const std::string& text);
void save_schedule(const GainSchedule& schedule, const std::string& path);
GainSchedule load_schedule(const std::string& path);

}  // namespace lfgs
