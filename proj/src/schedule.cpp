#include "lfgs/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"

namespace lfgs {

using json = nlohmann::ordered_json;
using namespace jsonio;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A evaluated without the range guard: coverage balls may poke past the
// scheduling range, where the polynomial formula still makes sense.
Eigen::MatrixXd eval_A_raw(const LpvPlant& plant, double rho) {
  Eigen::MatrixXd A = plant.A_coeffs.back();
  for (int r = static_cast<int>(plant.A_coeffs.size()) - 2; r >= 0; --r)
    A = rho * A + plant.A_coeffs[r];
  return A;
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

bool parameter_independent(const LpvPlant& plant) {
  for (size_t r = 1; r < plant.A_coeffs.size(); ++r)
    if (plant.A_coeffs[r].cwiseAbs().maxCoeff() > 0.0) return false;
  return true;
}

double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

}  // namespace

double beta_for_point(const LpvPlant& plant, double rho, double radius) {
  if (plant.A_coeffs.empty()) throw ShapeMismatch("plant has no A coefficients");
  if (!(radius >= 0.0)) throw ValidationError("radius must be nonnegative");
  if (parameter_independent(plant)) return 0.0;
  if (plant.A_coeffs.size() == 2)
    return radius * spectral_norm(plant.A_coeffs[1]);
  const Eigen::MatrixXd A0 = eval_A_raw(plant, rho);
  double worst = 0.0;
  const int samples = 200;
  for (int k = 0; k <= samples; ++k) {
    const double d = -radius + (2.0 * radius * k) / samples;
    worst = std::max(worst, spectral_norm(eval_A_raw(plant, rho + d) - A0));
  }
  return worst;
}

double coverage_radius(const LpvPlant& plant, double rho, double beta) {
  if (!(beta > 0.0)) throw ValidationError("robustness budget beta must be positive");
  if (parameter_independent(plant)) return kInf;
  if (plant.A_coeffs.size() == 2)
    return beta / spectral_norm(plant.A_coeffs[1]);
  const double span = plant.gamma_hi - plant.gamma_lo;
  double hi = span;
  while (beta_for_point(plant, rho, hi) < beta) {
    hi *= 2.0;
    if (hi > 1e6 * span) return kInf;
  }
  double lo = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_for_point(plant, rho, mid) < beta)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> auto_grid(const LpvPlant& plant, int count) {
  if (count < 1) throw ValidationError("design grid needs at least one point");
  std::vector<double> pts;
  if (count == 1) {
    pts.push_back(0.5 * (plant.gamma_lo + plant.gamma_hi));
    return pts;
  }
  for (int k = 0; k < count; ++k)
    pts.push_back(plant.gamma_lo +
                  (plant.gamma_hi - plant.gamma_lo) * k / (count - 1));
  return pts;
}

std::vector<double> auto_betas(const LpvPlant& plant,
                               const std::vector<double>& points) {
  if (points.empty()) throw ValidationError("design grid needs at least one point");
  std::vector<double> betas;
  for (size_t s = 0; s < points.size(); ++s) {
    double radius;
    if (points.size() == 1) {
      radius = std::max(plant.gamma_hi - points[s], points[s] - plant.gamma_lo);
    } else {
      double spacing = 0.0;
      if (s > 0) spacing = std::max(spacing, points[s] - points[s - 1]);
      if (s + 1 < points.size())
        spacing = std::max(spacing, points[s + 1] - points[s]);
      radius = 0.75 * spacing;
    }
    betas.push_back(std::max(beta_for_point(plant, points[s], radius), 1e-6));
  }
  return betas;
}

std::vector<std::pair<double, double>> place_corners(const DesignGrid& grid) {
  if (grid.points.size() != grid.coverage.size())
    throw ShapeMismatch("design grid: coverage list length mismatch");
  std::vector<std::pair<double, double>> corners;
  for (size_t s = 0; s + 1 < grid.points.size(); ++s) {
    const double lo = std::max({grid.coverage[s].first,
                                grid.coverage[s + 1].first, grid.points[s]});
    const double hi = std::min({grid.coverage[s].second,
                                grid.coverage[s + 1].second, grid.points[s + 1]});
    if (!(lo < hi))
      throw NoOverlap("validity intervals of design points " + std::to_string(s) +
                      " and " + std::to_string(s + 1) +
                      " do not overlap; raise the robustness budgets or refine the grid");
    const double w = hi - lo;
    corners.emplace_back(lo + 0.25 * w, lo + 0.75 * w);
  }
  return corners;
}

namespace {

template <typename K>
std::map<K, double> blend_harmonic(const std::map<K, double>& a,
                                   const std::map<K, double>& b, double gamma,
                                   const char* what) {
  if (a.size() != b.size())
    throw KeyMismatch(std::string(what) + ": multiplier sets differ in size");
  std::map<K, double> out;
  auto ib = b.begin();
  for (auto ia = a.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first)
      throw KeyMismatch(std::string(what) + ": multiplier keys differ");
    out[ia->first] = 1.0 / (gamma / ia->second + (1.0 - gamma) / ib->second);
  }
  return out;
}

}  // namespace

LmiSolution interpolate_solution(const LmiSolution& a, const LmiSolution& b,
                                 double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw OutOfRange("blend weight must lie in [0, 1]");
  if (gamma == 1.0) return a;
  if (gamma == 0.0) return b;
  if (a.Y.rows() != b.Y.rows() || a.Y.cols() != b.Y.cols())
    throw ShapeMismatch("blend: Y dimensions differ");
  LmiSolution out;
  out.rho = gamma * a.rho + (1.0 - gamma) * b.rho;
  out.beta = std::min(a.beta, b.beta);
  out.margin = std::numeric_limits<double>::quiet_NaN();  // not re-certified
  out.Y = gamma * a.Y + (1.0 - gamma) * b.Y;
  out.mult.nu = blend_harmonic(a.mult.nu, b.mult.nu, gamma, "receiver-side");
  out.mult.mu = blend_harmonic(a.mult.mu, b.mult.mu, gamma, "sender-side");
  if (a.mult.pi.size() != b.mult.pi.size())
    throw KeyMismatch("parameter-ball multiplier lists differ in size");
  for (size_t k = 0; k < a.mult.pi.size(); ++k)
    out.mult.pi.push_back(
        1.0 / (gamma / a.mult.pi[k] + (1.0 - gamma) / b.mult.pi[k]));
  out.mult.nu_from_leader =
      blend_harmonic(a.mult.nu_from_leader, b.mult.nu_from_leader, gamma, "leader-in");
  out.mult.mu_to_leader =
      blend_harmonic(a.mult.mu_to_leader, b.mult.mu_to_leader, gamma, "leader-out");
  return out;
}

LmiSolution GainSchedule::solution_at(double rho) const {
  if (solutions.empty()) throw ValidationError("schedule holds no solutions");
  const double tol = 1e-9 * (1.0 + std::abs(gamma_lo) + std::abs(gamma_hi));
  if (rho < gamma_lo - tol || rho > gamma_hi + tol)
    throw OutOfRange("rho=" + std::to_string(rho) + " outside the scheduling range");
  rho = std::min(std::max(rho, gamma_lo), gamma_hi);

  const size_t M = solutions.size();
  if (mode == ScheduleMode::Switching) {
    size_t best = 0;
    for (size_t s = 1; s < M; ++s)
      if (std::abs(rho - grid.points[s]) < std::abs(rho - grid.points[best]))
        best = s;
    return solutions[best];
  }
  if (M == 1) return solutions[0];
  for (size_t s = 0; s + 1 < M; ++s) {
    const auto& c = grid.corners[s];
    if (rho <= c.first) return solutions[s];
    if (rho <= c.second) {
      const double gamma = (c.second - rho) / (c.second - c.first);
      return interpolate_solution(solutions[s], solutions[s + 1], gamma);
    }
  }
  return solutions[M - 1];
}

Eigen::MatrixXd GainSchedule::Y_of_rho(double rho) const {
  return solution_at(rho).Y;
}

Eigen::MatrixXd GainSchedule::gain(int follower, double rho) const {
  const int N = static_cast<int>(constants.theta.size());
  if (follower < 1 || follower > N)
    throw UnknownNode("follower id " + std::to_string(follower) + " out of range");
  const Eigen::MatrixXd Y = Y_of_rho(rho);
  Eigen::LLT<Eigen::MatrixXd> ylt(Y);
  if (ylt.info() != Eigen::Success)
    throw NumericalBreakdown("scheduled Y lost positive definiteness");
  Eigen::LLT<Eigen::MatrixXd> rlt(R);
  if (rlt.info() != Eigen::Success)
    throw NumericalBreakdown("input weight R is not positive definite");
  const Eigen::MatrixXd Z = rlt.solve(B1.transpose());          // R^{-1} B1'
  const Eigen::MatrixXd W = ylt.solve(Z.transpose()).transpose();  // Z Y^{-1}
  const double scale = constants.theta(follower - 1) * constants.sigma;
  return (-1.0 / scale) * W;
}

RateReport rate_condition(const GainSchedule& sched, double rho_dot_sup) {
  if (sched.solutions.empty()) throw ValidationError("schedule holds no solutions");
  if (!(rho_dot_sup >= 0.0))
    throw ValidationError("parameter rate bound must be nonnegative");
  RateReport rep;

  Eigen::LLT<Eigen::MatrixXd> rlt(sched.R);
  if (rlt.info() != Eigen::Success)
    throw NumericalBreakdown("input weight R is not positive definite");
  const Eigen::MatrixXd input_quad =
      sched.B1 * rlt.solve(sched.B1.transpose());

  double eta = kInf;
  const int samples = 1000;
  for (int k = 0; k <= samples; ++k) {
    const double rho =
        sched.gamma_lo + (sched.gamma_hi - sched.gamma_lo) * k / samples;
    const Eigen::MatrixXd Y = sched.Y_of_rho(rho);
    Eigen::LLT<Eigen::MatrixXd> ylt(Y);
    if (ylt.info() != Eigen::Success)
      throw NumericalBreakdown("scheduled Y lost positive definiteness");
    const Eigen::MatrixXd Yinv =
        ylt.solve(Eigen::MatrixXd::Identity(Y.rows(), Y.cols()));
    Eigen::MatrixXd Msym = Yinv * input_quad * Yinv + sched.constants.Q_bar;
    Msym = 0.5 * (Msym + Msym.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Msym, Eigen::EigenvaluesOnly);
    eta = std::min(eta, es.eigenvalues().minCoeff());
  }
  rep.eta = eta;

  double varrho = 0.0;
  for (size_t s = 0; s + 1 < sched.solutions.size(); ++s) {
    const Eigen::MatrixXd& Ya = sched.solutions[s].Y;
    const Eigen::MatrixXd& Yb = sched.solutions[s + 1].Y;
    const Eigen::MatrixXd dY = Ya - Yb;
    const double width = sched.grid.corners[s].second - sched.grid.corners[s].first;
    auto slope = [&](double gamma) {
      Eigen::MatrixXd Yg = gamma * Ya + (1.0 - gamma) * Yb;
      Eigen::LLT<Eigen::MatrixXd> ylt(Yg);
      if (ylt.info() != Eigen::Success)
        throw NumericalBreakdown("blended Y lost positive definiteness");
      const Eigen::MatrixXd Yinv =
          ylt.solve(Eigen::MatrixXd::Identity(Yg.rows(), Yg.cols()));
      Eigen::MatrixXd S = Yinv * dY * Yinv;
      S = 0.5 * (S + S.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
      return std::max(std::abs(es.eigenvalues().minCoeff()),
                      std::abs(es.eigenvalues().maxCoeff())) /
             width;
    };
    const int grid_pts = 100;
    int best = 0;
    double best_val = -kInf;
    for (int k = 0; k <= grid_pts; ++k) {
      const double val = slope(static_cast<double>(k) / grid_pts);
      if (val > best_val) {
        best_val = val;
        best = k;
      }
    }
    const double lo = std::max(0.0, (best - 1.0) / grid_pts);
    const double hi = std::min(1.0, (best + 1.0) / grid_pts);
    varrho = std::max(varrho, golden_max(slope, lo, hi, 1e-6));
  }
  rep.varrho = varrho;
  rep.q = rho_dot_sup * varrho / rep.eta;
  return rep;
}

GainSchedule synthesize(const Scenario& scn, const std::vector<double>& points,
                        const std::vector<double>& betas, ScheduleMode mode,
                        const SolverOptions& base_options) {
  if (points.empty()) throw ValidationError("design grid needs at least one point");
  if (points.size() != betas.size())
    throw ValidationError("design grid and robustness budgets differ in length");
  const double tol =
      1e-9 * (1.0 + std::abs(scn.plant.gamma_lo) + std::abs(scn.plant.gamma_hi));
  for (size_t s = 0; s < points.size(); ++s) {
    if (points[s] < scn.plant.gamma_lo - tol || points[s] > scn.plant.gamma_hi + tol)
      throw ValidationError("design point outside the scheduling range");
    if (s > 0 && !(points[s] > points[s - 1]))
      throw ValidationError("design points must be strictly increasing");
    if (!(betas[s] > 0.0))
      throw ValidationError("robustness budgets must be positive");
  }

  const LmiContext ctx = make_context(scn);
  GainSchedule sched;
  sched.mode = mode;
  sched.n = scn.plant.n;
  sched.p = scn.plant.p;
  sched.gamma_lo = scn.plant.gamma_lo;
  sched.gamma_hi = scn.plant.gamma_hi;
  sched.constants = ctx.constants;
  sched.R = scn.R;
  sched.B1 = scn.plant.B1;
  sched.grid.points = points;
  sched.grid.betas = betas;

  const std::vector<double> ladder = {32.0, 8.0, 1.0};
  std::optional<Eigen::VectorXd> prev;
  std::vector<AssembledProblem> assembled;
  std::vector<Eigen::VectorXd> flat;
  for (size_t s = 0; s < points.size(); ++s) {
    AssembledProblem ap = assemble_feasibility_problem(ctx, points[s], betas[s],
                                                       /*reduced=*/false, ladder[0]);
    FeasibilityResult best;
    bool solved = false;
    if (prev) {
      SolverOptions opt = base_options;
      opt.warm_start = prev;
      best = solve_feasibility(ap.problem, opt);
      solved = best.status == SolveStatus::Feasible;
    }
    if (!solved) {
      for (double scale : ladder) {
        AssembledProblem trial = assemble_feasibility_problem(
            ctx, points[s], betas[s], /*reduced=*/false, scale);
        SolverOptions opt = base_options;
        best = solve_feasibility(trial.problem, opt);
        if (best.status == SolveStatus::Feasible) {
          ap = std::move(trial);
          solved = true;
          break;
        }
      }
    }
    if (!solved)
      throw NonConvergence("design point rho=" + std::to_string(points[s]) +
                           " not certified: " + best.detail);

    const double vm = verify_margin(ap.problem, best.v);
    if (vm < 0.5 * ap.problem.eps_margin)
      throw NumericalBreakdown("independent margin recheck failed at rho=" +
                               std::to_string(points[s]));

    LmiSolution sol;
    sol.rho = points[s];
    sol.beta = betas[s];
    sol.margin = vm;
    sol.iterations = best.iterations;
    sol.Y = ap.map.decode_Y(best.v);
    sol.mult = ap.map.decode_multipliers(best.v);
    for (int i = 1; i <= ctx.N; ++i) {
      if (riccati_residual(ctx, i, points[s], betas[s], sol.Y, sol.mult) >= 0.0)
        throw NumericalBreakdown(
            "folded certificate disagrees with the block certificate for follower " +
            std::to_string(i) + " at rho=" + std::to_string(points[s]));
    }
    sched.solutions.push_back(std::move(sol));
    prev = best.v;
    assembled.push_back(std::move(ap));
    flat.push_back(best.v);
  }

  for (size_t s = 0; s < points.size(); ++s) {
    const double r = coverage_radius(scn.plant, points[s], betas[s]);
    if (s == 0 && points[s] - r > scn.plant.gamma_lo + tol)
      throw ValidationError("design grid leaves the lower end of the scheduling range uncovered");
    if (s + 1 == points.size() && points[s] + r < scn.plant.gamma_hi - tol)
      throw ValidationError("design grid leaves the upper end of the scheduling range uncovered");
    sched.grid.coverage.emplace_back(std::max(points[s] - r, scn.plant.gamma_lo),
                                     std::min(points[s] + r, scn.plant.gamma_hi));
  }
  sched.grid.corners = place_corners(sched.grid);

  // Chained solves stop at the first point clearing the accept margin, so
  // consecutive certificates can drift along the feasible boundary faster
  // than the rate condition tolerates. When that happens, contract the
  // certificate path toward the certificate that is feasible at the most
  // design points (they overlap whenever the budgets beta cover the spacing):
  // the blocks are affine in the flat variables, so a convex mix with a
  // cross-feasible anchor shrinks every inter-point difference by the same
  // factor while staying certifiable. Every contracted point is re-verified
  // at its own design point before it replaces the original, and contraction
  // stops as soon as q is comfortably below one so the certificates stay
  // genuinely parameter-dependent.
  const double sup_rate = scn.rho_profile.sup_rate();
  if (sched.solutions.size() >= 2 && sup_rate > 0.0) {
    const size_t M = flat.size();
    size_t anchor = 0;
    double anchor_worst = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < M; ++k) {
      double worst = std::numeric_limits<double>::infinity();
      for (size_t s = 0; s < M; ++s)
        worst = std::min(worst, verify_margin(assembled[s].problem, flat[k]));
      if (worst > anchor_worst) {
        anchor_worst = worst;
        anchor = k;
      }
    }
    for (int pass = 0; pass < 8; ++pass) {
      if (!(rate_condition(sched, sup_rate).q > 0.9)) break;
      bool adopted = false;
      for (double w : {0.5, 0.25, 0.125}) {
        std::vector<Eigen::VectorXd> cand(M);
        std::vector<LmiSolution> sols = sched.solutions;
        bool ok = true;
        for (size_t s = 0; s < M && ok; ++s) {
          cand[s] = flat[s] + w * (flat[anchor] - flat[s]);
          const double vm = verify_margin(assembled[s].problem, cand[s]);
          if (vm < 0.5 * assembled[s].problem.eps_margin) {
            ok = false;
            break;
          }
          sols[s].margin = vm;
          sols[s].Y = assembled[s].map.decode_Y(cand[s]);
          sols[s].mult = assembled[s].map.decode_multipliers(cand[s]);
          for (int i = 1; i <= ctx.N && ok; ++i)
            if (riccati_residual(ctx, i, points[s], betas[s], sols[s].Y,
                                 sols[s].mult) >= 0.0)
              ok = false;
        }
        if (!ok) continue;
        flat = std::move(cand);
        sched.solutions = std::move(sols);
        adopted = true;
        break;
      }
      if (!adopted) break;
    }
  }

  return sched;
}

// ---------------------------------------------------------------------------
// schedule JSON
// ---------------------------------------------------------------------------

namespace {

json interval_json(const std::pair<double, double>& iv) {
  json j;
  j["lower"] = iv.first;
  j["upper"] = iv.second;
  return j;
}

std::pair<double, double> interval_from(const json& j, const std::string& where) {
  reject_unknown(j, where, {"lower", "upper"});
  return {as_finite(member(j, where, "lower"), where + ".lower"),
          as_finite(member(j, where, "upper"), where + ".upper")};
}

json edge_multipliers_json(const std::map<std::pair<int, int>, double>& m) {
  json arr = json::array();
  for (const auto& [edge, value] : m) {
    json e;
    e["from"] = edge.first;
    e["to"] = edge.second;
    e["value"] = value;
    arr.push_back(e);
  }
  return arr;
}

json node_multipliers_json(const std::map<int, double>& m) {
  json arr = json::array();
  for (const auto& [node, value] : m) {
    json e;
    e["node"] = node;
    e["value"] = value;
    arr.push_back(e);
  }
  return arr;
}

std::map<std::pair<int, int>, double> edge_multipliers_from(const json& arr,
                                                            const std::string& where) {
  if (!arr.is_array()) fail(where, "expected an array");
  std::map<std::pair<int, int>, double> m;
  for (const auto& e : arr) {
    reject_unknown(e, where, {"from", "to", "value"});
    auto key = std::make_pair(as_int(member(e, where, "from"), where + ".from"),
                              as_int(member(e, where, "to"), where + ".to"));
    const double val = as_finite(member(e, where, "value"), where + ".value");
    if (!(val > 0.0)) fail(where, "multiplier values must be positive");
    if (!m.emplace(key, val).second) fail(where, "duplicate edge entry");
  }
  return m;
}

std::map<int, double> node_multipliers_from(const json& arr, const std::string& where) {
  if (!arr.is_array()) fail(where, "expected an array");
  std::map<int, double> m;
  for (const auto& e : arr) {
    reject_unknown(e, where, {"node", "value"});
    const int node = as_int(member(e, where, "node"), where + ".node");
    const double val = as_finite(member(e, where, "value"), where + ".value");
    if (!(val > 0.0)) fail(where, "multiplier values must be positive");
    if (!m.emplace(node, val).second) fail(where, "duplicate node entry");
  }
  return m;
}

}  // namespace

std::string schedule_to_json(const GainSchedule& s) {
  json root;
  root["mode"] = s.mode == ScheduleMode::Interpolated ? "interpolated" : "switching";
  root["n"] = s.n;
  root["p"] = s.p;
  root["gamma"] = json::array({s.gamma_lo, s.gamma_hi});
  json jc;
  jc["theta"] = vector_json(s.constants.theta);
  jc["sigma"] = s.constants.sigma;
  jc["lambda_hat"] = s.constants.lambda_hat;
  jc["Q_bar"] = matrix_json(s.constants.Q_bar);
  root["constants"] = jc;
  root["R"] = matrix_json(s.R);
  root["B1"] = matrix_json(s.B1);
  json pts = json::array();
  for (const auto& sol : s.solutions) {
    json jp;
    jp["rho"] = sol.rho;
    jp["beta"] = sol.beta;
    jp["margin"] = sol.margin;
    jp["iterations"] = sol.iterations;
    jp["Y"] = matrix_json(sol.Y);
    json jm;
    jm["nu"] = edge_multipliers_json(sol.mult.nu);
    jm["mu"] = edge_multipliers_json(sol.mult.mu);
    json jpi = json::array();
    for (double x : sol.mult.pi) jpi.push_back(x);
    jm["pi"] = jpi;
    jm["nu_from_leader"] = node_multipliers_json(sol.mult.nu_from_leader);
    jm["mu_to_leader"] = node_multipliers_json(sol.mult.mu_to_leader);
    jp["multipliers"] = jm;
    pts.push_back(jp);
  }
  root["points"] = pts;
  json cov = json::array();
  for (const auto& iv : s.grid.coverage) cov.push_back(interval_json(iv));
  root["coverage"] = cov;
  json cor = json::array();
  for (const auto& iv : s.grid.corners) cor.push_back(interval_json(iv));
  root["corners"] = cor;
  return root.dump(2) + "\n";
}

GainSchedule parse_schedule(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("schedule JSON: ") + e.what());
  }
  reject_unknown(root, "schedule",
                 {"mode", "n", "p", "gamma", "constants", "R", "B1", "points",
                  "coverage", "corners"});
  GainSchedule s;
  const json& jm = member(root, "schedule", "mode");
  if (!jm.is_string()) fail("schedule.mode", "expected a string");
  const std::string mode = jm.get<std::string>();
  if (mode == "interpolated")
    s.mode = ScheduleMode::Interpolated;
  else if (mode == "switching")
    s.mode = ScheduleMode::Switching;
  else
    fail("schedule.mode", "unknown mode '" + mode + "'");
  s.n = as_int(member(root, "schedule", "n"), "schedule.n");
  s.p = as_int(member(root, "schedule", "p"), "schedule.p");
  if (s.n < 1 || s.p < 1) fail("schedule", "dimensions must be positive");
  Eigen::VectorXd g = as_vector(member(root, "schedule", "gamma"), "schedule.gamma");
  if (g.size() != 2 || !(g(0) < g(1)))
    fail("schedule.gamma", "expected [lo, hi] with lo < hi");
  s.gamma_lo = g(0);
  s.gamma_hi = g(1);

  const json& jc = member(root, "schedule", "constants");
  reject_unknown(jc, "constants", {"theta", "sigma", "lambda_hat", "Q_bar"});
  s.constants.theta = as_vector(member(jc, "constants", "theta"), "constants.theta");
  s.constants.sigma = as_finite(member(jc, "constants", "sigma"), "constants.sigma");
  s.constants.lambda_hat =
      as_finite(member(jc, "constants", "lambda_hat"), "constants.lambda_hat");
  s.constants.Q_bar = as_matrix(member(jc, "constants", "Q_bar"), "constants.Q_bar");
  if (!(s.constants.sigma > 0.0) || !(s.constants.lambda_hat > 0.0))
    fail("constants", "sigma and lambda_hat must be positive");
  if (s.constants.theta.minCoeff() <= 0.0)
    fail("constants.theta", "entries must be positive");
  if (s.constants.Q_bar.rows() != s.n || s.constants.Q_bar.cols() != s.n)
    fail("constants.Q_bar", "must be n x n");

  s.R = as_matrix(member(root, "schedule", "R"), "schedule.R");
  s.B1 = as_matrix(member(root, "schedule", "B1"), "schedule.B1");
  if (s.R.rows() != s.p || s.R.cols() != s.p) fail("schedule.R", "must be p x p");
  if (s.B1.rows() != s.n || s.B1.cols() != s.p) fail("schedule.B1", "must be n x p");

  const json& jp = member(root, "schedule", "points");
  if (!jp.is_array() || jp.empty()) fail("points", "expected a nonempty array");
  for (const auto& e : jp) {
    reject_unknown(e, "points[]",
                   {"rho", "beta", "margin", "iterations", "Y", "multipliers"});
    LmiSolution sol;
    sol.rho = as_finite(member(e, "points[]", "rho"), "points[].rho");
    sol.beta = as_finite(member(e, "points[]", "beta"), "points[].beta");
    sol.margin = as_finite(member(e, "points[]", "margin"), "points[].margin");
    sol.iterations = as_int(member(e, "points[]", "iterations"), "points[].iterations");
    sol.Y = as_matrix(member(e, "points[]", "Y"), "points[].Y");
    if (sol.Y.rows() != s.n || sol.Y.cols() != s.n) fail("points[].Y", "must be n x n");
    if ((sol.Y - sol.Y.transpose()).cwiseAbs().maxCoeff() >
        1e-9 * (1.0 + sol.Y.cwiseAbs().maxCoeff()))
      fail("points[].Y", "must be symmetric");
    const json& mj = member(e, "points[]", "multipliers");
    reject_unknown(mj, "multipliers",
                   {"nu", "mu", "pi", "nu_from_leader", "mu_to_leader"});
    sol.mult.nu =
        edge_multipliers_from(member(mj, "multipliers", "nu"), "multipliers.nu");
    sol.mult.mu =
        edge_multipliers_from(member(mj, "multipliers", "mu"), "multipliers.mu");
    const json& jpi = member(mj, "multipliers", "pi");
    if (!jpi.is_array()) fail("multipliers.pi", "expected an array");
    for (const auto& x : jpi) {
      const double val = as_finite(x, "multipliers.pi");
      if (!(val > 0.0)) fail("multipliers.pi", "multiplier values must be positive");
      sol.mult.pi.push_back(val);
    }
    sol.mult.nu_from_leader = node_multipliers_from(
        member(mj, "multipliers", "nu_from_leader"), "multipliers.nu_from_leader");
    sol.mult.mu_to_leader = node_multipliers_from(
        member(mj, "multipliers", "mu_to_leader"), "multipliers.mu_to_leader");
    s.grid.points.push_back(sol.rho);
    s.grid.betas.push_back(sol.beta);
    s.solutions.push_back(std::move(sol));
  }
  for (size_t k = 1; k < s.grid.points.size(); ++k)
    if (!(s.grid.points[k] > s.grid.points[k - 1]))
      fail("points", "design points must be strictly increasing");

  const json& jcov = member(root, "schedule", "coverage");
  if (!jcov.is_array() || jcov.size() != s.solutions.size())
    fail("coverage", "expected one interval per design point");
  for (const auto& e : jcov) s.grid.coverage.push_back(interval_from(e, "coverage[]"));
  const json& jcor = member(root, "schedule", "corners");
  if (!jcor.is_array() || jcor.size() + 1 != s.solutions.size())
    fail("corners", "expected one window per adjacent pair of design points");
  for (const auto& e : jcor) {
    auto iv = interval_from(e, "corners[]");
    if (!(iv.first < iv.second)) fail("corners[]", "window must have positive width");
    s.grid.corners.push_back(iv);
  }
  return s;
}

void save_schedule(const GainSchedule& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write schedule file: " + path);
  out << schedule_to_json(s);
}

GainSchedule load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schedule file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schedule(ss.str());
}

}  // namespace lfgs
