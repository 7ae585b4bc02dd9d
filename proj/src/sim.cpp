#include "lfgs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"

namespace lfgs {

using json = nlohmann::ordered_json;

namespace {

// Stage gain provider: all follower gains for one value of the parameter.
using StageGains = std::function<std::vector<Eigen::MatrixXd>(double rho)>;

struct LoopDynamics {
  const Scenario* scn = nullptr;
  const UncertaintyRealization* unc = nullptr;
  StageGains stage_gains;
  int n = 0, p = 0, m = 0, N = 0;
  std::vector<std::vector<int>> coupling_in_all;  // per node, senders incl. leader
  std::vector<std::vector<int>> comm_in;          // per follower
  std::vector<char> pinned;
  std::vector<std::pair<const Eigen::MatrixXd*, std::pair<int, int>>> shapes;

  const Eigen::MatrixXd& shape(int from, int to) const {
    const Eigen::MatrixXd* C = scn->coupling(from, to);
    if (!C)
      throw ValidationError("no coupling shape for edge (" + std::to_string(from) +
                            "," + std::to_string(to) + ")");
    return *C;
  }

  // dX (and optionally the follower controls) at one time instant
  void rhs(double t, const Eigen::VectorXd& X, Eigen::VectorXd& dX,
           Eigen::VectorXd* u_out) const {
    const double rho = scn->rho_profile.eval(t);
    const Eigen::MatrixXd A = eval_A(scn->plant, rho);
    const std::vector<Eigen::MatrixXd> gains = stage_gains(rho);
    if (static_cast<int>(gains.size()) != N)
      throw ShapeMismatch("gain provider returned the wrong number of gains");
    for (int v = 0; v <= N; ++v) {
      const auto xv = X.segment(static_cast<Eigen::Index>(v) * n, n);
      Eigen::VectorXd phi = Eigen::VectorXd::Zero(m);
      for (int j : coupling_in_all[v]) {
        const Eigen::MatrixXd& C = shape(j, v);
        const Eigen::MatrixXd delta =
            unc->eval(j, v, t, m, static_cast<int>(C.rows()));
        if (delta.rows() != m || delta.cols() != C.rows())
          throw ShapeMismatch("uncertainty value has the wrong shape on edge (" +
                              std::to_string(j) + "," + std::to_string(v) + ")");
        phi += delta * (C * (X.segment(static_cast<Eigen::Index>(j) * n, n) - xv));
      }
      if (v == 0) {
        dX.segment(0, n) = A * xv + scn->plant.B2 * phi;
        continue;
      }
      const Eigen::MatrixXd& K = gains[v - 1];
      if (K.rows() != p || K.cols() != n)
        throw ShapeMismatch("gain for follower " + std::to_string(v) +
                            " has the wrong shape");
      Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
      for (int j : comm_in[v])
        z += X.segment(static_cast<Eigen::Index>(j) * n, n) - xv;
      if (pinned[v]) z += X.segment(0, n) - xv;
      const Eigen::VectorXd u = -(K * z);
      if (u_out) u_out->segment(static_cast<Eigen::Index>(v - 1) * p, p) = u;
      dX.segment(static_cast<Eigen::Index>(v) * n, n) =
          A * xv + scn->plant.B1 * u + scn->plant.B2 * phi;
    }
  }
};

LoopDynamics make_loop(const Scenario& scn, const UncertaintyRealization& unc,
                       StageGains gains) {
  const int N = scn.topology.num_followers;
  if (static_cast<int>(scn.init.size()) != N + 1)
    throw ValidationError("scenario needs one initial state per node");
  for (const auto& x0 : scn.init)
    if (x0.size() != scn.plant.n)
      throw ValidationError("initial states must have n entries");
  unc.check();

  LoopDynamics loop;
  loop.scn = &scn;
  loop.unc = &unc;
  loop.stage_gains = std::move(gains);
  loop.n = scn.plant.n;
  loop.p = scn.plant.p;
  loop.m = scn.plant.m;
  loop.N = N;
  loop.coupling_in_all.assign(N + 1, {});
  for (const auto& [from, to] : scn.topology.coupling_edges)
    loop.coupling_in_all[to].push_back(from);
  loop.comm_in.assign(N + 1, {});
  loop.pinned.assign(N + 1, 0);
  for (int i = 1; i <= N; ++i) {
    loop.comm_in[i] = scn.topology.comm_in(i);
    loop.pinned[i] = scn.topology.is_pinned(i) ? 1 : 0;
  }
  return loop;
}

Trajectory run_loop(const Scenario& scn, const LoopDynamics& loop,
                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const int n = loop.n, p = loop.p, N = loop.N;
  const double dt = scn.sim.dt;
  const int K = static_cast<int>(std::llround(scn.sim.T / dt));
  if (K < 1) throw ValidationError("simulation horizon shorter than one step");

  Trajectory traj;
  traj.n = n;
  traj.p = p;
  traj.num_followers = N;
  traj.t.resize(K + 1);
  traj.rho.resize(K + 1);
  traj.states.resize(static_cast<Eigen::Index>(N + 1) * n, K + 1);
  traj.controls.resize(static_cast<Eigen::Index>(N) * p, K + 1);

  Eigen::VectorXd X(static_cast<Eigen::Index>(N + 1) * n);
  for (int v = 0; v <= N; ++v)
    X.segment(static_cast<Eigen::Index>(v) * n, n) = scn.init[v];

  Eigen::VectorXd k1(X.size()), k2(X.size()), k3(X.size()), k4(X.size());
  Eigen::VectorXd u(static_cast<Eigen::Index>(N) * p);
  for (int k = 0; k <= K; ++k) {
    const double t = k * dt;
    traj.t(k) = t;
    traj.rho(k) = scn.rho_profile.eval(t);
    traj.states.col(k) = X;
    loop.rhs(t, X, k1, &u);
    traj.controls.col(k) = u;
    if (k == K) break;
    loop.rhs(t + 0.5 * dt, X + (0.5 * dt) * k1, k2, nullptr);
    loop.rhs(t + 0.5 * dt, X + (0.5 * dt) * k2, k3, nullptr);
    loop.rhs(t + dt, X + dt * k3, k4, nullptr);
    X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!X.allFinite() || X.cwiseAbs().maxCoeff() > 1e12)
      throw NumericalBreakdown("closed-loop state diverged at t=" +
                               std::to_string(t + dt));
  }
  traj.cost_running = running_cost(traj, Q, R);
  return traj;
}

StageGains schedule_gains(const Scenario& scn, const GainSchedule& sched) {
  const int N = scn.topology.num_followers;
  if (static_cast<int>(sched.constants.theta.size()) != N)
    throw ValidationError("schedule was built for a different number of followers");
  if (sched.n != scn.plant.n || sched.p != scn.plant.p)
    throw ShapeMismatch("schedule dimensions do not match the scenario");
  return [&scn, &sched, N](double rho) {
    const Eigen::MatrixXd Y = sched.Y_of_rho(rho);
    Eigen::LLT<Eigen::MatrixXd> ylt(Y);
    if (ylt.info() != Eigen::Success)
      throw NumericalBreakdown("scheduled Y lost positive definiteness");
    Eigen::LLT<Eigen::MatrixXd> rlt(sched.R);
    if (rlt.info() != Eigen::Success)
      throw NumericalBreakdown("input weight R is not positive definite");
    const Eigen::MatrixXd Z = rlt.solve(sched.B1.transpose());
    const Eigen::MatrixXd base =
        (-1.0 / sched.constants.sigma) * ylt.solve(Z.transpose()).transpose();
    std::vector<Eigen::MatrixXd> gains(N);
    for (int i = 1; i <= N; ++i)
      gains[i - 1] = base / sched.constants.theta(i - 1);
    return gains;
  };
}

}  // namespace

Trajectory simulate(const Scenario& scn, const GainFn& gain,
                    const UncertaintyRealization& unc) {
  const int N = scn.topology.num_followers;
  StageGains gains = [&gain, N](double rho) {
    std::vector<Eigen::MatrixXd> out(N);
    for (int i = 1; i <= N; ++i) out[i - 1] = gain(i, rho);
    return out;
  };
  const LoopDynamics loop = make_loop(scn, unc, std::move(gains));
  return run_loop(scn, loop, scn.Q, scn.R);
}

Trajectory simulate(const Scenario& scn, const GainSchedule& sched,
                    const UncertaintyRealization& unc) {
  const LoopDynamics loop = make_loop(scn, unc, schedule_gains(scn, sched));
  return run_loop(scn, loop, scn.Q, scn.R);
}

Eigen::MatrixXd tracking_errors(const Trajectory& traj) {
  const int n = traj.n, N = traj.num_followers;
  Eigen::MatrixXd e(static_cast<Eigen::Index>(N) * n, traj.t.size());
  for (int i = 1; i <= N; ++i)
    e.middleRows(static_cast<Eigen::Index>(i - 1) * n, n) =
        traj.states.topRows(n) -
        traj.states.middleRows(static_cast<Eigen::Index>(i) * n, n);
  return e;
}

namespace {

Eigen::MatrixXd derivatives_of(const LoopDynamics& loop, const Trajectory& traj) {
  Eigen::MatrixXd dX(traj.states.rows(), traj.states.cols());
  Eigen::VectorXd col(traj.states.rows());
  for (Eigen::Index k = 0; k < traj.t.size(); ++k) {
    loop.rhs(traj.t(k), traj.states.col(k), col, nullptr);
    dX.col(k) = col;
  }
  return dX;
}

}  // namespace

Eigen::MatrixXd state_derivatives(const Scenario& scn, const GainSchedule& sched,
                                  const UncertaintyRealization& unc,
                                  const Trajectory& traj) {
  return derivatives_of(make_loop(scn, unc, schedule_gains(scn, sched)), traj);
}

Eigen::MatrixXd state_derivatives(const Scenario& scn, const GainFn& gain,
                                  const UncertaintyRealization& unc,
                                  const Trajectory& traj) {
  const int N = scn.topology.num_followers;
  StageGains gains = [&gain, N](double rho) {
    std::vector<Eigen::MatrixXd> out(N);
    for (int i = 1; i <= N; ++i) out[i - 1] = gain(i, rho);
    return out;
  };
  return derivatives_of(make_loop(scn, unc, std::move(gains)), traj);
}

namespace {

// integrand g(t_k) of the tracking cost on the sample grid
Eigen::VectorXd cost_integrand(const Trajectory& traj, const Eigen::MatrixXd& Q,
                               const Eigen::MatrixXd& R) {
  const int n = traj.n, p = traj.p, N = traj.num_followers;
  if (Q.rows() != n || Q.cols() != n) throw ShapeMismatch("Q must be n x n");
  if (R.rows() != p || R.cols() != p) throw ShapeMismatch("R must be p x p");
  const Eigen::MatrixXd e = tracking_errors(traj);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(traj.t.size());
  for (Eigen::Index k = 0; k < traj.t.size(); ++k) {
    double val = 0.0;
    for (int i = 1; i <= N; ++i) {
      const auto ei = e.col(k).segment(static_cast<Eigen::Index>(i - 1) * n, n);
      const auto ui = traj.controls.col(k).segment(static_cast<Eigen::Index>(i - 1) * p, p);
      val += ei.dot(Q * ei) + ui.dot(R * ui);
    }
    g(k) = val;
  }
  return g;
}

double grid_step(const Trajectory& traj) {
  if (traj.t.size() < 2) throw ValidationError("trajectory has fewer than two samples");
  return traj.t(1) - traj.t(0);
}

}  // namespace

Eigen::VectorXd running_cost(const Trajectory& traj, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R) {
  const Eigen::VectorXd g = cost_integrand(traj, Q, R);
  const double h = grid_step(traj);
  Eigen::VectorXd S = Eigen::VectorXd::Zero(g.size());
  for (Eigen::Index k = 1; k < g.size(); ++k) {
    if (k % 2 == 0)
      S(k) = S(k - 2) + (h / 3.0) * (g(k - 2) + 4.0 * g(k - 1) + g(k));
    else
      S(k) = S(k - 1) + (h / 2.0) * (g(k - 1) + g(k));
  }
  return S;
}

double evaluate_cost(const Trajectory& traj, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& R) {
  const Eigen::VectorXd g = cost_integrand(traj, Q, R);
  const double h = grid_step(traj);
  const Eigen::Index K = g.size() - 1;
  double J = 0.0;
  Eigen::Index k = 2;
  for (; k <= K; k += 2) J += (h / 3.0) * (g(k - 2) + 4.0 * g(k - 1) + g(k));
  if (K % 2 == 1) J += (h / 2.0) * (g(K - 1) + g(K));
  return J;
}

CostReport performance_report(const Scenario& scn, const GainSchedule& sched,
                              const Trajectory& traj) {
  CostReport rep;
  rep.rho_dot_sup = scn.rho_profile.sup_rate();
  rep.rate = rate_condition(sched, rep.rho_dot_sup);
  if (rep.rate.q >= 1.0)
    throw RateViolated("parameter rate exceeds what the schedule tolerates: q=" +
                       std::to_string(rep.rate.q));

  const double rho0 = scn.rho_profile.eval(0.0);
  const Eigen::MatrixXd Y0 = sched.Y_of_rho(rho0);
  Eigen::LLT<Eigen::MatrixXd> ylt(Y0);
  if (ylt.info() != Eigen::Success)
    throw NumericalBreakdown("scheduled Y lost positive definiteness");
  double sum0 = 0.0;
  for (int i = 1; i <= scn.topology.num_followers; ++i) {
    const Eigen::VectorXd e0 = scn.init[0] - scn.init[i];
    sum0 += e0.dot(ylt.solve(e0));
  }
  const double s2 = sched.constants.sigma * sched.constants.sigma;
  rep.bound_scheduled =
      sched.constants.lambda_hat / ((1.0 - rep.rate.q) * s2) * sum0;
  if (sched.solutions.size() == 1)
    rep.bound_fixed = sched.constants.lambda_hat / s2 * sum0;

  rep.J = evaluate_cost(traj, scn.Q, scn.R);
  const Eigen::Index K = traj.t.size() - 1;
  rep.horizon = traj.t(K);

  const Eigen::MatrixXd e = tracking_errors(traj);
  const Eigen::VectorXd g = cost_integrand(traj, scn.Q, scn.R);
  const double e_half = e.col(K / 2).norm();
  const double e_end = e.col(K).norm();
  if (e_end <= 0.0 || g(K) <= 0.0) {
    rep.tail_estimate = 0.0;
  } else {
    double decay = (2.0 / rep.horizon) * std::log(e_half / e_end);
    if (!std::isfinite(decay) || decay < 1e-6) decay = 1e-6;
    rep.tail_estimate = g(K) / decay;
  }
  return rep;
}

std::vector<SweepEntry> uncertainty_sweep(
    const Scenario& scn, const GainSchedule& sched,
    const std::vector<UncertaintyRealization>& realizations) {
  std::vector<SweepEntry> out;
  for (const auto& r : realizations) {
    const Trajectory traj = simulate(scn, sched, r);
    out.push_back({r.name, evaluate_cost(traj, scn.Q, scn.R)});
  }
  return out;
}

std::vector<UncertaintyRealization> standard_realizations(
    const Scenario& scn, const std::string& spec, std::uint64_t seed) {
  const int m = scn.plant.m;
  auto edge_shapes = [&]() {
    std::vector<std::pair<std::pair<int, int>, int>> out;  // edge -> q
    for (const auto& c : scn.couplings)
      out.push_back({{c.from, c.to}, static_cast<int>(c.C.rows())});
    std::sort(out.begin(), out.end());
    return out;
  };

  std::vector<UncertaintyRealization> result;
  if (spec == "zero") {
    UncertaintyRealization r;
    r.name = "zero";
    result.push_back(std::move(r));
  } else if (spec == "nominal" || spec == "sin5") {
    UncertaintyRealization r;
    r.name = spec;
    for (const auto& [edge, q] : edge_shapes()) {
      DeltaSignal sig;
      sig.M = Eigen::MatrixXd::Identity(m, q);
      if (spec == "nominal") {
        sig.kind = DeltaSignal::Kind::Constant;
      } else {
        sig.kind = DeltaSignal::Kind::Sinusoid;
        sig.amplitude = 1.0;
        sig.frequency = 5.0;
        sig.phase = 0.0;
      }
      r.delta[edge] = std::move(sig);
    }
    result.push_back(std::move(r));
  } else if (spec.rfind("random:", 0) == 0) {
    int count = 0;
    try {
      count = std::stoi(spec.substr(7));
    } catch (const std::exception&) {
      throw ValidationError("malformed uncertainty spec '" + spec + "'");
    }
    if (count < 1) throw ValidationError("random realization count must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(0.0, 1.0);
    std::uniform_real_distribution<double> freq(0.5, 5.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int k = 1; k <= count; ++k) {
      UncertaintyRealization r;
      r.name = "random-" + std::to_string(k);
      for (const auto& [edge, q] : edge_shapes()) {
        DeltaSignal sig;
        sig.kind = DeltaSignal::Kind::Sinusoid;
        sig.M = Eigen::MatrixXd::Identity(m, q);
        sig.amplitude = amp(rng);
        sig.frequency = freq(rng);
        sig.phase = phase(rng);
        r.delta[edge] = std::move(sig);
      }
      result.push_back(std::move(r));
    }
  } else {
    throw ValidationError("unknown uncertainty spec '" + spec + "'");
  }
  for (const auto& r : result) r.check();
  return result;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write trajectory file: " + path);
  out << "t,rho,cost";
  for (int v = 0; v <= traj.num_followers; ++v)
    for (int c = 1; c <= traj.n; ++c) out << ",x" << v << "_" << c;
  for (int i = 1; i <= traj.num_followers; ++i)
    for (int c = 1; c <= traj.p; ++c) out << ",u" << i << "_" << c;
  out << "\n";
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    out << buf;
  };
  for (Eigen::Index k = 0; k < traj.t.size(); ++k) {
    put(traj.t(k));
    out << ",";
    put(traj.rho(k));
    out << ",";
    put(traj.cost_running(k));
    for (Eigen::Index r = 0; r < traj.states.rows(); ++r) {
      out << ",";
      put(traj.states(r, k));
    }
    for (Eigen::Index r = 0; r < traj.controls.rows(); ++r) {
      out << ",";
      put(traj.controls(r, k));
    }
    out << "\n";
  }
}

std::string cost_report_to_json(const CostReport& rep) {
  json root;
  root["J"] = rep.J;
  root["bound_scheduled"] = rep.bound_scheduled;
  if (rep.bound_fixed) root["bound_fixed"] = *rep.bound_fixed;
  root["eta"] = rep.rate.eta;
  root["varrho"] = rep.rate.varrho;
  root["q"] = rep.rate.q;
  root["rho_dot_sup"] = rep.rho_dot_sup;
  root["horizon"] = rep.horizon;
  root["tail_estimate"] = rep.tail_estimate;
  return root.dump(2) + "\n";
}

void write_cost_report(const CostReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write cost report: " + path);
  out << cost_report_to_json(rep);
}

}  // namespace lfgs
