#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfgs/plant.hpp"
#include "lfgs/schedule.hpp"
#include "lfgs/sim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

std::vector<double> parse_number_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    const std::string tok = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double val = 0.0;
    try {
      val = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw lfgs::ParseError("bad " + what + " entry '" + tok + "'");
    }
    if (used != tok.size())
      throw lfgs::ParseError("bad " + what + " entry '" + tok + "'");
    out.push_back(val);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw lfgs::ParseError(what + " list is empty");
  return out;
}

struct GridChoice {
  std::vector<double> points;
  std::vector<double> betas;
  bool automatic = false;  // may escalate the point count on infeasibility
};

bool grid_covers(const lfgs::LpvPlant& plant, const std::vector<double>& pts,
                 const std::vector<double>& betas) {
  const double span = plant.gamma_hi - plant.gamma_lo;
  const double tol = 1e-9 * (1.0 + std::abs(span));
  std::vector<double> radii(pts.size());
  double min_r = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < pts.size(); ++s) {
    radii[s] = lfgs::coverage_radius(plant, pts[s], betas[s]);
    min_r = std::min(min_r, radii[s]);
  }
  if (pts.front() - radii.front() > plant.gamma_lo + tol) return false;
  if (pts.back() + radii.back() < plant.gamma_hi - tol) return false;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double lo = std::max({pts[s] - radii[s], pts[s + 1] - radii[s + 1],
                                pts[s]});
    const double hi = std::min({pts[s] + radii[s], pts[s + 1] + radii[s + 1],
                                pts[s + 1]});
    if (!(lo < hi)) return false;
    const double spacing = pts[s + 1] - pts[s];
    if (!(spacing < 1.5 * min_r)) return false;
  }
  return true;
}

GridChoice resolve_grid(const lfgs::LpvPlant& plant, const std::string& grid_arg,
                        const std::string& betas_arg) {
  GridChoice choice;
  if (grid_arg == "auto" || grid_arg.rfind("auto:", 0) == 0) {
    choice.automatic = true;
    int count = 0;
    if (grid_arg != "auto") {
      try {
        count = std::stoi(grid_arg.substr(5));
      } catch (const std::exception&) {
        throw lfgs::ParseError("bad grid spec '" + grid_arg + "'");
      }
      if (count < 1) throw lfgs::ParseError("grid point count must be positive");
      choice.automatic = false;  // explicit count: do not escalate
    }
    if (count == 0) {
      for (int M = 1; M <= 64 && count == 0; ++M) {
        const auto pts = lfgs::auto_grid(plant, M);
        const auto bts = lfgs::auto_betas(plant, pts);
        if (grid_covers(plant, pts, bts)) count = M;
      }
      if (count == 0)
        throw lfgs::NonConvergence(
            "no automatic grid of up to 64 points covers the scheduling range");
    }
    choice.points = lfgs::auto_grid(plant, count);
  } else {
    choice.points = parse_number_list(grid_arg, "grid");
  }
  if (betas_arg.empty()) {
    choice.betas = lfgs::auto_betas(plant, choice.points);
  } else {
    choice.betas = parse_number_list(betas_arg, "beta");
    if (choice.betas.size() == 1 && choice.points.size() > 1)
      choice.betas.assign(choice.points.size(), choice.betas.front());
  }
  return choice;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw lfgs::ParseError("cannot write file: " + path.string());
  out << text;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const Eigen::VectorXd& t, const Eigen::MatrixXd& cols) {
  std::ofstream out(path);
  if (!out) throw lfgs::ParseError("cannot write file: " + path.string());
  out << "t";
  for (const auto& h : header) out << "," << h;
  out << "\n";
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    out << buf;
  };
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    put(t(k));
    for (Eigen::Index r = 0; r < cols.rows(); ++r) {
      out << ",";
      put(cols(r, k));
    }
    out << "\n";
  }
}

int cmd_validate(const std::string& scenario_path) {
  lfgs::Scenario scn;
  try {
    scn = lfgs::load_scenario(scenario_path);
  } catch (const lfgs::ValidationError& e) {
    std::cout << "validation: FAIL\n  " << e.what() << "\n";
    return 1;
  }
  const lfgs::ValidationReport report = lfgs::validate_topology(scn.topology);
  std::cout << "validation: " << (report.pass ? "PASS" : "FAIL") << "\n";
  std::cout << "followers: " << scn.topology.num_followers << "\n";
  std::cout << "spanning tree from a pinned follower: "
            << (report.has_spanning_tree ? "yes" : "no") << "\n";
  for (const auto& issue : report.issues) std::cout << "  issue: " << issue << "\n";
  if (!report.pass) return 1;
  const lfgs::ConsensusConstants cc =
      lfgs::consensus_constants(scn.topology, scn.Q);
  std::cout << "sigma = " << fmt("%.6f", cc.sigma) << "\n";
  std::cout << "lambda_hat = " << fmt("%.6f", cc.lambda_hat) << "\n";
  std::cout << "theta = [";
  for (Eigen::Index i = 0; i < cc.theta.size(); ++i)
    std::cout << (i ? ", " : "") << fmt("%.6g", cc.theta(i));
  std::cout << "]\n";
  return 0;
}

int cmd_synthesize(const std::string& scenario_path, const std::string& grid_arg,
                   const std::string& betas_arg, const std::string& mode_arg,
                   const std::string& out_dir) {
  const lfgs::Scenario scn = lfgs::load_scenario(scenario_path);
  const lfgs::ScheduleMode mode = (mode_arg == "switching")
                                      ? lfgs::ScheduleMode::Switching
                                      : lfgs::ScheduleMode::Interpolated;
  GridChoice choice = resolve_grid(scn.plant, grid_arg, betas_arg);

  lfgs::GainSchedule sched;
  bool done = false;
  while (!done) {
    try {
      sched = lfgs::synthesize(scn, choice.points, choice.betas, mode);
      done = true;
    } catch (const lfgs::NonConvergence&) {
      if (!choice.automatic || choice.points.size() >= 64) throw;
      const int next = static_cast<int>(choice.points.size()) + 1;
      std::cout << "grid of " << choice.points.size()
                << " points infeasible, retrying with " << next << "\n";
      choice.points = lfgs::auto_grid(scn.plant, next);
      choice.betas = lfgs::auto_betas(scn.plant, choice.points);
    }
  }

  for (const auto& sol : sched.solutions)
    std::cout << "design point rho=" << fmt("%.6g", sol.rho)
              << " beta=" << fmt("%.6g", sol.beta)
              << " margin=" << fmt("%.6e", sol.margin)
              << " iterations=" << sol.iterations << "\n";
  fs::create_directories(out_dir);
  const fs::path out = fs::path(out_dir) / "schedule.json";
  lfgs::save_schedule(sched, out.string());
  std::cout << "schedule written to " << out.string() << "\n";
  return 0;
}

struct SimOutputs {
  double J = 0.0;
  lfgs::CostReport report;
};

SimOutputs run_one_mode(const lfgs::Scenario& scn, lfgs::GainSchedule sched,
                        lfgs::ScheduleMode mode,
                        const std::vector<lfgs::UncertaintyRealization>& reals,
                        double headway, const fs::path& out_dir,
                        const std::string& suffix) {
  sched.mode = mode;
  const lfgs::UncertaintyRealization& unc = reals.front();
  const lfgs::Trajectory traj = lfgs::simulate(scn, sched, unc);
  const lfgs::CostReport rep = lfgs::performance_report(scn, sched, traj);
  const int n = traj.n, p = traj.p, N = traj.num_followers;

  lfgs::write_trajectory_csv(traj, (out_dir / ("trajectory" + suffix + ".csv")).string());
  lfgs::write_cost_report(rep, (out_dir / ("cost_report" + suffix + ".json")).string());

  std::vector<std::string> head;
  const Eigen::MatrixXd errors = lfgs::tracking_errors(traj);
  head.clear();
  for (int i = 1; i <= N; ++i)
    for (int c = 1; c <= n; ++c)
      head.push_back("e" + std::to_string(i) + "_" + std::to_string(c));
  write_csv(out_dir / ("errors" + suffix + ".csv"), head, traj.t, errors);

  head.clear();
  for (int v = 0; v <= N; ++v)
    for (int c = 1; c <= n; ++c)
      head.push_back("x" + std::to_string(v) + "_" + std::to_string(c));
  write_csv(out_dir / ("states" + suffix + ".csv"), head, traj.t, traj.states);

  Eigen::MatrixXd dist(N, traj.t.size());
  for (int i = 1; i <= N; ++i)
    dist.row(i - 1) = traj.states.row(static_cast<Eigen::Index>(i) * n) -
                      traj.states.row(static_cast<Eigen::Index>(i - 1) * n) +
                      Eigen::RowVectorXd::Constant(traj.t.size(), headway);
  head.clear();
  for (int i = 1; i <= N; ++i) head.push_back("d" + std::to_string(i));
  write_csv(out_dir / ("distances" + suffix + ".csv"), head, traj.t, dist);

  head.clear();
  for (int i = 1; i <= N; ++i)
    for (int c = 1; c <= p; ++c)
      head.push_back("u" + std::to_string(i) + "_" + std::to_string(c));
  write_csv(out_dir / ("controls" + suffix + ".csv"), head, traj.t, traj.controls);

  const Eigen::MatrixXd dX = lfgs::state_derivatives(scn, sched, unc, traj);
  Eigen::MatrixXd accel(N + 1, traj.t.size());
  for (int v = 0; v <= N; ++v)
    accel.row(v) = dX.row(static_cast<Eigen::Index>(v) * n + (n - 1));
  head.clear();
  for (int v = 0; v <= N; ++v) head.push_back("a" + std::to_string(v));
  write_csv(out_dir / ("accelerations" + suffix + ".csv"), head, traj.t, accel);

  const lfgs::GainFn zero_gain = [&](int, double) {
    return Eigen::MatrixXd::Zero(p, n);
  };
  const lfgs::Trajectory free_traj = lfgs::simulate(scn, zero_gain, unc);
  const Eigen::MatrixXd dX_free =
      lfgs::state_derivatives(scn, zero_gain, unc, free_traj);
  Eigen::MatrixXd accel_free(N + 1, free_traj.t.size());
  for (int v = 0; v <= N; ++v)
    accel_free.row(v) = dX_free.row(static_cast<Eigen::Index>(v) * n + (n - 1));
  write_csv(out_dir / ("accelerations_free" + suffix + ".csv"), head, free_traj.t,
            accel_free);

  if (reals.size() > 1) {
    const auto sweep = lfgs::uncertainty_sweep(scn, sched, reals);
    json root = json::array();
    for (const auto& entry : sweep)
      root.push_back({{"name", entry.name}, {"J", entry.J}});
    write_text(out_dir / ("sweep" + suffix + ".json"), root.dump(2) + "\n");
  }

  std::cout << "mode="
            << (mode == lfgs::ScheduleMode::Interpolated ? "interpolated"
                                                         : "switching")
            << " J=" << fmt("%.6f", rep.J)
            << " bound=" << fmt("%.6f", rep.bound_scheduled)
            << " q=" << fmt("%.6f", rep.rate.q) << "\n";
  return {rep.J, rep};
}

int cmd_simulate(const std::string& scenario_path, const std::string& schedule_path,
                 const std::string& mode_arg, const std::string& out_dir,
                 double dt, double horizon, const std::string& uncertainty,
                 std::uint64_t seed, double headway) {
  lfgs::Scenario scn = lfgs::load_scenario(scenario_path);
  if (dt > 0.0) scn.sim.dt = dt;
  if (horizon > 0.0) scn.sim.T = horizon;
  const double steps = scn.sim.T / scn.sim.dt;
  if (std::abs(steps - std::llround(steps)) > 1e-9 * (1.0 + std::abs(steps)))
    throw lfgs::ValidationError("dt must divide the horizon");
  const lfgs::GainSchedule sched = lfgs::load_schedule(schedule_path);
  const auto reals = lfgs::standard_realizations(scn, uncertainty, seed);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  if (mode_arg == "both") {
    const SimOutputs interp = run_one_mode(scn, sched,
                                           lfgs::ScheduleMode::Interpolated,
                                           reals, headway, out, "_interpolated");
    const SimOutputs sw = run_one_mode(scn, sched, lfgs::ScheduleMode::Switching,
                                       reals, headway, out, "_switching");
    json cmp;
    cmp["J_interpolated"] = interp.J;
    cmp["J_switching"] = sw.J;
    cmp["relative_gap"] =
        interp.J > 0.0 ? std::abs(sw.J - interp.J) / interp.J : 0.0;
    cmp["bound_scheduled"] = interp.report.bound_scheduled;
    cmp["q"] = interp.report.rate.q;
    write_text(out / "comparison.json", cmp.dump(2) + "\n");
    std::cout << "comparison written to " << (out / "comparison.json").string()
              << "\n";
  } else {
    lfgs::ScheduleMode mode = sched.mode;
    if (mode_arg == "interpolated") mode = lfgs::ScheduleMode::Interpolated;
    if (mode_arg == "switching") mode = lfgs::ScheduleMode::Switching;
    run_one_mode(scn, sched, mode, reals, headway, out, "");
  }
  return 0;
}

int cmd_rate_check(const std::string& scenario_path,
                   const std::string& schedule_path) {
  const lfgs::Scenario scn = lfgs::load_scenario(scenario_path);
  const lfgs::GainSchedule sched = lfgs::load_schedule(schedule_path);
  const double rho_dot_sup = scn.rho_profile.sup_rate();
  const lfgs::RateReport rate = lfgs::rate_condition(sched, rho_dot_sup);
  std::cout << "eta = " << fmt("%.6f", rate.eta) << "\n";
  std::cout << "varrho = " << fmt("%.6f", rate.varrho) << "\n";
  std::cout << "rho_dot_sup = " << fmt("%.6f", rho_dot_sup) << "\n";
  std::cout << "q = " << fmt("%.6f", rate.q) << "\n";
  std::cout << "verdict: " << (rate.q < 1.0 ? "PASS" : "FAIL") << "\n";
  return rate.q < 1.0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gain-scheduled leader-follower tracking toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, schedule_path, out_dir = ".";
  std::string grid_arg = "auto", betas_arg, mode_arg;
  std::string uncertainty = "nominal";
  double dt = 0.0, horizon = 0.0, headway = 1.0;
  std::uint64_t seed = 0;

  CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", scenario_path, "scenario JSON")->required();

  CLI::App* synth = app.add_subcommand("synthesize", "Certify a design grid");
  synth->add_option("--scenario", scenario_path, "scenario JSON")->required();
  synth->add_option("--grid", grid_arg,
                    "comma list of design points, auto, or auto:M");
  synth->add_option("--betas", betas_arg,
                    "comma list of robustness budgets (single value broadcasts)");
  synth->add_option("--mode", mode_arg, "interpolated or switching")
      ->default_val("interpolated")
      ->check(CLI::IsMember({"interpolated", "switching"}));
  synth->add_option("--out", out_dir, "output directory");

  CLI::App* sim = app.add_subcommand("simulate", "Run the closed loop");
  sim->add_option("--scenario", scenario_path, "scenario JSON")->required();
  sim->add_option("--schedule", schedule_path, "schedule JSON")->required();
  sim->add_option("--mode", mode_arg,
                  "interpolated, switching, both, or schedule (file default)")
      ->default_val("schedule")
      ->check(CLI::IsMember({"interpolated", "switching", "both", "schedule"}));
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--dt", dt, "step override");
  sim->add_option("--horizon", horizon, "horizon override");
  sim->add_option("--uncertainty", uncertainty,
                  "zero, nominal, sin5, or random:K");
  sim->add_option("--seed", seed, "seed for random realizations");
  sim->add_option("--headway", headway, "distance offset between neighbours");

  CLI::App* rate = app.add_subcommand("rate-check", "Evaluate the rate condition");
  rate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  rate->add_option("--schedule", schedule_path, "schedule JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(scenario_path);
    if (app.got_subcommand(synth))
      return cmd_synthesize(scenario_path, grid_arg, betas_arg, mode_arg, out_dir);
    if (app.got_subcommand(sim))
      return cmd_simulate(scenario_path, schedule_path, mode_arg, out_dir, dt,
                          horizon, uncertainty, seed, headway);
    if (app.got_subcommand(rate)) return cmd_rate_check(scenario_path, schedule_path);
  } catch (const lfgs::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
