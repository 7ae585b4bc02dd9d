#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "lfgs/sim.hpp"

using lfgs::GainFn;
using lfgs::GainSchedule;
using lfgs::Scenario;
using lfgs::Trajectory;
using lfgs::UncertaintyRealization;

namespace {

const UncertaintyRealization kNoUncertainty;

GainFn constant_gain(double k) {
  return [k](int, double) { return Eigen::MatrixXd::Constant(1, 1, k); };
}

GainFn zero_gain(int p, int n) {
  return [p, n](int, double) { return Eigen::MatrixXd::Zero(p, n); };
}

// Hand schedule for the scalar single-follower plant whose gain is exactly -1.
GainSchedule unit_scalar_schedule() {
  GainSchedule s;
  s.mode = lfgs::ScheduleMode::Interpolated;
  s.n = 1;
  s.p = 1;
  s.gamma_lo = -1.0;
  s.gamma_hi = 1.0;
  s.constants.theta = Eigen::VectorXd::Ones(1);
  s.constants.sigma = 1.0;
  s.constants.lambda_hat = 1.0;
  s.constants.Q_bar = Eigen::MatrixXd::Identity(1, 1);
  s.R = Eigen::MatrixXd::Identity(1, 1);
  s.B1 = Eigen::MatrixXd::Identity(1, 1);
  s.grid.points = {0.0};
  s.grid.betas = {0.1};
  s.grid.coverage = {{-1.0, 1.0}};
  lfgs::LmiSolution sol;
  sol.rho = 0.0;
  sol.beta = 0.1;
  sol.margin = 0.01;
  sol.Y = Eigen::MatrixXd::Identity(1, 1);
  s.solutions = {sol};
  return s;
}

// Constant-error trajectory on a hand grid: leader fixed, follower at zero.
Trajectory constant_error_trajectory(int K) {
  Trajectory traj;
  traj.n = 2;
  traj.p = 1;
  traj.num_followers = 1;
  traj.t.resize(K + 1);
  traj.rho = Eigen::VectorXd::Zero(K + 1);
  traj.states = Eigen::MatrixXd::Zero(4, K + 1);
  traj.controls = Eigen::MatrixXd::Zero(1, K + 1);
  for (int k = 0; k <= K; ++k) {
    traj.t(k) = static_cast<double>(k) / K;
    traj.states(0, k) = 1.0;  // leader position; velocity and follower zero
  }
  return traj;
}

}  // namespace

TEST_CASE("open loop integration matches the exponential solution") {
  const Scenario scn = testutil::scalar_pair(-1.0);
  const Trajectory traj = lfgs::simulate(scn, zero_gain(1, 1), kNoUncertainty);

  REQUIRE(traj.t.size() == 1001);
  CHECK(traj.t(0) == 0.0);
  CHECK(traj.t(1000) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(traj.states(0, 0) == 1.0);
  CHECK(traj.states(0, 1000) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
  // the follower starts at rest and receives no input
  CHECK(traj.states.row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(traj.controls.cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd e = lfgs::tracking_errors(traj);
  REQUIRE(e.rows() == 1);
  CHECK(testutil::bitwise_equal(e.row(0), traj.states.row(0)));
}

TEST_CASE("pinned feedback contracts the tracking error at the closed rate") {
  // u = -(K z) with z = x0 - x1, so K = -1 yields e' = (a + K) e = -2 e.
  const Scenario scn = testutil::scalar_pair(-1.0);
  const Trajectory traj = lfgs::simulate(scn, constant_gain(-1.0), kNoUncertainty);

  const Eigen::MatrixXd e = lfgs::tracking_errors(traj);
  CHECK(e(0, 0) == 1.0);
  CHECK(e(0, 1000) == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(traj.controls(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  // halfway sample for good measure
  CHECK(e(0, 500) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("cost quadrature is exact on polynomial integrands") {
  SUBCASE("constant error integrates to the plain product") {
    const Trajectory traj = constant_error_trajectory(10);
    const Eigen::MatrixXd Q = Eigen::Vector2d(10.0, 100.0).asDiagonal();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(1, 1);
    CHECK(lfgs::evaluate_cost(traj, Q, R) == doctest::Approx(10.0).epsilon(1e-14));
    const Eigen::VectorXd running = lfgs::running_cost(traj, Q, R);
    REQUIRE(running.size() == 11);
    CHECK(running(0) == 0.0);
    CHECK(running(10) == doctest::Approx(10.0).epsilon(1e-14));
  }
  SUBCASE("quadratic integrand, even sample count") {
    Trajectory traj = constant_error_trajectory(10);
    for (int k = 0; k <= 10; ++k) traj.states(0, k) = traj.t(k);
    const Eigen::MatrixXd Q = Eigen::Vector2d(10.0, 100.0).asDiagonal();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(1, 1);
    // integrand 10 t^2 lies inside Simpson's exactness degree
    CHECK(lfgs::evaluate_cost(traj, Q, R) ==
          doctest::Approx(10.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("odd sample count falls back to a trapezoid on the last interval") {
    Trajectory traj = constant_error_trajectory(5);
    for (int k = 0; k <= 5; ++k) traj.states(0, k) = traj.t(k);
    const Eigen::MatrixXd Q = Eigen::Vector2d(10.0, 100.0).asDiagonal();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(1, 1);
    const double simpson_part = 10.0 * 0.512 / 3.0;        // exact on [0, 0.8]
    const double trapezoid_part = 0.1 * (6.4 + 10.0);      // [0.8, 1.0]
    CHECK(lfgs::evaluate_cost(traj, Q, R) ==
          doctest::Approx(simpson_part + trapezoid_part).epsilon(1e-12));
  }
  SUBCASE("running cost ends at the total on an even grid") {
    const Scenario scn = testutil::scalar_pair(-1.0);
    const Trajectory traj =
        lfgs::simulate(scn, constant_gain(-1.0), kNoUncertainty);
    const Eigen::VectorXd running = lfgs::running_cost(traj, scn.Q, scn.R);
    const double total = lfgs::evaluate_cost(traj, scn.Q, scn.R);
    CHECK(running(running.size() - 1) ==
          doctest::Approx(total).epsilon(1e-12));
    CHECK(testutil::bitwise_equal(running, traj.cost_running));
  }
  SUBCASE("weight shape guards") {
    const Trajectory traj = constant_error_trajectory(10);
    CHECK_THROWS_AS(lfgs::evaluate_cost(traj, Eigen::MatrixXd::Identity(3, 3),
                                        Eigen::MatrixXd::Identity(1, 1)),
                    lfgs::ShapeMismatch);
    CHECK_THROWS_AS(lfgs::evaluate_cost(traj, Eigen::MatrixXd::Identity(2, 2),
                                        Eigen::MatrixXd::Identity(2, 2)),
                    lfgs::ShapeMismatch);
  }
}

TEST_CASE("integrator error shrinks at fourth order") {
  Scenario scn = testutil::scalar_pair(-1.0);
  auto end_state = [&](double dt) {
    scn.sim.dt = dt;
    const Trajectory traj =
        lfgs::simulate(scn, constant_gain(-1.0), kNoUncertainty);
    return Eigen::Vector2d(traj.states(0, traj.t.size() - 1),
                           traj.states(1, traj.t.size() - 1));
  };
  const Eigen::Vector2d coarse = end_state(0.1);
  const Eigen::Vector2d mid = end_state(0.05);
  const Eigen::Vector2d fine = end_state(0.025);
  const double e1 = (coarse - mid).norm();
  const double e2 = (mid - fine).norm();
  REQUIRE(e2 > 0.0);
  const double ratio = e1 / e2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("stored samples reproduce their own derivatives") {
  const Scenario scn = testutil::scalar_pair(-1.0);
  const Trajectory traj = lfgs::simulate(scn, zero_gain(1, 1), kNoUncertainty);
  const Eigen::MatrixXd dX =
      lfgs::state_derivatives(scn, zero_gain(1, 1), kNoUncertainty, traj);
  // x' = -x for both nodes under zero gain
  CHECK(testutil::max_abs_diff(dX, -traj.states) == 0.0);
}

TEST_CASE("schedule-driven and functional gains integrate identically") {
  const Scenario scn = testutil::scalar_pair(-1.0);
  const GainSchedule sched = unit_scalar_schedule();
  const Trajectory via_schedule = lfgs::simulate(scn, sched, kNoUncertainty);
  const Trajectory via_fn = lfgs::simulate(scn, constant_gain(-1.0), kNoUncertainty);
  CHECK(testutil::bitwise_equal(via_schedule.states, via_fn.states));
  CHECK(testutil::bitwise_equal(via_schedule.controls, via_fn.controls));

  const Eigen::MatrixXd d1 =
      lfgs::state_derivatives(scn, sched, kNoUncertainty, via_schedule);
  const Eigen::MatrixXd d2 =
      lfgs::state_derivatives(scn, constant_gain(-1.0), kNoUncertainty, via_fn);
  CHECK(testutil::bitwise_equal(d1, d2));
}

TEST_CASE("a network of zero followers integrates the leader alone") {
  Scenario scn = testutil::scalar_pair(-1.0);
  scn.topology.num_followers = 0;
  scn.topology.pinned.clear();
  scn.init = {Eigen::VectorXd::Constant(1, 1.0)};
  const Trajectory traj = lfgs::simulate(scn, zero_gain(1, 1), kNoUncertainty);
  CHECK(traj.states.rows() == 1);
  CHECK(traj.controls.rows() == 0);
  CHECK(traj.states(0, 1000) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
  CHECK(lfgs::evaluate_cost(traj, scn.Q, scn.R) == 0.0);
}

TEST_CASE("performance report checks the measured cost against the bound") {
  const Scenario scn = testutil::scalar_pair(-1.0);
  const GainSchedule sched = unit_scalar_schedule();
  const Trajectory traj = lfgs::simulate(scn, sched, kNoUncertainty);
  const lfgs::CostReport rep = lfgs::performance_report(scn, sched, traj);

  // one certificate: no segments to traverse, so the fixed bound applies too
  CHECK(rep.rate.q == 0.0);
  CHECK(rep.rate.varrho == 0.0);
  CHECK(rep.rho_dot_sup == 0.0);
  CHECK(rep.horizon == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(rep.bound_fixed.has_value());
  CHECK(*rep.bound_fixed == doctest::Approx(rep.bound_scheduled).epsilon(1e-12));
  // e0 = 1, Y = I, sigma = lambda_hat = 1: the bound collapses to 1
  CHECK(rep.bound_scheduled == doctest::Approx(1.0).epsilon(1e-12));
  // measured cost of e' = -2e with u = e: J = (1 - exp(-4)) / 2
  CHECK(rep.J == doctest::Approx(0.5 * (1.0 - std::exp(-4.0))).epsilon(1e-6));
  CHECK(rep.J <= rep.bound_scheduled);
  CHECK(rep.tail_estimate >= 0.0);
}

TEST_CASE("the report refuses schedules outrun by the parameter") {
  const Scenario scn = testutil::two_follower_chain();  // rho moves at rate 1
  GainSchedule s;
  s.mode = lfgs::ScheduleMode::Interpolated;
  s.n = 2;
  s.p = 1;
  s.gamma_lo = -1.0;
  s.gamma_hi = 1.0;
  s.constants.theta = Eigen::Vector2d(1.0, 2.0);
  s.constants.sigma = 1.0;
  s.constants.lambda_hat = 1.0;
  s.constants.Q_bar = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  s.R = Eigen::MatrixXd::Identity(1, 1);
  s.B1 = Eigen::MatrixXd::Zero(2, 1);
  s.B1(1, 0) = 1.0;
  s.grid.points = {-0.5, 0.5};
  s.grid.betas = {0.1, 0.1};
  s.grid.coverage = {{-1.0, 0.6}, {-0.6, 1.0}};
  s.grid.corners = {{-0.1, 0.1}};  // Y leaps 1 -> 100 across a narrow window
  lfgs::LmiSolution a, b;
  a.rho = -0.5;
  a.beta = 0.1;
  a.Y = Eigen::MatrixXd::Identity(2, 2);
  b.rho = 0.5;
  b.beta = 0.1;
  b.Y = 100.0 * Eigen::MatrixXd::Identity(2, 2);
  s.solutions = {a, b};

  const Trajectory traj = lfgs::simulate(scn, zero_gain(1, 2), kNoUncertainty);
  CHECK_THROWS_AS(lfgs::performance_report(scn, s, traj), lfgs::RateViolated);
}

TEST_CASE("named uncertainty families have the documented shapes") {
  const Scenario scn = testutil::two_follower_chain();

  const auto zero = lfgs::standard_realizations(scn, "zero", 0);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].name == "zero");
  CHECK(zero[0].delta.empty());

  const auto nominal = lfgs::standard_realizations(scn, "nominal", 0);
  REQUIRE(nominal.size() == 1);
  CHECK(nominal[0].delta.size() == 4);  // one signal per coupling edge
  for (const auto& [edge, sig] : nominal[0].delta) {
    CHECK(sig.kind == lfgs::DeltaSignal::Kind::Constant);
    CHECK(testutil::bitwise_equal(sig.M, Eigen::MatrixXd::Identity(1, 1)));
  }

  const auto sin5 = lfgs::standard_realizations(scn, "sin5", 0);
  REQUIRE(sin5.size() == 1);
  for (const auto& [edge, sig] : sin5[0].delta) {
    CHECK(sig.kind == lfgs::DeltaSignal::Kind::Sinusoid);
    CHECK(sig.amplitude == 1.0);
    CHECK(sig.frequency == 5.0);
    CHECK(sig.phase == 0.0);
  }

  const auto rand3 = lfgs::standard_realizations(scn, "random:3", 7);
  REQUIRE(rand3.size() == 3);
  CHECK(rand3[0].name == "random-1");
  CHECK(rand3[2].name == "random-3");
  for (const auto& r : rand3) {
    CHECK(r.delta.size() == 4);
    CHECK_NOTHROW(r.check());
    for (const auto& [edge, sig] : r.delta) {
      CHECK(sig.amplitude >= 0.0);
      CHECK(sig.amplitude <= 1.0);
      CHECK(sig.frequency >= 0.5);
      CHECK(sig.frequency <= 5.0);
    }
  }

  // seeding is reproducible and actually matters
  const auto again = lfgs::standard_realizations(scn, "random:3", 7);
  const auto other = lfgs::standard_realizations(scn, "random:3", 8);
  const auto& sig_a = rand3[1].delta.begin()->second;
  const auto& sig_b = again[1].delta.begin()->second;
  const auto& sig_c = other[1].delta.begin()->second;
  CHECK(sig_a.amplitude == sig_b.amplitude);
  CHECK(sig_a.frequency == sig_b.frequency);
  CHECK(sig_a.phase == sig_b.phase);
  CHECK(sig_a.amplitude != sig_c.amplitude);

  CHECK_THROWS_AS(lfgs::standard_realizations(scn, "random:x", 0),
                  lfgs::ValidationError);
  CHECK_THROWS_AS(lfgs::standard_realizations(scn, "random:0", 0),
                  lfgs::ValidationError);
  CHECK_THROWS_AS(lfgs::standard_realizations(scn, "bogus", 0),
                  lfgs::ValidationError);
}

TEST_CASE("uncertainty sweeps report one cost per realization") {
  const Scenario scn = testutil::scalar_pair(-1.0);
  const GainSchedule sched = unit_scalar_schedule();
  std::vector<UncertaintyRealization> realizations =
      lfgs::standard_realizations(scn, "zero", 0);
  UncertaintyRealization named;
  named.name = "still nothing";
  realizations.push_back(named);

  const auto entries = lfgs::uncertainty_sweep(scn, sched, realizations);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].name == "zero");
  CHECK(entries[1].name == "still nothing");
  const double direct =
      lfgs::evaluate_cost(lfgs::simulate(scn, sched, realizations[0]), scn.Q, scn.R);
  CHECK(entries[0].J == direct);
  CHECK(entries[1].J == direct);  // no coupling edges, so nothing differs
}

TEST_CASE("trajectory CSV has one labeled column per signal") {
  const Scenario scn = testutil::scalar_pair(-1.0);
  const Trajectory traj = lfgs::simulate(scn, constant_gain(-1.0), kNoUncertainty);
  const auto path = std::filesystem::temp_directory_path() / "lfgs_traj_test.csv";
  lfgs::write_trajectory_csv(traj, path.string());

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,rho,cost,x0_1,x1_1,u1_1");
  int lines = 0;
  std::string line, first;
  while (std::getline(in, line)) {
    if (lines == 0) first = line;
    ++lines;
  }
  CHECK(lines == 1001);
  CHECK(first == "0,0,0,1,0,1");
  std::filesystem::remove(path);
}

TEST_CASE("cost reports serialize the bound fields faithfully") {
  const Scenario scn = testutil::scalar_pair(-1.0);
  const GainSchedule sched = unit_scalar_schedule();
  const Trajectory traj = lfgs::simulate(scn, sched, kNoUncertainty);
  const lfgs::CostReport rep = lfgs::performance_report(scn, sched, traj);

  const auto j = nlohmann::ordered_json::parse(lfgs::cost_report_to_json(rep));
  CHECK(j.contains("J"));
  CHECK(j.contains("bound_scheduled"));
  CHECK(j.contains("bound_fixed"));  // single design point
  CHECK(j.contains("eta"));
  CHECK(j.contains("varrho"));
  CHECK(j.contains("q"));
  CHECK(j.contains("rho_dot_sup"));
  CHECK(j.contains("horizon"));
  CHECK(j.contains("tail_estimate"));
  CHECK(j["J"].get<double>() == rep.J);
  CHECK(j["q"].get<double>() == 0.0);

  // two design points: the fixed-point bound no longer applies
  lfgs::CostReport multi = rep;
  multi.bound_fixed.reset();
  const auto j2 = nlohmann::ordered_json::parse(lfgs::cost_report_to_json(multi));
  CHECK_FALSE(j2.contains("bound_fixed"));
}

TEST_CASE("divergent loops are reported, not silently integrated") {
  Scenario scn = testutil::scalar_pair(10.0);  // x' = 10 x blows past 1e12
  scn.sim.T = 4.0;
  CHECK_THROWS_AS(lfgs::simulate(scn, zero_gain(1, 1), kNoUncertainty),
                  lfgs::NumericalBreakdown);
}

TEST_CASE("simulation inputs are validated before integrating") {
  SUBCASE("missing initial state") {
    Scenario scn = testutil::scalar_pair(-1.0);
    scn.init.pop_back();
    CHECK_THROWS_AS(lfgs::simulate(scn, zero_gain(1, 1), kNoUncertainty),
                    lfgs::ValidationError);
  }
  SUBCASE("initial state dimension mismatch") {
    Scenario scn = testutil::scalar_pair(-1.0);
    scn.init[1] = Eigen::Vector2d::Zero();
    CHECK_THROWS_AS(lfgs::simulate(scn, zero_gain(1, 1), kNoUncertainty),
                    lfgs::ValidationError);
  }
  SUBCASE("uncertainty above unit norm") {
    const Scenario scn = testutil::two_follower_chain();
    UncertaintyRealization loud;
    lfgs::DeltaSignal sig;
    sig.kind = lfgs::DeltaSignal::Kind::Constant;
    sig.M = Eigen::MatrixXd::Constant(1, 1, 1.5);
    loud.delta[{0, 1}] = sig;
    CHECK_THROWS_AS(lfgs::simulate(scn, zero_gain(1, 2), loud),
                    lfgs::ValidationError);
  }
  SUBCASE("schedule built for a different network") {
    const Scenario scn = testutil::two_follower_chain();
    GainSchedule sched = unit_scalar_schedule();  // one follower, n = 1
    CHECK_THROWS_AS(lfgs::simulate(scn, sched, kNoUncertainty),
                    lfgs::ValidationError);
    sched.constants.theta = Eigen::Vector2d(1.0, 2.0);
    CHECK_THROWS_AS(lfgs::simulate(scn, sched, kNoUncertainty),
                    lfgs::ShapeMismatch);
  }
  SUBCASE("gain with the wrong shape") {
    const Scenario scn = testutil::scalar_pair(-1.0);
    CHECK_THROWS_AS(lfgs::simulate(scn, zero_gain(2, 2), kNoUncertainty),
                    lfgs::ShapeMismatch);
  }
}
