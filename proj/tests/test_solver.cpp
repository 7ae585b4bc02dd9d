#include <cmath>
#include <limits>

#include <doctest.h>

#include "helpers.hpp"
#include "lfgs/solver.hpp"

using lfgs::AffineBlock;
using lfgs::ConicProblem;
using lfgs::FeasibilityResult;
using lfgs::SolveStatus;
using lfgs::SolverOptions;

namespace {

ConicProblem scalar_problem() {
  // B(v) = v - 2 with v confined to [0, 10]; feasible for v <= 2 - eps.
  ConicProblem pb;
  pb.num_vars = 1;
  AffineBlock blk;
  blk.F0 = Eigen::MatrixXd::Constant(1, 1, -2.0);
  blk.coeffs.push_back({0, Eigen::MatrixXd::Identity(1, 1)});
  blk.label = "scalar";
  pb.blocks.push_back(blk);
  pb.lower = Eigen::VectorXd::Constant(1, 0.0);
  pb.upper = Eigen::VectorXd::Constant(1, 10.0);
  pb.init = Eigen::VectorXd::Constant(1, 5.0);
  return pb;
}

ConicProblem contradiction_problem() {
  // v - 1 <= -eps forces v < 1 while 1.5 - v <= -eps forces v > 1.5.
  ConicProblem pb;
  pb.num_vars = 1;
  AffineBlock low;
  low.F0 = Eigen::MatrixXd::Constant(1, 1, -1.0);
  low.coeffs.push_back({0, Eigen::MatrixXd::Identity(1, 1)});
  low.label = "upper cap";
  AffineBlock high;
  high.F0 = Eigen::MatrixXd::Constant(1, 1, 1.5);
  high.coeffs.push_back({0, -Eigen::MatrixXd::Identity(1, 1)});
  high.label = "lower cap";
  pb.blocks = {low, high};
  pb.lower = Eigen::VectorXd::Constant(1, 0.0);
  pb.upper = Eigen::VectorXd::Constant(1, 10.0);
  pb.init = Eigen::VectorXd::Constant(1, 0.2);
  return pb;
}

}  // namespace

TEST_CASE("symmetric eigensolver reproduces a closed form spectrum") {
  Eigen::MatrixXd S(2, 2);
  S << 2.0, -0.5, -0.5, 1.0;
  const lfgs::EigPair e = lfgs::sym_eig(S);
  REQUIRE(e.values.size() == 2);
  const double root = std::sqrt(2.0);
  CHECK(e.values(0) == doctest::Approx((3.0 - root) / 2.0).epsilon(1e-12));
  CHECK(e.values(1) == doctest::Approx((3.0 + root) / 2.0).epsilon(1e-12));
  CHECK(e.values(0) <= e.values(1));
  CHECK(testutil::max_abs_diff(S * e.vectors,
                               e.vectors * e.values.asDiagonal()) <= 1e-12);
  CHECK(testutil::max_abs_diff(e.vectors.transpose() * e.vectors,
                               Eigen::MatrixXd::Identity(2, 2)) <= 1e-12);
}

TEST_CASE("symmetric eigensolver rejects malformed input") {
  CHECK_THROWS_AS(lfgs::sym_eig(Eigen::MatrixXd::Zero(2, 3)), lfgs::ShapeMismatch);
  Eigen::MatrixXd skew(2, 2);
  skew << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(lfgs::sym_eig(skew), lfgs::NumericalBreakdown);
}

TEST_CASE("affine blocks evaluate linearly in the variables") {
  AffineBlock blk;
  blk.F0 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd F1(2, 2);
  F1 << 0.0, 1.0, 1.0, 0.0;
  blk.coeffs.push_back({1, F1});
  Eigen::VectorXd v(2);
  v << 7.0, 0.25;
  Eigen::MatrixXd expected(2, 2);
  expected << 1.0, 0.25, 0.25, 1.0;
  CHECK(testutil::max_abs_diff(blk.eval(v), expected) == 0.0);
}

TEST_CASE("feasibility search settles a one dimensional problem") {
  const ConicProblem pb = scalar_problem();
  const FeasibilityResult res = lfgs::solve_feasibility(pb);
  CHECK(res.status == SolveStatus::Feasible);
  CHECK(res.iterations >= 1);
  REQUIRE(res.v.size() == 1);
  CHECK(res.v(0) >= 0.0);
  CHECK(res.v(0) <= 2.0 - pb.eps_margin);
  CHECK(res.margin >= pb.eps_margin);

  const double recheck = lfgs::verify_margin(pb, res.v);
  CHECK(std::abs(recheck - res.margin) <= 1e-12 * (1.0 + std::abs(res.margin)));
}

TEST_CASE("feasibility search is deterministic") {
  const ConicProblem pb = scalar_problem();
  const FeasibilityResult a = lfgs::solve_feasibility(pb);
  const FeasibilityResult b = lfgs::solve_feasibility(pb);
  CHECK(a.status == b.status);
  CHECK(a.iterations == b.iterations);
  CHECK(a.v(0) == b.v(0));
  CHECK(a.margin == b.margin);
}

TEST_CASE("a constant positive block is rejected before iterating") {
  ConicProblem pb = scalar_problem();
  AffineBlock doomed;
  doomed.F0 = Eigen::MatrixXd::Identity(1, 1);
  doomed.label = "constant";
  pb.blocks.push_back(doomed);
  const FeasibilityResult res = lfgs::solve_feasibility(pb);
  CHECK(res.status == SolveStatus::Infeasible);
  CHECK(res.iterations == 0);
  CHECK(res.margin == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("contradictory caps are reported infeasible by the barrier stage") {
  const ConicProblem pb = contradiction_problem();
  const FeasibilityResult res = lfgs::solve_feasibility(pb);
  CHECK(res.status == SolveStatus::Infeasible);
  // The least-violated point sits midway between the caps, margin about -0.25.
  CHECK(res.margin < 0.0);

  SolverOptions no_fallback;
  no_fallback.use_barrier_fallback = false;
  const FeasibilityResult stalled = lfgs::solve_feasibility(pb, no_fallback);
  CHECK(stalled.status == SolveStatus::MaxIterations);
  CHECK(stalled.margin < 0.0);
}

TEST_CASE("warm starts are honored and validated") {
  const ConicProblem pb = scalar_problem();
  SolverOptions opt;
  opt.warm_start = Eigen::VectorXd::Constant(1, 1.0);  // already feasible
  const FeasibilityResult res = lfgs::solve_feasibility(pb, opt);
  CHECK(res.status == SolveStatus::Feasible);

  SolverOptions bad;
  bad.warm_start = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(lfgs::solve_feasibility(pb, bad), lfgs::ShapeMismatch);
}

TEST_CASE("problem validation rejects structural mistakes") {
  SUBCASE("no blocks") {
    ConicProblem pb = scalar_problem();
    pb.blocks.clear();
    CHECK_THROWS_AS(lfgs::solve_feasibility(pb), lfgs::ShapeMismatch);
  }
  SUBCASE("no variables") {
    ConicProblem pb = scalar_problem();
    pb.num_vars = 0;
    CHECK_THROWS_AS(lfgs::solve_feasibility(pb), lfgs::ShapeMismatch);
  }
  SUBCASE("bound length mismatch") {
    ConicProblem pb = scalar_problem();
    pb.lower = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(lfgs::solve_feasibility(pb), lfgs::ShapeMismatch);
  }
  SUBCASE("nonpositive margin request") {
    ConicProblem pb = scalar_problem();
    pb.eps_margin = 0.0;
    CHECK_THROWS_AS(lfgs::solve_feasibility(pb), lfgs::ValidationError);
  }
  SUBCASE("variable index out of range") {
    ConicProblem pb = scalar_problem();
    pb.blocks[0].coeffs[0].first = 3;
    CHECK_THROWS_AS(lfgs::solve_feasibility(pb), lfgs::ShapeMismatch);
  }
  SUBCASE("coefficient shape mismatch") {
    ConicProblem pb = scalar_problem();
    pb.blocks[0].coeffs[0].second = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(lfgs::solve_feasibility(pb), lfgs::ShapeMismatch);
  }
}

TEST_CASE("candidate rechecks enforce the box") {
  const ConicProblem pb = scalar_problem();
  CHECK_THROWS_AS(lfgs::verify_margin(pb, Eigen::VectorXd::Constant(1, -1.0)),
                  lfgs::ValidationError);
  CHECK_THROWS_AS(lfgs::verify_margin(pb, Eigen::VectorXd::Zero(2)),
                  lfgs::ShapeMismatch);
  // A hair outside the box is tolerated up to 1e-9.
  CHECK_NOTHROW(lfgs::verify_margin(pb, Eigen::VectorXd::Constant(1, -5e-10)));
  CHECK(lfgs::verify_margin(pb, Eigen::VectorXd::Constant(1, 1.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}
