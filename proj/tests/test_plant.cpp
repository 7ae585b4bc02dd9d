#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "lfgs/plant.hpp"

using lfgs::DeltaSignal;
using lfgs::LpvPlant;
using lfgs::Scenario;
using lfgs::UncertaintyRealization;

namespace {

nlohmann::ordered_json benchmark_json() {
  return nlohmann::ordered_json::parse(
      lfgs::scenario_to_json(lfgs::build_mass_spring_example()));
}

}  // namespace

TEST_CASE("state matrix polynomial evaluates exactly") {
  LpvPlant plant;
  plant.n = 2;
  plant.p = 1;
  plant.m = 1;
  Eigen::MatrixXd A0(2, 2), A1(2, 2), A2(2, 2);
  A0 << 1.0, 2.0, 3.0, 4.0;
  A1 << 0.5, -1.0, 0.0, 2.0;
  A2 << -0.25, 0.125, 1.0, -0.5;
  plant.gamma_lo = -2.0;
  plant.gamma_hi = 2.0;

  SUBCASE("affine case") {
    plant.A_coeffs = {A0, A1};
    const double rho = 0.75;
    CHECK(testutil::max_abs_diff(lfgs::eval_A(plant, rho), A0 + rho * A1) <= 1e-15);
    CHECK(testutil::bitwise_equal(lfgs::eval_A(plant, 0.0), A0));
  }
  SUBCASE("quadratic case") {
    plant.A_coeffs = {A0, A1, A2};
    const double rho = -1.5;
    CHECK(testutil::max_abs_diff(lfgs::eval_A(plant, rho),
                                 A0 + rho * A1 + rho * rho * A2) <= 1e-12);
  }
  SUBCASE("range guard") {
    plant.A_coeffs = {A0, A1};
    CHECK_THROWS_AS(lfgs::eval_A(plant, 2.5), lfgs::OutOfRange);
    CHECK_THROWS_AS(lfgs::eval_A(plant, -2.5), lfgs::OutOfRange);
    CHECK_NOTHROW(lfgs::eval_A(plant, 2.0));
  }
  SUBCASE("empty polynomial") {
    plant.A_coeffs.clear();
    CHECK_THROWS_AS(lfgs::eval_A(plant, 0.0), lfgs::ShapeMismatch);
  }
}

TEST_CASE("scheduling profiles evaluate their closed forms") {
  lfgs::RhoProfile prof;
  prof.kind = lfgs::RhoProfile::Kind::Constant;
  prof.value = 0.25;
  CHECK(prof.eval(3.7) == 0.25);
  CHECK(prof.sup_rate() == 0.0);

  prof.kind = lfgs::RhoProfile::Kind::Cosine;
  prof.amplitude = 0.5;
  prof.frequency = 2.0;
  prof.offset = 0.1;
  CHECK(prof.eval(0.0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(prof.eval(1.3) ==
        doctest::Approx(0.1 + 0.5 * std::cos(2.0 * 1.3)).epsilon(1e-15));
  CHECK(prof.sup_rate() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("mass-spring benchmark carries the documented data") {
  const Scenario scn = lfgs::build_mass_spring_example();
  CHECK(scn.plant.n == 2);
  CHECK(scn.plant.p == 1);
  CHECK(scn.plant.m == 1);
  REQUIRE(scn.plant.A_coeffs.size() == 2);

  Eigen::MatrixXd A0(2, 2), A1(2, 2);
  A0 << 0.0, 1.0, -2.4 / 3.0, 0.0;
  A1 << 0.0, 0.0, 1.4 / 3.0, 0.0;
  CHECK(testutil::max_abs_diff(scn.plant.A_coeffs[0], A0) <= 1e-15);
  CHECK(testutil::max_abs_diff(scn.plant.A_coeffs[1], A1) <= 1e-15);
  Eigen::MatrixXd B(2, 1);
  B << 0.0, 1.0 / 3.0;
  CHECK(testutil::bitwise_equal(scn.plant.B1, B));
  CHECK(testutil::bitwise_equal(scn.plant.B2, B));
  CHECK(scn.plant.gamma_lo == -1.0);
  CHECK(scn.plant.gamma_hi == 1.0);

  CHECK(scn.topology.num_followers == 20);
  CHECK(scn.topology.coupling_edges.size() == 42);  // 21-node ring, both ways
  CHECK(scn.topology.comm_edges.size() == 19);      // follower chain
  CHECK(scn.topology.pinned == std::vector<int>{1, 8, 12, 15});
  CHECK(scn.couplings.size() == 42);
  for (const auto& c : scn.couplings) {
    CHECK(c.C.rows() == 1);
    CHECK(c.C(0, 0) == 0.1);
    CHECK(c.C(0, 1) == 0.1);
  }

  CHECK(scn.Q(0, 0) == 10.0);
  CHECK(scn.Q(1, 1) == 100.0);
  CHECK(scn.R(0, 0) == 0.001);
  CHECK(scn.rho_profile.kind == lfgs::RhoProfile::Kind::Cosine);
  CHECK(scn.rho_profile.amplitude == 1.0);
  CHECK(scn.rho_profile.frequency == 1.0);
  REQUIRE(scn.init.size() == 21);
  CHECK(scn.init[0](0) == 0.5);
  CHECK(scn.init[20](1) == 0.4);
  CHECK(scn.sim.T == 12.0);
  CHECK(scn.sim.dt == 1e-3);
}

TEST_CASE("scenario JSON round trip is field exact") {
  const Scenario scn = lfgs::build_mass_spring_example();
  const Scenario back = lfgs::parse_scenario(lfgs::scenario_to_json(scn));
  CHECK(scn == back);

  const auto path = std::filesystem::temp_directory_path() / "lfgs_roundtrip.json";
  lfgs::save_scenario(scn, path.string());
  const Scenario loaded = lfgs::load_scenario(path.string());
  CHECK(scn == loaded);
  std::filesystem::remove(path);
}

TEST_CASE("scenario loader rejects malformed input") {
  CHECK_THROWS_AS(lfgs::parse_scenario("{ not json"), lfgs::ParseError);
  CHECK_THROWS_AS(lfgs::load_scenario("/nonexistent/path.json"), lfgs::ParseError);

  SUBCASE("unknown key at the root") {
    auto j = benchmark_json();
    j["extra"] = 1;
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("unknown key inside the plant") {
    auto j = benchmark_json();
    j["plant"]["spring"] = 2.4;
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("missing input weight") {
    auto j = benchmark_json();
    j["weights"].erase("R");
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("indefinite state weight") {
    auto j = benchmark_json();
    j["weights"]["Q"] = {{-1.0, 0.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("ragged matrix rows") {
    auto j = benchmark_json();
    j["plant"]["B1"] = {{0.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("non-finite entry") {
    auto j = benchmark_json();
    j["weights"]["R"] = {{"inf"}};
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("coupling entry without a topology edge") {
    auto j = benchmark_json();
    j["couplings"].push_back({{"from", 1}, {"to", 5}, {"C", {{0.1, 0.1}}}});
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("coupling edge without a C matrix") {
    auto j = benchmark_json();
    j["couplings"].erase(0);
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("missing initial state") {
    auto j = benchmark_json();
    j["init"].erase(3);
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("duplicate initial state") {
    auto j = benchmark_json();
    j["init"][1]["node"] = 0;
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("step that does not divide the horizon") {
    auto j = benchmark_json();
    j["sim"]["dt"] = 0.7;
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("scheduling profile leaving the parameter range") {
    auto j = benchmark_json();
    j["rho_profile"]["params"]["amplitude"] = 1.5;
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
  SUBCASE("unpinned topology") {
    auto j = benchmark_json();
    j["topology"]["pinned"] = nlohmann::ordered_json::array();
    CHECK_THROWS_AS(lfgs::parse_scenario(j.dump()), lfgs::ValidationError);
  }
}

TEST_CASE("coupling uncertainty signals respect the unit norm contract") {
  Eigen::MatrixXd M(1, 2);
  M << 0.6, 0.8;  // spectral norm exactly 1

  DeltaSignal zero;
  zero.kind = DeltaSignal::Kind::Zero;
  zero.M = M;
  CHECK(zero.eval(2.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.norm_bound() == 0.0);

  DeltaSignal constant;
  constant.kind = DeltaSignal::Kind::Constant;
  constant.M = M;
  CHECK(constant.norm_bound() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(testutil::bitwise_equal(constant.eval(5.0), M));

  DeltaSignal wave;
  wave.kind = DeltaSignal::Kind::Sinusoid;
  wave.M = M;
  wave.amplitude = 0.5;
  wave.frequency = 3.0;
  wave.phase = 0.25;
  const double t = 1.2;
  CHECK(testutil::max_abs_diff(wave.eval(t),
                               0.5 * std::sin(3.0 * t + 0.25) * M) <= 1e-15);
  CHECK(wave.norm_bound() == doctest::Approx(0.5).epsilon(1e-12));

  UncertaintyRealization ok;
  ok.delta[{0, 1}] = constant;
  CHECK_NOTHROW(ok.check());

  UncertaintyRealization bad;
  DeltaSignal loud = constant;
  loud.M = (1.0 + 1e-6) * M;
  bad.delta[{0, 1}] = loud;
  CHECK_THROWS_AS(bad.check(), lfgs::ValidationError);

  // Absent edges evaluate to a zero matrix of the requested shape.
  const Eigen::MatrixXd none = ok.eval(3, 4, 0.0, 2, 3);
  CHECK(none.rows() == 2);
  CHECK(none.cols() == 3);
  CHECK(none.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coupling force applies the uncertainty to the shaped difference") {
  lfgs::CouplingShape shape;
  shape.from = 1;
  shape.to = 2;
  shape.C = Eigen::MatrixXd(1, 2);
  shape.C << 0.1, 0.2;
  const Eigen::MatrixXd delta = Eigen::MatrixXd::Constant(1, 1, 0.5);
  const Eigen::VectorXd z = Eigen::Vector2d(2.0, -1.0);
  const Eigen::VectorXd phi = lfgs::coupling_force(shape, delta, z);
  REQUIRE(phi.size() == 1);
  CHECK(phi(0) == doctest::Approx(0.5 * (0.1 * 2.0 - 0.2)).epsilon(1e-15));

  CHECK_THROWS_AS(lfgs::coupling_force(shape, delta, Eigen::Vector3d::Zero()),
                  lfgs::ShapeMismatch);
  const Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(1, 2);
  CHECK_THROWS_AS(lfgs::coupling_force(shape, wide, z), lfgs::ShapeMismatch);
}

TEST_CASE("scenario equality distinguishes every field") {
  const Scenario a = testutil::two_follower_chain();
  CHECK(a == a);
  Scenario b = a;
  b.R(0, 0) = 0.002;
  CHECK_FALSE(a == b);
  Scenario c = a;
  c.init[1](0) += 1e-12;
  CHECK_FALSE(a == c);
  Scenario d = a;
  d.topology.pinned = {2};
  CHECK_FALSE(a == d);
}
