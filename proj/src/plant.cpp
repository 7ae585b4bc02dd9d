#include "lfgs/plant.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"

namespace lfgs {

using json = nlohmann::ordered_json;
using namespace jsonio;

Eigen::MatrixXd eval_A(const LpvPlant& plant, double rho) {
  const double tol = 1e-12 * (1.0 + std::abs(plant.gamma_lo) + std::abs(plant.gamma_hi));
  if (rho < plant.gamma_lo - tol || rho > plant.gamma_hi + tol)
    throw OutOfRange("rho=" + std::to_string(rho) + " outside the scheduling range");
  if (plant.A_coeffs.empty())
    throw ShapeMismatch("plant has no A coefficients");
  Eigen::MatrixXd A = plant.A_coeffs.back();
  for (int r = static_cast<int>(plant.A_coeffs.size()) - 2; r >= 0; --r)
    A = rho * A + plant.A_coeffs[r];
  return A;
}

double RhoProfile::eval(double t) const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::Cosine: return offset + amplitude * std::cos(frequency * t);
  }
  return value;
}

double RhoProfile::sup_rate() const {
  switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::Cosine: return std::abs(amplitude * frequency);
  }
  return 0.0;
}

const Eigen::MatrixXd* Scenario::coupling(int from, int to) const {
  for (const auto& c : couplings)
    if (c.from == from && c.to == to) return &c.C;
  return nullptr;
}

namespace {

bool mat_eq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

}  // namespace

bool operator==(const Scenario& a, const Scenario& b) {
  if (a.plant.n != b.plant.n || a.plant.p != b.plant.p || a.plant.m != b.plant.m)
    return false;
  if (a.plant.gamma_lo != b.plant.gamma_lo || a.plant.gamma_hi != b.plant.gamma_hi)
    return false;
  if (a.plant.A_coeffs.size() != b.plant.A_coeffs.size()) return false;
  for (size_t r = 0; r < a.plant.A_coeffs.size(); ++r)
    if (!mat_eq(a.plant.A_coeffs[r], b.plant.A_coeffs[r])) return false;
  if (!mat_eq(a.plant.B1, b.plant.B1) || !mat_eq(a.plant.B2, b.plant.B2))
    return false;
  if (a.topology.num_followers != b.topology.num_followers ||
      a.topology.coupling_edges != b.topology.coupling_edges ||
      a.topology.comm_edges != b.topology.comm_edges ||
      a.topology.pinned != b.topology.pinned)
    return false;
  if (a.couplings.size() != b.couplings.size()) return false;
  for (size_t k = 0; k < a.couplings.size(); ++k) {
    if (a.couplings[k].from != b.couplings[k].from ||
        a.couplings[k].to != b.couplings[k].to ||
        !mat_eq(a.couplings[k].C, b.couplings[k].C))
      return false;
  }
  if (!mat_eq(a.Q, b.Q) || !mat_eq(a.R, b.R)) return false;
  if (a.rho_profile.kind != b.rho_profile.kind ||
      a.rho_profile.value != b.rho_profile.value ||
      a.rho_profile.amplitude != b.rho_profile.amplitude ||
      a.rho_profile.frequency != b.rho_profile.frequency ||
      a.rho_profile.offset != b.rho_profile.offset)
    return false;
  if (a.init.size() != b.init.size()) return false;
  for (size_t k = 0; k < a.init.size(); ++k)
    if (!mat_eq(a.init[k], b.init[k])) return false;
  return a.sim.T == b.sim.T && a.sim.dt == b.sim.dt;
}

// ---------------------------------------------------------------------------
// strict JSON schema
// ---------------------------------------------------------------------------

namespace {

void check_spd(const Eigen::MatrixXd& M, const std::string& where) {
  if (M.rows() != M.cols()) fail(where, "not square");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + M.cwiseAbs().maxCoeff()))
    fail(where, "not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  if (es.eigenvalues().minCoeff() <= 0.0) fail(where, "not positive definite");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario JSON: ") + e.what());
  }
  reject_unknown(root, "scenario",
                 {"plant", "topology", "couplings", "weights", "rho_profile",
                  "init", "sim"});
  Scenario scn;

  const json& jp = member(root, "scenario", "plant");
  reject_unknown(jp, "plant", {"n", "p", "m", "A_coeffs", "B1", "B2", "gamma"});
  scn.plant.n = as_int(member(jp, "plant", "n"), "plant.n");
  scn.plant.p = as_int(member(jp, "plant", "p"), "plant.p");
  scn.plant.m = as_int(member(jp, "plant", "m"), "plant.m");
  if (scn.plant.n < 1 || scn.plant.p < 1 || scn.plant.m < 1)
    fail("plant", "dimensions must be positive");
  const json& jA = member(jp, "plant", "A_coeffs");
  if (!jA.is_array() || jA.empty()) fail("plant.A_coeffs", "expected a nonempty array");
  for (size_t r = 0; r < jA.size(); ++r) {
    Eigen::MatrixXd Ar = as_matrix(jA[r], "plant.A_coeffs[" + std::to_string(r) + "]");
    if (Ar.rows() != scn.plant.n || Ar.cols() != scn.plant.n)
      fail("plant.A_coeffs[" + std::to_string(r) + "]", "must be n x n");
    scn.plant.A_coeffs.push_back(Ar);
  }
  scn.plant.B1 = as_matrix(member(jp, "plant", "B1"), "plant.B1");
  scn.plant.B2 = as_matrix(member(jp, "plant", "B2"), "plant.B2");
  if (scn.plant.B1.rows() != scn.plant.n || scn.plant.B1.cols() != scn.plant.p)
    fail("plant.B1", "must be n x p");
  if (scn.plant.B2.rows() != scn.plant.n || scn.plant.B2.cols() != scn.plant.m)
    fail("plant.B2", "must be n x m");
  Eigen::VectorXd g = as_vector(member(jp, "plant", "gamma"), "plant.gamma");
  if (g.size() != 2 || !(g(0) < g(1)))
    fail("plant.gamma", "expected [lo, hi] with lo < hi");
  scn.plant.gamma_lo = g(0);
  scn.plant.gamma_hi = g(1);

  const json& jt = member(root, "scenario", "topology");
  reject_unknown(jt, "topology", {"N", "coupling_edges", "comm_edges", "pinned"});
  scn.topology.num_followers = as_int(member(jt, "topology", "N"), "topology.N");
  auto read_edges = [&](const json& arr, const std::string& where) {
    std::set<std::pair<int, int>> edges;
    if (!arr.is_array()) fail(where, "expected an array of [from, to] pairs");
    for (const auto& e : arr) {
      if (!e.is_array() || e.size() != 2) fail(where, "expected [from, to] pairs");
      auto pr = std::make_pair(as_int(e[0], where), as_int(e[1], where));
      if (!edges.insert(pr).second)
        fail(where, "duplicate edge (" + std::to_string(pr.first) + "," +
                        std::to_string(pr.second) + ")");
    }
    return edges;
  };
  scn.topology.coupling_edges =
      read_edges(member(jt, "topology", "coupling_edges"), "topology.coupling_edges");
  scn.topology.comm_edges =
      read_edges(member(jt, "topology", "comm_edges"), "topology.comm_edges");
  const json& jpin = member(jt, "topology", "pinned");
  if (!jpin.is_array()) fail("topology.pinned", "expected an array of follower ids");
  for (const auto& v : jpin) scn.topology.pinned.push_back(as_int(v, "topology.pinned"));

  ValidationReport rep = validate_topology(scn.topology);
  if (!rep.pass) {
    std::string msg = "topology rejected:";
    for (const auto& s : rep.issues) msg += " " + s + ";";
    throw ValidationError(msg);
  }

  const json& jc = member(root, "scenario", "couplings");
  if (!jc.is_array()) fail("couplings", "expected an array");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : jc) {
    reject_unknown(e, "couplings[]", {"from", "to", "C"});
    CouplingShape cs;
    cs.from = as_int(member(e, "couplings[]", "from"), "couplings[].from");
    cs.to = as_int(member(e, "couplings[]", "to"), "couplings[].to");
    cs.C = as_matrix(member(e, "couplings[]", "C"), "couplings[].C");
    if (cs.C.cols() != scn.plant.n) fail("couplings[].C", "must have n columns");
    auto key = std::make_pair(cs.from, cs.to);
    if (!scn.topology.coupling_edges.count(key))
      fail("couplings[]", "entry (" + std::to_string(cs.from) + "," +
                              std::to_string(cs.to) + ") is not a coupling edge");
    if (!seen.insert(key).second)
      fail("couplings[]", "duplicate entry for edge (" + std::to_string(cs.from) +
                              "," + std::to_string(cs.to) + ")");
    scn.couplings.push_back(cs);
  }
  for (const auto& e : scn.topology.coupling_edges)
    if (!seen.count(e))
      fail("couplings", "no C matrix for edge (" + std::to_string(e.first) + "," +
                             std::to_string(e.second) + ")");

  const json& jw = member(root, "scenario", "weights");
  reject_unknown(jw, "weights", {"Q", "R"});
  scn.Q = as_matrix(member(jw, "weights", "Q"), "weights.Q");
  scn.R = as_matrix(member(jw, "weights", "R"), "weights.R");
  if (scn.Q.rows() != scn.plant.n) fail("weights.Q", "must be n x n");
  if (scn.R.rows() != scn.plant.p) fail("weights.R", "must be p x p");
  check_spd(scn.Q, "weights.Q");
  check_spd(scn.R, "weights.R");

  const json& jr = member(root, "scenario", "rho_profile");
  reject_unknown(jr, "rho_profile", {"kind", "params"});
  const json& jk = member(jr, "rho_profile", "kind");
  if (!jk.is_string()) fail("rho_profile.kind", "expected a string");
  const std::string kind = jk.get<std::string>();
  const json& jpr = member(jr, "rho_profile", "params");
  if (kind == "constant") {
    scn.rho_profile.kind = RhoProfile::Kind::Constant;
    reject_unknown(jpr, "rho_profile.params", {"value"});
    scn.rho_profile.value =
        as_finite(member(jpr, "rho_profile.params", "value"), "rho_profile.params.value");
    if (scn.rho_profile.value < scn.plant.gamma_lo ||
        scn.rho_profile.value > scn.plant.gamma_hi)
      fail("rho_profile", "constant value outside the scheduling range");
  } else if (kind == "cosine") {
    scn.rho_profile.kind = RhoProfile::Kind::Cosine;
    reject_unknown(jpr, "rho_profile.params", {"amplitude", "frequency", "offset"});
    scn.rho_profile.amplitude = as_finite(member(jpr, "rho_profile.params", "amplitude"),
                                          "rho_profile.params.amplitude");
    scn.rho_profile.frequency = as_finite(member(jpr, "rho_profile.params", "frequency"),
                                          "rho_profile.params.frequency");
    scn.rho_profile.offset = as_finite(member(jpr, "rho_profile.params", "offset"),
                                       "rho_profile.params.offset");
    const double lo = scn.rho_profile.offset - std::abs(scn.rho_profile.amplitude);
    const double hi = scn.rho_profile.offset + std::abs(scn.rho_profile.amplitude);
    if (lo < scn.plant.gamma_lo - 1e-12 || hi > scn.plant.gamma_hi + 1e-12)
      fail("rho_profile", "cosine range leaves the scheduling range");
  } else {
    fail("rho_profile.kind", "unknown kind '" + kind + "'");
  }

  const json& ji = member(root, "scenario", "init");
  if (!ji.is_array()) fail("init", "expected an array");
  const int N = scn.topology.num_followers;
  scn.init.assign(N + 1, Eigen::VectorXd());
  std::vector<char> have(N + 1, 0);
  for (const auto& e : ji) {
    reject_unknown(e, "init[]", {"node", "x"});
    int node = as_int(member(e, "init[]", "node"), "init[].node");
    if (node < 0 || node > N) fail("init[]", "node id out of range");
    if (have[node]) fail("init[]", "duplicate node " + std::to_string(node));
    have[node] = 1;
    scn.init[node] = as_vector(member(e, "init[]", "x"), "init[].x");
    if (scn.init[node].size() != scn.plant.n) fail("init[].x", "must have n entries");
  }
  for (int i = 0; i <= N; ++i)
    if (!have[i]) fail("init", "missing initial state for node " + std::to_string(i));

  const json& js = member(root, "scenario", "sim");
  reject_unknown(js, "sim", {"T", "dt"});
  scn.sim.T = as_finite(member(js, "sim", "T"), "sim.T");
  scn.sim.dt = as_finite(member(js, "sim", "dt"), "sim.dt");
  if (!(scn.sim.T > 0.0) || !(scn.sim.dt > 0.0)) fail("sim", "T and dt must be positive");
  const double steps = scn.sim.T / scn.sim.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    fail("sim", "dt must divide T");
  return scn;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& scn) {
  json root;
  json jp;
  jp["n"] = scn.plant.n;
  jp["p"] = scn.plant.p;
  jp["m"] = scn.plant.m;
  json jA = json::array();
  for (const auto& Ar : scn.plant.A_coeffs) jA.push_back(matrix_json(Ar));
  jp["A_coeffs"] = jA;
  jp["B1"] = matrix_json(scn.plant.B1);
  jp["B2"] = matrix_json(scn.plant.B2);
  jp["gamma"] = json::array({scn.plant.gamma_lo, scn.plant.gamma_hi});
  root["plant"] = jp;

  json jt;
  jt["N"] = scn.topology.num_followers;
  json jce = json::array();
  for (const auto& [a, b] : scn.topology.coupling_edges)
    jce.push_back(json::array({a, b}));
  jt["coupling_edges"] = jce;
  json jme = json::array();
  for (const auto& [a, b] : scn.topology.comm_edges)
    jme.push_back(json::array({a, b}));
  jt["comm_edges"] = jme;
  jt["pinned"] = scn.topology.pinned;
  root["topology"] = jt;

  json jc = json::array();
  for (const auto& c : scn.couplings) {
    json e;
    e["from"] = c.from;
    e["to"] = c.to;
    e["C"] = matrix_json(c.C);
    jc.push_back(e);
  }
  root["couplings"] = jc;

  json jw;
  jw["Q"] = matrix_json(scn.Q);
  jw["R"] = matrix_json(scn.R);
  root["weights"] = jw;

  json jr;
  json jpr;
  if (scn.rho_profile.kind == RhoProfile::Kind::Constant) {
    jr["kind"] = "constant";
    jpr["value"] = scn.rho_profile.value;
  } else {
    jr["kind"] = "cosine";
    jpr["amplitude"] = scn.rho_profile.amplitude;
    jpr["frequency"] = scn.rho_profile.frequency;
    jpr["offset"] = scn.rho_profile.offset;
  }
  jr["params"] = jpr;
  root["rho_profile"] = jr;

  json ji = json::array();
  for (size_t node = 0; node < scn.init.size(); ++node) {
    json e;
    e["node"] = static_cast<int>(node);
    e["x"] = vector_json(scn.init[node]);
    ji.push_back(e);
  }
  root["init"] = ji;

  json js;
  js["T"] = scn.sim.T;
  js["dt"] = scn.sim.dt;
  root["sim"] = js;
  return root.dump(2) + "\n";
}

void save_scenario(const Scenario& scn, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write scenario file: " + path);
  out << scenario_to_json(scn);
}

Scenario build_mass_spring_example() {
  Scenario scn;
  const int N = 20;
  const double mass = 3.0;
  const double k_nominal = 2.4, k_swing = 1.4;  // kbar(rho) = 2.4 - 1.4 rho
  const double kc = 0.1;                        // inter-mass spring and damper

  scn.plant.n = 2;
  scn.plant.p = 1;
  scn.plant.m = 1;
  Eigen::MatrixXd A0(2, 2), A1(2, 2);
  A0 << 0.0, 1.0, -k_nominal / mass, 0.0;
  A1 << 0.0, 0.0, k_swing / mass, 0.0;
  scn.plant.A_coeffs = {A0, A1};
  Eigen::MatrixXd B(2, 1);
  B << 0.0, 1.0 / mass;
  scn.plant.B1 = B;
  scn.plant.B2 = B;
  scn.plant.gamma_lo = -1.0;
  scn.plant.gamma_hi = 1.0;

  scn.topology.num_followers = N;
  Eigen::MatrixXd C(1, 2);
  C << kc, kc;
  for (int i = 0; i <= N; ++i) {
    int j = (i + 1) % (N + 1);
    scn.topology.coupling_edges.insert({i, j});
    scn.topology.coupling_edges.insert({j, i});
  }
  for (const auto& e : scn.topology.coupling_edges)
    scn.couplings.push_back({e.first, e.second, C});
  for (int i = 1; i < N; ++i) scn.topology.comm_edges.insert({i, i + 1});
  scn.topology.pinned = {1, 8, 12, 15};

  scn.Q = Eigen::Vector2d(10.0, 100.0).asDiagonal();
  scn.R = Eigen::MatrixXd::Constant(1, 1, 0.001);

  scn.rho_profile.kind = RhoProfile::Kind::Cosine;
  scn.rho_profile.amplitude = 1.0;
  scn.rho_profile.frequency = 1.0;
  scn.rho_profile.offset = 0.0;

  const double table[21][2] = {
      {0.5, 0.0},  {0.45, 0.0}, {0.4, 0.0},  {0.3, 0.0},  {0.2, 0.0},
      {0.15, 0.0}, {0.25, 0.0}, {0.35, 0.0}, {0.45, 0.0}, {0.55, 0.0},
      {0.65, 0.0}, {0.55, 0.0}, {0.45, 0.0}, {0.35, 0.0}, {0.45, 0.0},
      {0.5, 0.0},  {0.4, 0.0},  {0.3, 0.1},  {0.2, 0.2},  {0.1, 0.3},
      {0.0, 0.4}};
  for (int i = 0; i <= N; ++i)
    scn.init.push_back(Eigen::Vector2d(table[i][0], table[i][1]));

  scn.sim.T = 12.0;
  scn.sim.dt = 1e-3;
  return scn;
}

Eigen::MatrixXd DeltaSignal::eval(double t) const {
  switch (kind) {
    case Kind::Zero: return Eigen::MatrixXd::Zero(M.rows(), M.cols());
    case Kind::Constant: return M;
    case Kind::Sinusoid: return (amplitude * std::sin(frequency * t + phase)) * M;
  }
  return M;
}

double DeltaSignal::norm_bound() const {
  if (kind == Kind::Zero) return 0.0;
  double s = M.jacobiSvd().singularValues()(0);
  return kind == Kind::Constant ? s : std::abs(amplitude) * s;
}

void UncertaintyRealization::check() const {
  for (const auto& [edge, sig] : delta) {
    if (sig.norm_bound() > 1.0 + 1e-9)
      throw ValidationError("uncertainty on edge (" + std::to_string(edge.first) +
                            "," + std::to_string(edge.second) +
                            ") exceeds unit spectral norm");
  }
}

Eigen::MatrixXd UncertaintyRealization::eval(int from, int to, double t, int m,
                                             int q) const {
  auto it = delta.find({from, to});
  if (it == delta.end()) return Eigen::MatrixXd::Zero(m, q);
  return it->second.eval(t);
}

Eigen::VectorXd coupling_force(const CouplingShape& shape,
                               const Eigen::MatrixXd& delta_value,
                               const Eigen::VectorXd& z) {
  if (z.size() != shape.C.cols())
    throw ShapeMismatch("coupling force: state difference has wrong length");
  if (delta_value.cols() != shape.C.rows())
    throw ShapeMismatch("coupling force: uncertainty shape does not match C");
  return delta_value * (shape.C * z);
}

}  // namespace lfgs
