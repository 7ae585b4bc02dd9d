#include "lfgs/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lfgs {

const Eigen::MatrixXd& LmiContext::C(int from, int to) const {
  auto it = coupling_C.find({from, to});
  if (it == coupling_C.end())
    throw UnknownNode("no coupling shape for edge (" + std::to_string(from) +
                      "," + std::to_string(to) + ")");
  return it->second;
}

LmiContext make_context(const Scenario& scn) {
  ValidationReport rep = validate_topology(scn.topology);
  if (!rep.pass) {
    std::string msg = "scenario topology rejected:";
    for (const auto& s : rep.issues) msg += " " + s + ";";
    throw ValidationError(msg);
  }
  LmiContext ctx;
  ctx.N = scn.topology.num_followers;
  ctx.plant = scn.plant;
  ctx.constants = consensus_constants(scn.topology, scn.Q);
  ctx.R = scn.R;

  EigPair eq = sym_eig(ctx.constants.Q_bar);
  ctx.Qbar_sqrt = eq.vectors *
                  eq.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                  eq.vectors.transpose();
  ctx.Qbar_sqrt = 0.5 * (ctx.Qbar_sqrt + ctx.Qbar_sqrt.transpose());

  Eigen::LLT<Eigen::MatrixXd> rllt(scn.R);
  if (rllt.info() != Eigen::Success)
    throw ValidationError("input weight R is not positive definite");
  ctx.input_quad = scn.plant.B1 * rllt.solve(scn.plant.B1.transpose());
  ctx.input_quad = 0.5 * (ctx.input_quad + ctx.input_quad.transpose());
  ctx.b2_quad = scn.plant.B2 * scn.plant.B2.transpose();
  ctx.b2_quad = 0.5 * (ctx.b2_quad + ctx.b2_quad.transpose());

  const int N = ctx.N;
  ctx.in_followers.assign(N + 1, {});
  ctx.out_followers.assign(N + 1, {});
  ctx.from_leader_flag.assign(N + 1, 0);
  ctx.to_leader_flag.assign(N + 1, 0);
  for (int i = 1; i <= N; ++i) {
    ctx.in_followers[i] = scn.topology.coupling_in(i);
    ctx.out_followers[i] = scn.topology.coupling_out(i);
    ctx.from_leader_flag[i] = scn.topology.leader_to(i) ? 1 : 0;
    ctx.to_leader_flag[i] = scn.topology.to_leader(i) ? 1 : 0;
    if (ctx.to_leader_flag[i]) ctx.to_leader_list.push_back(i);
  }
  for (const auto& c : scn.couplings) ctx.coupling_C[{c.from, c.to}] = c.C;
  return ctx;
}

Eigen::MatrixXd VarMap::decode_Y(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd Y(n, n);
  int idx = off_y;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Y(a, b) = v(idx);
      Y(b, a) = v(idx);
      ++idx;
    }
  return Y;
}

MultiplierSet VarMap::decode_multipliers(const Eigen::VectorXd& v) const {
  MultiplierSet m;
  for (size_t e = 0; e < edges.size(); ++e) {
    m.nu[edges[e]] = 1.0 / v(off_nu + static_cast<int>(e));
    m.mu[edges[e]] = 1.0 / v(off_mu + static_cast<int>(e));
  }
  if (!reduced) {
    const int count = off_nu_leader - off_pi;
    m.pi.resize(count);
    for (int i = 0; i < count; ++i) m.pi[i] = 1.0 / v(off_pi + i);
  }
  for (size_t k = 0; k < from_leader.size(); ++k)
    m.nu_from_leader[from_leader[k]] = 1.0 / v(off_nu_leader + static_cast<int>(k));
  for (size_t k = 0; k < to_leader.size(); ++k)
    m.mu_to_leader[to_leader[k]] = 1.0 / v(off_mu_leader + static_cast<int>(k));
  return m;
}

namespace {

double tau_of(const std::map<std::pair<int, int>, double>& m,
              const std::pair<int, int>& key, const char* what) {
  auto it = m.find(key);
  if (it == m.end())
    throw MissingMultiplier(std::string(what) + " multiplier missing for edge (" +
                            std::to_string(key.first) + "," +
                            std::to_string(key.second) + ")");
  return 1.0 / it->second;
}

double tau_of(const std::map<int, double>& m, int key, const char* what) {
  auto it = m.find(key);
  if (it == m.end())
    throw MissingMultiplier(std::string(what) + " multiplier missing for follower " +
                            std::to_string(key));
  return 1.0 / it->second;
}

}  // namespace

Eigen::VectorXd VarMap::encode(const Eigen::MatrixXd& Y,
                               const MultiplierSet& m) const {
  if (Y.rows() != n || Y.cols() != n)
    throw ShapeMismatch("encode: Y has the wrong dimensions");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_vars);
  int idx = off_y;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) v(idx++) = Y(a, b);
  for (size_t e = 0; e < edges.size(); ++e) {
    v(off_nu + static_cast<int>(e)) = tau_of(m.nu, edges[e], "receiver-side");
    v(off_mu + static_cast<int>(e)) = tau_of(m.mu, edges[e], "sender-side");
  }
  if (!reduced) {
    const int count = off_nu_leader - off_pi;
    if (static_cast<int>(m.pi.size()) != count)
      throw MissingMultiplier("parameter-ball multiplier list has wrong length");
    for (int i = 0; i < count; ++i) v(off_pi + i) = 1.0 / m.pi[i];
  }
  for (size_t k = 0; k < from_leader.size(); ++k)
    v(off_nu_leader + static_cast<int>(k)) =
        tau_of(m.nu_from_leader, from_leader[k], "leader-in");
  for (size_t k = 0; k < to_leader.size(); ++k)
    v(off_mu_leader + static_cast<int>(k)) =
        tau_of(m.mu_to_leader, to_leader[k], "leader-out");
  return v;
}

namespace {

VarMap make_var_map(const LmiContext& ctx, bool reduced) {
  VarMap map;
  map.n = ctx.plant.n;
  map.reduced = reduced;
  for (const auto& [edge, C] : ctx.coupling_C)
    if (edge.first >= 1 && edge.second >= 1) map.edges.push_back(edge);
  std::sort(map.edges.begin(), map.edges.end());
  for (int i = 1; i <= ctx.N; ++i) {
    if (ctx.from_leader_flag[i]) map.from_leader.push_back(i);
    if (ctx.to_leader_flag[i]) map.to_leader.push_back(i);
  }
  const int E = static_cast<int>(map.edges.size());
  map.off_y = 0;
  map.off_nu = map.y_dim();
  map.off_mu = map.off_nu + E;
  map.off_pi = map.off_mu + E;
  map.off_nu_leader = map.off_pi + (reduced ? 0 : ctx.N);
  map.off_mu_leader = map.off_nu_leader + static_cast<int>(map.from_leader.size());
  map.num_vars = map.off_mu_leader + static_cast<int>(map.to_leader.size());
  return map;
}

int edge_index(const VarMap& map, int from, int to) {
  auto it = std::lower_bound(map.edges.begin(), map.edges.end(),
                             std::make_pair(from, to));
  if (it == map.edges.end() || *it != std::make_pair(from, to))
    throw UnknownNode("edge (" + std::to_string(from) + "," + std::to_string(to) +
                      ") is not a follower coupling edge");
  return static_cast<int>(it - map.edges.begin());
}

int leader_index(const std::vector<int>& order, int i, const char* what) {
  auto it = std::lower_bound(order.begin(), order.end(), i);
  if (it == order.end() || *it != i)
    throw UnknownNode(std::string(what) + ": follower " + std::to_string(i) +
                      " has no leader-incident edge");
  return static_cast<int>(it - order.begin());
}

// Single source of truth for both block forms, written to be exactly affine
// in the flat variables (Y entries and inverse multipliers).
Eigen::MatrixXd eval_block(const LmiContext& ctx, const VarMap& map, int i,
                           double rho, double beta, const Eigen::VectorXd& v) {
  const int n = ctx.plant.n;
  const bool full = !map.reduced;
  const Eigen::MatrixXd Y = map.decode_Y(v);
  const Eigen::MatrixXd A = eval_A(ctx.plant, rho);

  const auto& ins = ctx.in_followers[i];
  const auto& outs = ctx.out_followers[i];
  const bool d_in = ctx.from_leader_flag[i];
  const bool d_out = ctx.to_leader_flag[i];

  int dim = 2 * n;  // top-left corner plus the state-weight row
  for (int j : ins) dim += static_cast<int>(ctx.C(j, i).rows());
  for (int r : outs) dim += static_cast<int>(ctx.C(i, r).rows());
  if (full) dim += n;
  if (d_in) dim += static_cast<int>(ctx.C(0, i).rows());
  if (d_out) dim += static_cast<int>(ctx.C(i, 0).rows());

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);

  // top-left corner
  double c = 0.0;
  for (int j : ins) {
    c += v(map.off_nu + edge_index(map, j, i));
    c += v(map.off_mu + edge_index(map, j, i));
  }
  if (d_in)
    c += v(map.off_nu_leader + leader_index(map.from_leader, i, "leader-in"));
  for (int k : ctx.to_leader_list)
    c += v(map.off_mu_leader + leader_index(map.to_leader, k, "leader-out"));
  Eigen::MatrixXd corner = A * Y + Y * A.transpose() - ctx.input_quad + c * ctx.b2_quad;
  if (full)
    corner += (beta * beta * v(map.off_pi + (i - 1))) *
              Eigen::MatrixXd::Identity(n, n);
  M.block(0, 0, n, n) = corner;

  auto put_row = [&](int row, const Eigen::MatrixXd& L, const Eigen::MatrixXd& D) {
    const int q = static_cast<int>(L.rows());
    M.block(row, 0, q, n) = L;
    M.block(0, row, n, q) = L.transpose();
    M.block(row, row, q, q) = D;
    return row + q;
  };

  int row = n;
  row = put_row(row, ctx.Qbar_sqrt * Y,
                -Eigen::MatrixXd::Identity(n, n));
  for (int j : ins) {
    const Eigen::MatrixXd& Cji = ctx.C(j, i);
    const int q = static_cast<int>(Cji.rows());
    row = put_row(row, Cji * Y,
                  -v(map.off_nu + edge_index(map, j, i)) *
                      Eigen::MatrixXd::Identity(q, q));
  }
  for (int r : outs) {
    const Eigen::MatrixXd& Cir = ctx.C(i, r);
    const int q = static_cast<int>(Cir.rows());
    row = put_row(row, Cir * Y,
                  -v(map.off_mu + edge_index(map, i, r)) *
                      Eigen::MatrixXd::Identity(q, q));
  }
  if (full)
    row = put_row(row, Y,
                  -v(map.off_pi + (i - 1)) * Eigen::MatrixXd::Identity(n, n));
  if (d_in) {
    const Eigen::MatrixXd& C0i = ctx.C(0, i);
    const int q = static_cast<int>(C0i.rows());
    row = put_row(row, C0i * Y,
                  -v(map.off_nu_leader + leader_index(map.from_leader, i, "leader-in")) *
                      Eigen::MatrixXd::Identity(q, q));
  }
  if (d_out) {
    const Eigen::MatrixXd& Ci0 = ctx.C(i, 0);
    const int q = static_cast<int>(Ci0.rows());
    row = put_row(row,
                  Ci0 * Y,
                  -(1.0 / ctx.N) *
                      v(map.off_mu_leader + leader_index(map.to_leader, i, "leader-out")) *
                      Eigen::MatrixXd::Identity(q, q));
  }
  return 0.5 * (M + M.transpose());
}

std::vector<int> block_vars(const LmiContext& ctx, const VarMap& map, int i) {
  std::vector<int> vars;
  for (int j = 0; j < map.y_dim(); ++j) vars.push_back(map.off_y + j);
  for (int j : ctx.in_followers[i]) {
    vars.push_back(map.off_nu + edge_index(map, j, i));
    vars.push_back(map.off_mu + edge_index(map, j, i));
  }
  for (int r : ctx.out_followers[i])
    vars.push_back(map.off_mu + edge_index(map, i, r));
  if (!map.reduced) vars.push_back(map.off_pi + (i - 1));
  if (ctx.from_leader_flag[i])
    vars.push_back(map.off_nu_leader + leader_index(map.from_leader, i, "leader-in"));
  for (int k : ctx.to_leader_list)
    vars.push_back(map.off_mu_leader + leader_index(map.to_leader, k, "leader-out"));
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

void check_follower(const LmiContext& ctx, int i) {
  if (i < 1 || i > ctx.N)
    throw UnknownNode("follower id " + std::to_string(i) + " out of range");
}

}  // namespace

Eigen::MatrixXd build_tracking_block(const LmiContext& ctx, int i, double rho,
                                     double beta, const Eigen::MatrixXd& Y,
                                     const MultiplierSet& m) {
  check_follower(ctx, i);
  VarMap map = make_var_map(ctx, /*reduced=*/false);
  return eval_block(ctx, map, i, rho, beta, map.encode(Y, m));
}

Eigen::MatrixXd build_interp_block(const LmiContext& ctx, int i, double rho,
                                   const Eigen::MatrixXd& Y,
                                   const MultiplierSet& m) {
  check_follower(ctx, i);
  VarMap map = make_var_map(ctx, /*reduced=*/true);
  return eval_block(ctx, map, i, rho, 0.0, map.encode(Y, m));
}

double riccati_residual(const LmiContext& ctx, int i, double rho, double beta,
                        const Eigen::MatrixXd& Y, const MultiplierSet& m) {
  check_follower(ctx, i);
  const int n = ctx.plant.n;
  const Eigen::MatrixXd A = eval_A(ctx.plant, rho);
  if (static_cast<int>(m.pi.size()) != ctx.N)
    throw MissingMultiplier("parameter-ball multiplier list has wrong length");
  const double pi_i = m.pi[i - 1];
  auto nu_of = [&](int from, int to) {
    return 1.0 / tau_of(m.nu, {from, to}, "receiver-side");
  };
  auto mu_of = [&](int from, int to) {
    return 1.0 / tau_of(m.mu, {from, to}, "sender-side");
  };

  double c = 0.0;
  Eigen::MatrixXd W = ctx.constants.Q_bar + pi_i * Eigen::MatrixXd::Identity(n, n);
  for (int j : ctx.in_followers[i]) {
    c += 1.0 / nu_of(j, i) + 1.0 / mu_of(j, i);
    const Eigen::MatrixXd& Cji = ctx.C(j, i);
    W += nu_of(j, i) * Cji.transpose() * Cji;
  }
  for (int r : ctx.out_followers[i]) {
    const Eigen::MatrixXd& Cir = ctx.C(i, r);
    W += mu_of(i, r) * Cir.transpose() * Cir;
  }
  if (ctx.from_leader_flag[i]) {
    const double nu0 = 1.0 / tau_of(m.nu_from_leader, i, "leader-in");
    c += 1.0 / nu0;
    const Eigen::MatrixXd& C0i = ctx.C(0, i);
    W += nu0 * C0i.transpose() * C0i;
  }
  for (int k : ctx.to_leader_list)
    c += tau_of(m.mu_to_leader, k, "leader-out");
  if (ctx.to_leader_flag[i]) {
    const double mu0 = 1.0 / tau_of(m.mu_to_leader, i, "leader-out");
    const Eigen::MatrixXd& Ci0 = ctx.C(i, 0);
    W += (ctx.N * mu0) * Ci0.transpose() * Ci0;
  }

  Eigen::MatrixXd Ric = A * Y + Y * A.transpose() - ctx.input_quad +
                        (beta * beta / pi_i) * Eigen::MatrixXd::Identity(n, n) +
                        c * ctx.b2_quad + Y * W * Y;
  return sym_eig(0.5 * (Ric + Ric.transpose())).values.maxCoeff();
}

AssembledProblem assemble_feasibility_problem(const LmiContext& ctx, double rho,
                                              double beta, bool reduced,
                                              double init_y_scale) {
  AssembledProblem out;
  out.map = make_var_map(ctx, reduced);
  const VarMap& map = out.map;
  const int D = map.num_vars;
  const int n = ctx.plant.n;

  ConicProblem& pb = out.problem;
  pb.num_vars = D;
  pb.lower = Eigen::VectorXd::Constant(D, 1e-8);
  pb.upper = Eigen::VectorXd::Constant(D, 1e8);
  for (int j = 0; j < map.y_dim(); ++j) {
    pb.lower(map.off_y + j) = -std::numeric_limits<double>::infinity();
    pb.upper(map.off_y + j) = std::numeric_limits<double>::infinity();
  }
  pb.init = Eigen::VectorXd::Ones(D);
  {
    int idx = map.off_y;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) pb.init(idx++) = (a == b) ? init_y_scale : 0.0;
  }
  pb.eps_margin =
      1e-6 * (1.0 + eval_A(ctx.plant, rho).jacobiSvd().singularValues()(0));

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(D);
  for (int i = 1; i <= ctx.N; ++i) {
    AffineBlock blk;
    blk.label = "follower " + std::to_string(i) + " tracking block";
    blk.F0 = eval_block(ctx, map, i, rho, beta, zero);
    for (int j : block_vars(ctx, map, i)) {
      Eigen::VectorXd e = zero;
      e(j) = 1.0;
      Eigen::MatrixXd Fj = eval_block(ctx, map, i, rho, beta, e) - blk.F0;
      blk.coeffs.emplace_back(j, Fj);
    }
    pb.blocks.push_back(std::move(blk));
  }

  // floor on Y: hold Y above a small multiple of the identity
  const double y_min = 1e-6;
  AffineBlock floor_blk;
  floor_blk.label = "Y floor";
  floor_blk.F0 = y_min * Eigen::MatrixXd::Identity(n, n);
  {
    int idx = map.off_y;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
        E(a, b) = -1.0;
        E(b, a) = -1.0;
        floor_blk.coeffs.emplace_back(idx++, E);
      }
  }
  pb.blocks.push_back(std::move(floor_blk));
  return out;
}

}  // namespace lfgs
