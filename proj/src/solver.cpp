#include "lfgs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lfgs {

EigPair sym_eig(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw ShapeMismatch("sym_eig: matrix is not square");
  const double scale = 1.0 + S.cwiseAbs().maxCoeff();
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NumericalBreakdown("sym_eig: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success)
    throw NonConvergence("sym_eig: eigendecomposition did not converge");
  EigPair out{es.eigenvalues(), es.eigenvectors()};
  const double resid =
      (S * out.vectors - out.vectors * out.values.asDiagonal()).cwiseAbs().maxCoeff();
  if (resid > 1e-9 * scale)
    throw NumericalBreakdown("sym_eig: residual " + std::to_string(resid) +
                             " exceeds tolerance");
  return out;
}

Eigen::MatrixXd AffineBlock::eval(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd B = F0;
  for (const auto& [j, Fj] : coeffs) B.noalias() += v(j) * Fj;
  return B;
}

namespace {

void check_problem(const ConicProblem& pb) {
  if (pb.num_vars <= 0) throw ShapeMismatch("conic problem has no variables");
  if (pb.blocks.empty()) throw ShapeMismatch("conic problem has no blocks");
  if (pb.lower.size() != pb.num_vars || pb.upper.size() != pb.num_vars ||
      pb.init.size() != pb.num_vars)
    throw ShapeMismatch("conic problem: bound or init length mismatch");
  if (!(pb.eps_margin > 0.0))
    throw ValidationError("conic problem: eps_margin must be positive");
  for (const auto& blk : pb.blocks) {
    if (blk.F0.rows() != blk.F0.cols())
      throw ShapeMismatch("block '" + blk.label + "': F0 is not square");
    for (const auto& [j, Fj] : blk.coeffs) {
      if (j < 0 || j >= pb.num_vars)
        throw ShapeMismatch("block '" + blk.label + "': variable index out of range");
      if (Fj.rows() != blk.F0.rows() || Fj.cols() != blk.F0.cols())
        throw ShapeMismatch("block '" + blk.label + "': coefficient shape mismatch");
    }
  }
}

Eigen::VectorXd clamp_to_box(Eigen::VectorXd v, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
  for (Eigen::Index j = 0; j < v.size(); ++j)
    v(j) = std::min(std::max(v(j), lo(j)), hi(j));
  return v;
}

// largest eigenvalue across all blocks at v
double worst_eigenvalue(const ConicProblem& pb, const Eigen::VectorXd& v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& blk : pb.blocks) {
    Eigen::MatrixXd B = blk.eval(v);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (B + B.transpose()),
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw NonConvergence("eigenvalue check failed on block '" + blk.label + "'");
    worst = std::max(worst, es.eigenvalues().maxCoeff());
  }
  return worst;
}

struct BarrierOutcome {
  bool solved = false;       // reached a point with worst eigenvalue <= -eps
  bool infeasible = false;   // relaxation optimum stayed positive
  Eigen::VectorXd v;
  double best_s = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Phase-1: minimize s subject to B_k(v) <= s*I and the box, by a damped
// Newton method on the log-det barrier with geometric growth of t.
BarrierOutcome barrier_phase1(const ConicProblem& pb, const Eigen::VectorXd& start) {
  const int D = pb.num_vars;
  BarrierOutcome out;

  Eigen::VectorXd v = start;
  for (int j = 0; j < D; ++j) {
    // strictly inside any finite bound
    const double pad = 1e-6 * (1.0 + std::abs(pb.lower(j)) + std::abs(pb.upper(j)));
    if (std::isfinite(pb.lower(j))) v(j) = std::max(v(j), pb.lower(j) + pad);
    if (std::isfinite(pb.upper(j))) v(j) = std::min(v(j), pb.upper(j) - pad);
  }
  double s = worst_eigenvalue(pb, v) + 1.0;

  auto strictly_feasible = [&](const Eigen::VectorXd& vv, double ss) {
    for (int j = 0; j < D; ++j) {
      if (std::isfinite(pb.lower(j)) && !(vv(j) > pb.lower(j))) return false;
      if (std::isfinite(pb.upper(j)) && !(vv(j) < pb.upper(j))) return false;
    }
    for (const auto& blk : pb.blocks) {
      Eigen::MatrixXd S = ss * Eigen::MatrixXd::Identity(blk.F0.rows(), blk.F0.rows()) -
                          blk.eval(vv);
      Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (S + S.transpose()));
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  };

  auto barrier_value = [&](const Eigen::VectorXd& vv, double ss, double t) {
    double phi = t * ss;
    for (const auto& blk : pb.blocks) {
      Eigen::MatrixXd S = ss * Eigen::MatrixXd::Identity(blk.F0.rows(), blk.F0.rows()) -
                          blk.eval(vv);
      Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (S + S.transpose()));
      if (llt.info() != Eigen::Success)
        return std::numeric_limits<double>::infinity();
      phi -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    for (int j = 0; j < D; ++j) {
      if (std::isfinite(pb.lower(j))) phi -= std::log(vv(j) - pb.lower(j));
      if (std::isfinite(pb.upper(j))) phi -= std::log(pb.upper(j) - vv(j));
    }
    return phi;
  };

  for (double t = 1.0; t <= 1e12; t *= 10.0) {
    for (int newton = 0; newton < 60; ++newton) {
      ++out.iterations;
      // gradient and Hessian in (v, s)
      Eigen::VectorXd g = Eigen::VectorXd::Zero(D + 1);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D + 1, D + 1);
      g(D) = t;
      for (const auto& blk : pb.blocks) {
        const int nb = static_cast<int>(blk.F0.rows());
        Eigen::MatrixXd S =
            s * Eigen::MatrixXd::Identity(nb, nb) - blk.eval(v);
        S = 0.5 * (S + S.transpose());
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
          throw NumericalBreakdown("barrier: iterate left the cone interior");
        Eigen::MatrixXd Sinv = llt.solve(Eigen::MatrixXd::Identity(nb, nb));
        g(D) -= Sinv.trace();
        H(D, D) += Sinv.squaredNorm();
        std::vector<Eigen::MatrixXd> T(blk.coeffs.size());
        for (size_t a = 0; a < blk.coeffs.size(); ++a) {
          const auto& [ja, Fa] = blk.coeffs[a];
          g(ja) += Sinv.cwiseProduct(Fa).sum();
          T[a] = Sinv * Fa * Sinv;
          const double cross = T[a].trace();
          H(ja, D) -= cross;
          H(D, ja) -= cross;
        }
        for (size_t a = 0; a < blk.coeffs.size(); ++a)
          for (size_t b = a; b < blk.coeffs.size(); ++b) {
            const int ja = blk.coeffs[a].first, jb = blk.coeffs[b].first;
            const double h = T[a].cwiseProduct(blk.coeffs[b].second).sum();
            H(ja, jb) += h;
            if (ja != jb || a != b) H(jb, ja) += h;
          }
      }
      for (int j = 0; j < D; ++j) {
        if (std::isfinite(pb.lower(j))) {
          const double d = v(j) - pb.lower(j);
          g(j) -= 1.0 / d;
          H(j, j) += 1.0 / (d * d);
        }
        if (std::isfinite(pb.upper(j))) {
          const double d = pb.upper(j) - v(j);
          g(j) += 1.0 / d;
          H(j, j) += 1.0 / (d * d);
        }
      }
      H.diagonal().array() += 1e-12;  // guard against exactly singular Hessians
      Eigen::VectorXd step = H.ldlt().solve(-g);
      const double decrement = -g.dot(step);
      if (!std::isfinite(decrement)) throw NumericalBreakdown("barrier: Newton step is not finite");
      if (decrement <= 2e-10) break;

      const double phi0 = barrier_value(v, s, t);
      double alpha = 1.0;
      Eigen::VectorXd v_try;
      double s_try = s;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        v_try = v + alpha * step.head(D);
        s_try = s + alpha * step(D);
        if (strictly_feasible(v_try, s_try) &&
            barrier_value(v_try, s_try, t) <= phi0 - 0.25 * alpha * decrement) {
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      v = v_try;
      s = s_try;
    }
    out.best_s = std::min(out.best_s, s);
    if (s < -1.5 * pb.eps_margin) break;  // deep enough; stop tightening
  }

  out.v = clamp_to_box(v, pb.lower, pb.upper);
  const double worst = worst_eigenvalue(pb, out.v);
  if (worst <= -pb.eps_margin) {
    out.solved = true;
  } else if (out.best_s > 0.0) {
    out.infeasible = true;
  }
  return out;
}

}  // namespace

FeasibilityResult solve_feasibility(const ConicProblem& pb, const SolverOptions& opt) {
  check_problem(pb);
  const int D = pb.num_vars;
  const int K = static_cast<int>(pb.blocks.size());
  FeasibilityResult res;

  // A block with no variable dependence either always passes or dooms the
  // problem; settle it up front instead of projecting forever.
  for (const auto& blk : pb.blocks) {
    if (!blk.coeffs.empty()) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (blk.F0 + blk.F0.transpose()), Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    if (top > -pb.eps_margin) {
      res.status = SolveStatus::Infeasible;
      res.v = pb.init;
      res.margin = -top;
      std::ostringstream msg;
      msg << "block '" << blk.label << "' is constant with largest eigenvalue "
          << top << "; no variable can repair it";
      res.detail = msg.str();
      return res;
    }
  }

  Eigen::VectorXd v = opt.warm_start ? *opt.warm_start : pb.init;
  if (v.size() != D) throw ShapeMismatch("warm start length mismatch");
  v = clamp_to_box(std::move(v), pb.lower, pb.upper);

  // Gram matrix of the affine map (block coefficients plus the box identity),
  // factored once; every iteration reuses the factorization.
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(D, D);
  for (const auto& blk : pb.blocks)
    for (size_t a = 0; a < blk.coeffs.size(); ++a)
      for (size_t b = a; b < blk.coeffs.size(); ++b) {
        const double g =
            blk.coeffs[a].second.cwiseProduct(blk.coeffs[b].second).sum();
        G(blk.coeffs[a].first, blk.coeffs[b].first) += g;
        if (blk.coeffs[a].first != blk.coeffs[b].first || a != b)
          G(blk.coeffs[b].first, blk.coeffs[a].first) += g;
      }
  Eigen::LDLT<Eigen::MatrixXd> gram(G);
  if (gram.info() != Eigen::Success)
    throw NumericalBreakdown("Gram factorization failed");

  const double shift = opt.work_margin_factor * pb.eps_margin;
  std::vector<Eigen::MatrixXd> P(K);  // Dykstra corrections, matrix part
  for (int k = 0; k < K; ++k)
    P[k] = Eigen::MatrixXd::Zero(pb.blocks[k].F0.rows(), pb.blocks[k].F0.cols());
  Eigen::VectorXd p_box = Eigen::VectorXd::Zero(D);

  double best_worst = std::numeric_limits<double>::infinity();
  int best_age = 0;
  const int stall_window = 500;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    // project each shifted block, carrying the Dykstra correction
    std::vector<Eigen::MatrixXd> U(K);
    for (int k = 0; k < K; ++k) {
      Eigen::MatrixXd W = pb.blocks[k].eval(v) + P[k];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()));
      if (es.info() != Eigen::Success)
        throw NonConvergence("projection eigendecomposition failed on block '" +
                             pb.blocks[k].label + "'");
      Eigen::VectorXd w = es.eigenvalues().cwiseMin(-shift);
      U[k] = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
      U[k] = 0.5 * (U[k] + U[k].transpose());
      P[k] = W - U[k];
    }
    Eigen::VectorXd u_box = clamp_to_box(v + p_box, pb.lower, pb.upper);
    p_box = (v + p_box) - u_box;

    // least-squares pullback onto the affine image
    Eigen::VectorXd b = u_box;
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd target = U[k] - pb.blocks[k].F0;
      for (const auto& [j, Fj] : pb.blocks[k].coeffs)
        b(j) += Fj.cwiseProduct(target).sum();
    }
    Eigen::VectorXd v_next = gram.solve(b);
    const double move = (v_next - v).norm();
    v = std::move(v_next);

    const double worst = worst_eigenvalue(pb, clamp_to_box(v, pb.lower, pb.upper));
    if (worst <= -pb.eps_margin) {
      res.status = SolveStatus::Feasible;
      res.v = clamp_to_box(v, pb.lower, pb.upper);
      res.margin = -worst_eigenvalue(pb, res.v);
      res.iterations = it + 1;
      res.detail = "accepted by alternating projections";
      return res;
    }
    if (worst < best_worst - opt.tol * (1.0 + std::abs(best_worst))) {
      best_worst = worst;
      best_age = 0;
    } else {
      ++best_age;
    }
    if (best_age >= stall_window && move <= opt.tol * (1.0 + v.norm())) break;
  }

  if (opt.use_barrier_fallback) {
    BarrierOutcome bo = barrier_phase1(pb, clamp_to_box(v, pb.lower, pb.upper));
    if (bo.solved) {
      res.status = SolveStatus::Feasible;
      res.v = bo.v;
      res.margin = -worst_eigenvalue(pb, bo.v);
      res.iterations = it + bo.iterations;
      res.detail = "accepted by barrier phase-1 after projections stalled";
      return res;
    }
    if (bo.infeasible) {
      res.status = SolveStatus::Infeasible;
      res.v = bo.v;
      res.margin = -worst_eigenvalue(pb, bo.v);
      res.iterations = it + bo.iterations;
      std::ostringstream msg;
      msg << "barrier phase-1 optimum stayed at " << bo.best_s
          << " > 0; no feasible point exists";
      res.detail = msg.str();
      return res;
    }
    it += bo.iterations;
    v = bo.v;
  }

  res.status = SolveStatus::MaxIterations;
  res.v = clamp_to_box(v, pb.lower, pb.upper);
  res.margin = -worst_eigenvalue(pb, res.v);
  res.iterations = it;
  res.detail = "no point cleared the requested margin within the iteration budget";
  return res;
}

double verify_margin(const ConicProblem& pb, const Eigen::VectorXd& v) {
  check_problem(pb);
  if (v.size() != pb.num_vars)
    throw ShapeMismatch("verify_margin: candidate length mismatch");
  for (int j = 0; j < pb.num_vars; ++j)
    if (v(j) < pb.lower(j) - 1e-9 || v(j) > pb.upper(j) + 1e-9)
      throw ValidationError("verify_margin: component " + std::to_string(j) +
                            " leaves its box");
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& blk : pb.blocks) {
    EigPair e = sym_eig(blk.eval(v));
    worst = std::max(worst, e.values.maxCoeff());
  }
  return -worst;
}

}  // namespace lfgs
