#include "lyapbound/sdp.hpp"
#include <cstdio>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lyapbound {

namespace {

// Symmetric-vector layout: a = j(j+1)/2 + i for i <= j.
Index sym_dim(Index d) { return d * (d + 1) / 2; }

Matrix from_svec(const Eigen::Ref<const Vector>& q, Index d) {
  Matrix out(d, d);
  Index a = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i <= j; ++i, ++a) {
      out(i, j) = q(a);
      out(j, i) = q(a);
    }
  }
  return out;
}

Vector to_svec(const Matrix& m) {
  const Index d = m.rows();
  Vector out(sym_dim(d));
  Index a = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i <= j; ++i, ++a) out(a) = m(i, j);
  }
  return out;
}

// g_a += scale * tr(Gm B_a) for the symmetric basis B_a.
void add_sym_read(const Matrix& gm, double scale, Vector& g) {
  const Index d = gm.rows();
  Index a = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i <= j; ++i, ++a) {
      g(a) += scale * (i == j ? gm(i, i) : 2.0 * gm(i, j));
    }
  }
}

void add_sym_read_col(const Matrix& y, double scale, Matrix& hess, Index col) {
  const Index d = y.rows();
  Index a = 0;
  for (Index l = 0; l < d; ++l) {
    for (Index k = 0; k <= l; ++k, ++a) {
      hess(a, col) += scale * (k == l ? y(k, k) : 2.0 * y(k, l));
    }
  }
}

// Same read for the symmetrised matrix T + T^T without forming it.
void add_sym_read_col_sym2(const Matrix& t, double scale, Matrix& hess,
                           Index col) {
  const Index d = t.rows();
  Index a = 0;
  for (Index l = 0; l < d; ++l) {
    for (Index k = 0; k <= l; ++k, ++a) {
      hess(a, col) +=
          scale * (k == l ? 2.0 * t(k, k) : 2.0 * (t(k, l) + t(l, k)));
    }
  }
}

// One logdet block: S = C0 + [s I] - (M^T Q + Q M).
// `iso` flags M = iso * I, which collapses most of the Hessian algebra.
struct Block {
  Matrix m;
  Matrix c0;
  bool couples_s = false;
  double iso = std::numeric_limits<double>::quiet_NaN();
};

struct Eval {
  bool feasible = false;
  double psi = 0.0;
  double obj = 0.0;
  Vector grad;
  Matrix hess;
};

double max_eig_sym(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eig_sym(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

class BarrierProblem {
 public:
  Index d = 0;
  Index m = 0;   // sym_dim(d)
  Index nv = 0;  // m (+1 in phase 1)
  bool phase1 = false;
  std::vector<Block> blocks;
  std::vector<LinearConstraint> lin;
  RowVector w;  // objective vector (phase 2 minimize), may be empty
  double nu = 0.0;

  // `obj_ref` recenters the t-weighted objective so psi keeps full
  // precision in line-search comparisons when t is large.
  Eval evaluate(const Vector& z, double t, bool want_derivs,
                double obj_ref = 0.0) const {
    Eval e;
    e.psi = 0.0;
    if (want_derivs) {
      e.grad = Vector::Zero(nv);
      e.hess = Matrix::Zero(nv, nv);
    }
    const Matrix q = from_svec(z.head(m), d);
    const double s = phase1 ? z(nv - 1) : 0.0;

    Matrix work_t(d, d), work_y(d, d);

    for (const Block& blk : blocks) {
      Matrix smat = blk.c0 - (blk.m.transpose() * q + q * blk.m);
      if (blk.couples_s) smat.diagonal().array() += s;
      Eigen::LLT<Matrix> llt(smat);
      if (llt.info() != Eigen::Success) return e;
      double logdet = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double lkk = llt.matrixLLT()(k, k);
        if (!(lkk > 0.0)) return e;
        logdet += std::log(lkk);
      }
      e.psi += -2.0 * logdet;
      if (!want_derivs) continue;

      const Matrix g = llt.solve(Matrix::Identity(d, d));
      if (std::isfinite(blk.iso)) {
        const double c = blk.iso;
        add_sym_read(g, 2.0 * c, e.grad);
        const double c2 = 4.0 * c * c;
        Index a = 0;
        for (Index j = 0; j < d; ++j) {
          for (Index i = 0; i <= j; ++i, ++a) {
            work_t.noalias() = g.col(i) * g.col(j).transpose();
            if (i == j) {
              add_sym_read_col(work_t, c2, e.hess, a);
            } else {
              add_sym_read_col_sym2(work_t, c2, e.hess, a);
            }
          }
        }
        continue;
      }
      {
        Matrix gm = g * blk.m.transpose();
        gm += gm.transpose().eval();  // G M^T + M G
        add_sym_read(gm, 1.0, e.grad);
      }
      if (blk.couples_s) e.grad(nv - 1) += -g.trace();

      const Matrix gmt = g * blk.m.transpose();
      const Matrix mg = gmt.transpose();
      const Matrix mgmt = blk.m * gmt;
      Index a = 0;
      for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i <= j; ++i, ++a) {
          work_t.noalias() = gmt.col(i) * mg.col(j).transpose();
          work_t.noalias() += g.col(i) * mgmt.col(j).transpose();
          if (i != j) {
            work_t.noalias() += gmt.col(j) * mg.col(i).transpose();
            work_t.noalias() += g.col(j) * mgmt.col(i).transpose();
          }
          add_sym_read_col_sym2(work_t, 1.0, e.hess, a);
          if (blk.couples_s) {
            const double trw =
                i == j ? 2.0 * gmt.col(i).dot(g.col(i))
                       : 2.0 * (gmt.col(i).dot(g.col(j)) +
                                gmt.col(j).dot(g.col(i)));
            e.hess(nv - 1, a) += -trw;
            e.hess(a, nv - 1) += -trw;
          }
        }
      }
      if (blk.couples_s) e.hess(nv - 1, nv - 1) += g.squaredNorm();
    }

    for (const LinearConstraint& lc : lin) {
      const double val = lc.v.dot(q * lc.v);
      const double r = lc.bound - val;
      if (!(r > 0.0)) return e;
      e.psi += -std::log(r);
      if (!want_derivs) continue;
      const Matrix vvt = lc.v * lc.v.transpose();
      add_sym_read(vvt, 1.0 / r, e.grad);
      Vector hvec = Vector::Zero(nv);
      add_sym_read(vvt, 1.0, hvec);
      e.hess.noalias() += (hvec * hvec.transpose()) / (r * r);
    }

    // objective term
    if (phase1) {
      e.obj = s;
      e.psi += t * (s - obj_ref);
      if (want_derivs) e.grad(nv - 1) += t;
    } else if (w.size() > 0) {
      Eigen::LLT<Matrix> qllt(q);
      if (qllt.info() != Eigen::Success) return e;
      const Vector u = qllt.solve(w.transpose());
      e.obj = w.dot(u);
      e.psi += t * (e.obj - obj_ref);
      if (want_derivs) {
        add_sym_read(Matrix(-(u * u.transpose())), t, e.grad);
        const Matrix qi = qllt.solve(Matrix::Identity(d, d));
        Vector va(d);
        Index a = 0;
        for (Index j = 0; j < d; ++j) {
          for (Index i = 0; i <= j; ++i, ++a) {
            if (i == j) {
              va = qi.col(i) * u(i);
            } else {
              va = qi.col(i) * u(j) + qi.col(j) * u(i);
            }
            work_y.noalias() = va * u.transpose();
            work_y.noalias() += u * va.transpose();
            add_sym_read_col(work_y, t, e.hess, a);
          }
        }
      }
    }
    e.feasible = true;
    return e;
  }
};

struct PathResult {
  bool ok = false;          // converged (phase 2) or feasible point (phase 1)
  bool infeasible = false;  // phase 1: certified s* above target
  bool failed = false;      // numerical failure
  Vector z;
  double gap = 0.0;
  double t_end = 0.0;
  int steps = 0;
  std::string message;
};

// Follows the central path of  min t*obj + barrier  for growing t.
// Phase 1 exits as soon as the slack variable drops below `s_target`, or
// once the centering lower bound certifies s* > s_target.
// In slack mode (`use_s_target`) `s_exit` is the margin we would like the
// slack to reach and `s_cert` the margin that decides feasibility; pushing
// past the strict target gives later stages a well-interior starting point.
PathResult follow_path(const BarrierProblem& bp, Vector z0, double t0,
                       double mu, int max_steps, double gap_tol,
                       bool use_s_target, double s_exit, double s_cert,
                       double t_max) {
  PathResult res;
  res.z = std::move(z0);
  double t = t0;
  double obj_ref = 0.0;

  for (int stage = 0; stage < 200; ++stage) {
    res.t_end = t;
    // centering at fixed t; while the gap is far from the stopping target
    // a loose Newton decrement is enough, the tight criterion only matters
    // for the certified claims made below
    obj_ref = bp.evaluate(res.z, t, false).obj;
    bool tight = false;
    const bool loose_ok =
        use_s_target
            ? bp.nu / t > std::max(1e-6, 0.1 * (obj_ref - s_exit))
            : bp.nu / t > 1e3 * gap_tol * std::max(1.0, std::abs(obj_ref));
    int crumb_steps = 0;
    for (int it = 0; it < 400; ++it) {
      Eval e = bp.evaluate(res.z, t, true, obj_ref);
      if (!e.feasible) {
        res.failed = true;
        res.message = "iterate left the domain";
        return res;
      }
      if (use_s_target && res.z(bp.nv - 1) <= s_exit) {
        res.ok = true;
        return res;
      }

      Vector delta;
      int ridge_tries = 0;
      {
        // Jacobi-scaled Newton system; the barrier curvature spans many
        // orders of magnitude and raw LLT pivots can go nonpositive
        const Vector dscale =
            e.hess.diagonal().array().abs().max(1e-300).rsqrt();
        Matrix h = dscale.asDiagonal() * e.hess * dscale.asDiagonal();
        const Vector gs = dscale.asDiagonal() * e.grad;
        double ridge = 0.0;
        for (int attempt = 0;; ++attempt) {
          Eigen::LLT<Matrix> hllt(h);
          if (hllt.info() == Eigen::Success) {
            delta = dscale.asDiagonal() * hllt.solve(-gs);
            break;
          }
          if (attempt >= 6) {
            res.failed = true;
            res.message = "Newton system not positive definite";
            return res;
          }
          ridge = ridge == 0.0 ? 1e-14 : ridge * 1e2;
          ++ridge_tries;
          h = dscale.asDiagonal() * e.hess * dscale.asDiagonal();
          h.diagonal().array() += ridge;
        }
      }
      const double slope = e.grad.dot(delta);  // = -lambda^2
      const double lambda2 = -slope;
      double theta = 1.0;
      bool accepted = false;
      double psi_after = e.psi;
      for (int ls = 0; ls < 60; ++ls) {
        Eval trial = bp.evaluate(res.z + theta * delta, t, false, obj_ref);
        if (trial.feasible && trial.psi <= e.psi + 0.25 * theta * slope) {
          res.z += theta * delta;
          accepted = true;
          psi_after = trial.psi;
          break;
        }
        theta *= 0.5;
      }
      if (std::getenv("LYAPBOUND_DEBUG")) {
        std::fprintf(
            stderr,
            "stage=%d it=%d t=%.3e psi=%.6e obj=%.6e lam2=%.3e r=%d th=%.3g\n",
            stage, it, t, e.psi, e.obj, lambda2, ridge_tries, theta);
      }
      ++res.steps;
      if (res.steps >= max_steps) {
        res.failed = true;
        res.message = "Newton step limit reached";
        return res;
      }
      // a small Newton decrement is centered enough; rounding noise in the
      // Newton system keeps lambda^2 from reaching zero exactly
      const double psi_scale = std::max(1.0, std::abs(e.psi));
      if (!accepted) {
        // no measurable descent along a Newton direction of a positive
        // definite model: precision is exhausted at this t
        tight = true;
        break;
      }
      // an accepted step with no measurable decrease means the centering
      // problem is solved to the precision available at this t
      if (lambda2 * 0.5 <= 1e-9 * psi_scale ||
          e.psi - psi_after <= 1e-12 * psi_scale) {
        tight = true;
        break;
      }
      // psi can keep "improving" by t * (machine noise in the objective)
      // while the line search only accepts vanishing fractions of the
      // Newton step; that is precision exhaustion too
      crumb_steps = theta < 1e-10 ? crumb_steps + 1 : 0;
      if (crumb_steps >= 3) {
        tight = true;
        break;
      }
      if (loose_ok && lambda2 <= 1e-2) break;
    }

    // centered at parameter t: optimality gap at most nu / t
    Eval e = bp.evaluate(res.z, t, false);
    res.gap = bp.nu / t;
    if (use_s_target) {
      const double s_now = res.z(bp.nv - 1);
      if (e.feasible && s_now <= s_exit) {
        res.ok = true;
        return res;
      }
      if (tight && e.feasible) {
        if (e.obj - res.gap > s_cert) {
          res.infeasible = true;
          res.message = "slack lower bound above feasibility target";
          return res;
        }
        // the ambitious margin is out of reach; settle for what we have
        if (e.obj - res.gap > s_exit && s_now <= s_cert) {
          res.ok = true;
          return res;
        }
      }
    } else if (tight &&
               res.gap <= gap_tol * std::max(1.0, std::abs(e.obj))) {
      res.ok = true;
      return res;
    }
    if (t >= t_max) {
      if (use_s_target) {
        if (e.feasible && res.z(bp.nv - 1) <= s_cert) {
          res.ok = true;
        } else {
          res.infeasible = true;
          res.message = "marginal: slack did not reach the strict target";
        }
      } else {
        res.ok = true;  // best achievable gap
      }
      return res;
    }
    t *= mu;
  }
  res.failed = true;
  res.message = "stage limit reached";
  return res;
}

int newton_cap_from_env(int fallback) {
  if (const char* env = std::getenv("LYAPBOUND_SOLVER_MAX_ITERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return fallback;
}

// residual bookkeeping, independent of the iteration history
void finalize_solution(const SdpProblem& problem, SdpSolution& sol) {
  const Index d = problem.dim;
  sol.q = Matrix(0.5 * (sol.q + sol.q.transpose()));
  sol.report.min_eig_q = min_eig_sym(sol.q);
  double max_res = -1e300;
  for (const Matrix& vm : problem.psd_constraints) {
    max_res = std::max(
        max_res, max_eig_sym(vm.transpose() * sol.q + sol.q * vm));
  }
  sol.report.max_vertex_residual = problem.psd_constraints.empty() ? 0.0
                                                                   : max_res;
  if (problem.schur_objective_vector.size() == d) {
    Eigen::LLT<Matrix> qllt(sol.q);
    if (qllt.info() == Eigen::Success) {
      sol.objective_value = problem.schur_objective_vector.dot(
          qllt.solve(problem.schur_objective_vector.transpose()));
    }
  }
}

}  // namespace

void SdpProblem::validate() const {
  if (dim <= 0) throw DimensionError("SdpProblem: dim must be positive");
  for (const Matrix& m : psd_constraints) {
    if (m.rows() != dim || m.cols() != dim) {
      throw DimensionError("SdpProblem: vertex matrix shape mismatch");
    }
  }
  for (const LinearConstraint& lc : linear_constraints) {
    if (lc.v.size() != dim) {
      throw DimensionError("SdpProblem: linear constraint length mismatch");
    }
    if (!(lc.bound > 0.0)) {
      throw DimensionError("SdpProblem: linear constraint bound must be > 0");
    }
  }
  if (objective == SdpObjective::MinimizeQuadratic) {
    if (schur_objective_vector.size() != dim) {
      throw DimensionError("SdpProblem: objective vector length mismatch");
    }
    if (linear_constraints.empty()) {
      throw DimensionError(
          "SdpProblem: objective requires a normalizing linear constraint");
    }
  }
  if (eps_stab < 0.0 || eps_pd < 0.0) {
    throw DimensionError("SdpProblem: margins must be nonnegative");
  }
}

namespace {

SdpSolution solve_dense(const SdpProblem& problem, const SolveOptions& opts) {
  problem.validate();
  const Index d = problem.dim;
  const Index m = sym_dim(d);
  const int step_cap = newton_cap_from_env(opts.max_newton_steps);

  SdpSolution sol;
  sol.report.status = SolveStatus::NumericalFailure;

  double vertex_scale = 1.0;
  for (const Matrix& vm : problem.psd_constraints) {
    vertex_scale = std::max(vertex_scale, vm.norm());
  }
  const double eps_lo = 1e-8;
  const double s_cert = -problem.eps_stab - 1e-7 * vertex_scale;
  // a deep margin makes the phase-2 start well-interior
  const double s_exit =
      problem.objective == SdpObjective::MinimizeQuadratic
          ? std::min(s_cert, -problem.eps_stab - 1e-3 * vertex_scale)
          : s_cert;

  // ---- Phase 1: minimize s subject to M^T Q + Q M <= s I, eps I <= Q <= I.
  Matrix q_feas;
  int steps_used = 0;
  if (problem.psd_constraints.empty()) {
    q_feas = Matrix::Identity(d, d) * 0.5;
  } else {
    BarrierProblem p1;
    p1.d = d;
    p1.m = m;
    p1.nv = m + 1;
    p1.phase1 = true;
    for (const Matrix& vm : problem.psd_constraints) {
      p1.blocks.push_back(Block{vm, Matrix::Zero(d, d), true});
    }
    p1.blocks.push_back(Block{Matrix::Identity(d, d) * -0.5,
                              Matrix::Identity(d, d) * -eps_lo, false, -0.5});
    p1.blocks.push_back(Block{Matrix::Identity(d, d) * 0.5,
                              Matrix::Identity(d, d), false, 0.5});
    p1.nu = static_cast<double>(p1.blocks.size()) * static_cast<double>(d);

    Matrix q0 = Matrix::Identity(d, d) * 0.5;
    bool shortcut = false;
    if (opts.warm_start != nullptr && opts.warm_start->rows() == d) {
      Matrix ws = 0.5 * (*opts.warm_start + opts.warm_start->transpose());
      const double lmax = std::max(max_eig_sym(ws), 1e-300);
      ws *= 0.9 / lmax;
      if (min_eig_sym(ws) > eps_lo) {
        double ws_smax = -1e300;
        for (const Matrix& vm : problem.psd_constraints) {
          ws_smax = std::max(ws_smax,
                             max_eig_sym(vm.transpose() * ws + ws * vm));
        }
        if (ws_smax <= s_exit) {
          q_feas = ws;  // warm start already strictly feasible
          shortcut = true;
        }
      }
      q0 = ws;
      q0.diagonal().array() += 0.05;
    }
    if (!shortcut) {
      double smax = -1e300;
      for (const Matrix& vm : problem.psd_constraints) {
        smax = std::max(smax,
                        max_eig_sym(vm.transpose() * q0 + q0 * vm));
      }
      Vector z0(m + 1);
      z0.head(m) = to_svec(q0);
      z0(m) = smax + 0.05 * vertex_scale;

      const double t_max = 10.0 * p1.nu / (1e-9 * vertex_scale);
      PathResult r1 =
          follow_path(p1, z0, 1.0 / vertex_scale, opts.mu_factor, step_cap,
                      opts.gap_tol, true, s_exit, s_cert, t_max);
      steps_used += r1.steps;
      sol.report.iterations = steps_used;
      if (r1.infeasible) {
        sol.report.status = SolveStatus::Infeasible;
        sol.report.message = r1.message;
        sol.report.gap = r1.gap;
        // last iterate, useful as a warm start for nearby problems
        sol.q = from_svec(r1.z.head(m), d);
        return sol;
      }
      if (!r1.ok) {
        sol.report.message = r1.message;
        return sol;
      }
      q_feas = from_svec(r1.z.head(m), d);
    }
  }

  const double trace_scale = q_feas.trace() / static_cast<double>(d);
  double eps_pd = problem.eps_pd;

  if (problem.objective == SdpObjective::Feasibility) {
    // rescale so every linear constraint holds
    double gamma = 1.0;
    for (const LinearConstraint& lc : problem.linear_constraints) {
      const double val = lc.v.dot(q_feas * lc.v);
      if (val > 0.0) gamma = std::min(gamma, 0.9 * lc.bound / val);
    }
    q_feas *= gamma;
    if (eps_pd == 0.0) eps_pd = 1e-12 * gamma * trace_scale;
    sol.q = q_feas;
    sol.eps_pd = eps_pd;
    sol.report.status = SolveStatus::Feasible;
    sol.report.gap = 0.0;
  } else {
    double gamma = 1.0;
    for (const LinearConstraint& lc : problem.linear_constraints) {
      const double val = lc.v.dot(q_feas * lc.v);
      if (val > 0.0) gamma = std::min(gamma, 0.5 * lc.bound / val);
    }
    Matrix q0 = gamma * q_feas;
    const double lmin0 = min_eig_sym(q0);
    if (eps_pd == 0.0 || eps_pd >= lmin0) {
      eps_pd = std::min(eps_pd > 0.0 ? eps_pd : 1e-12 * q0.trace() / d,
                        0.5 * lmin0);
    }

    BarrierProblem p2;
    p2.d = d;
    p2.m = m;
    p2.nv = m;
    p2.phase1 = false;
    for (const Matrix& vm : problem.psd_constraints) {
      p2.blocks.push_back(
          Block{vm, Matrix::Identity(d, d) * -problem.eps_stab, false});
    }
    p2.blocks.push_back(Block{Matrix::Identity(d, d) * -0.5,
                              Matrix::Identity(d, d) * -eps_pd, false, -0.5});
    // cap block keeps the barrier bounded below when the normalizing
    // constraint leaves a recession direction; a tight cap conditions the
    // Newton system, so start small and widen only when the solution
    // presses against it
    double rho = 1e2 * std::max(1.0, max_eig_sym(q0));
    p2.blocks.push_back(Block{Matrix::Identity(d, d) * 0.5,
                              Matrix::Identity(d, d) * rho, false, 0.5});
    p2.lin = problem.linear_constraints;
    p2.w = problem.schur_objective_vector;
    p2.nu = static_cast<double>(p2.blocks.size()) * static_cast<double>(d) +
            static_cast<double>(p2.lin.size());

    PathResult r2;
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int round = 0;; ++round) {
      p2.blocks.back().c0 = Matrix::Identity(d, d) * rho;
      Eval e0 = p2.evaluate(to_svec(q0), 1.0, false);
      if (!e0.feasible) {
        sol.report.message = "phase-2 start infeasible";
        return sol;
      }
      const double t0 = 1.0 / std::max(1.0, std::abs(e0.obj));
      // past t ~ nu * 1e12 the centering residual is below double noise;
      // stop there with the best achievable gap instead of spinning
      r2 = follow_path(p2, to_svec(q0), t0, opts.mu_factor,
                       step_cap - steps_used, opts.gap_tol, false, 0.0, 0.0,
                       p2.nu * 1e13);
      steps_used += r2.steps;
      sol.report.iterations = steps_used;
      if (!r2.ok) {
        sol.report.message = r2.message;
        return sol;
      }
      const Matrix qr = from_svec(r2.z, d);
      // widening only helps while it buys objective: flat recession
      // directions park the analytic center at the cap at any rho
      const double obj_now = p2.evaluate(r2.z, 1.0, false).obj;
      if (round >= 4 || max_eig_sym(qr) < 0.25 * rho ||
          obj_now >= prev_obj - 1e-9 * std::max(1.0, std::abs(prev_obj))) {
        break;
      }
      prev_obj = obj_now;
      rho *= 1e3;
      q0 = qr;
    }
    sol.q = from_svec(r2.z, d);
    sol.eps_pd = eps_pd;
    sol.report.status = SolveStatus::Optimal;
    sol.report.gap = r2.gap;
  }

  finalize_solution(problem, sol);
  return sol;
}

// ---- Symmetry reduction over tensor-factor permutations.
//
// On (R^n)^{tensor i} the hierarchy matrices, being sums of I (x) ... A ... (x) I,
// commute with every permutation of the tensor factors, and the lifted b/c
// vectors (powers of a single vector) are permutation invariant. Splitting Q
// over invariant subspaces is then lossless: zeroing the off-diagonal blocks
// of any feasible Q (a pinching) preserves the Lyapunov constraints, keeps
// v^T Q v and never increases w Q^{-1} w^T. The subspaces are recovered
// numerically from a generic central element of the permutation action (a
// weighted sum of the 2-cycle and 3-cycle class sums, which acts as a scalar
// on every isotypic component); eigenvalue clusters are merged until every
// constraint matrix is verifiably block diagonal.

Index permuted_index(Index t, Index base, const std::vector<int>& perm) {
  const int k = static_cast<int>(perm.size());
  int digits[16];
  for (int p = k - 1; p >= 0; --p) {
    digits[p] = static_cast<int>(t % base);
    t /= base;
  }
  Index out = 0;
  for (int p = 0; p < k; ++p) out = out * base + digits[perm[p]];
  return out;
}

Matrix central_element(Index base, int level) {
  Index d = 1;
  for (int i = 0; i < level; ++i) d *= base;
  Matrix z = Matrix::Zero(d, d);
  std::vector<int> perm(level);
  const auto reset = [&] {
    for (int p = 0; p < level; ++p) perm[p] = p;
  };
  const auto add_perm = [&](double coef) {
    for (Index t = 0; t < d; ++t) z(permuted_index(t, base, perm), t) += coef;
  };
  for (int p = 0; p < level; ++p) {
    for (int q = p + 1; q < level; ++q) {
      reset();
      std::swap(perm[p], perm[q]);
      add_perm(1.0);
    }
  }
  // both orientations of each 3-cycle, so z stays symmetric
  for (int p = 0; p < level; ++p) {
    for (int q = p + 1; q < level; ++q) {
      for (int r = q + 1; r < level; ++r) {
        reset();
        perm[p] = q;
        perm[q] = r;
        perm[r] = p;
        add_perm(0.61803398875);
        reset();
        perm[p] = r;
        perm[q] = p;
        perm[r] = q;
        add_perm(0.61803398875);
      }
    }
  }
  return z;
}

struct SymmetrySplit {
  std::vector<Matrix> bases;  // orthonormal columns, one invariant subspace each
  int main_block = -1;        // carries the constraint / objective vectors
};

std::optional<SymmetrySplit> build_symmetry_split(const SdpProblem& problem) {
  const Index d = problem.dim;
  const Index base = problem.kron_base;
  const int level = problem.kron_level;
  if (base < 2 || level < 2 || level > 16) return std::nullopt;
  Index check = 1;
  for (int i = 0; i < level; ++i) {
    check *= base;
    if (check > d) return std::nullopt;
  }
  if (check != d) return std::nullopt;

  Eigen::SelfAdjointEigenSolver<Matrix> es(central_element(base, level));
  if (es.info() != Eigen::Success) return std::nullopt;
  const Vector& vals = es.eigenvalues();
  const Matrix& bmat = es.eigenvectors();

  std::vector<Index> starts{0};
  const double gap_tol = 1e-6 * (1.0 + vals(d - 1) - vals(0));
  for (Index j = 1; j < d; ++j) {
    if (vals(j) - vals(j - 1) > gap_tol) starts.push_back(j);
  }
  const int nc = static_cast<int>(starts.size());
  if (nc <= 1) return std::nullopt;
  starts.push_back(d);

  // union-find merge until every vertex matrix is block diagonal
  std::vector<int> parent(nc);
  for (int k = 0; k < nc; ++k) parent[k] = k;
  const auto find = [&](int k) {
    while (parent[k] != k) k = parent[k] = parent[parent[k]];
    return k;
  };
  for (const Matrix& vm : problem.psd_constraints) {
    const Matrix vt = bmat.transpose() * vm * bmat;
    const double tol = 1e-9 * std::max(1.0, vt.norm());
    for (int p = 0; p < nc; ++p) {
      for (int q = p + 1; q < nc; ++q) {
        const Index rp = starts[p], lp = starts[p + 1] - rp;
        const Index rq = starts[q], lq = starts[q + 1] - rq;
        if (vt.block(rp, rq, lp, lq).norm() > tol ||
            vt.block(rq, rp, lq, lp).norm() > tol) {
          parent[find(p)] = find(q);
        }
      }
    }
  }

  std::vector<int> root_block(nc, -1);
  SymmetrySplit split;
  for (int k = 0; k < nc; ++k) {
    const int r = find(k);
    if (root_block[r] < 0) {
      root_block[r] = static_cast<int>(split.bases.size());
      split.bases.emplace_back(d, 0);
    }
    Matrix& u = split.bases[root_block[r]];
    const Index len = starts[k + 1] - starts[k];
    u.conservativeResize(d, u.cols() + len);
    u.rightCols(len) = bmat.middleCols(starts[k], len);
  }
  if (split.bases.size() <= 1) return std::nullopt;

  // every program vector must live inside one (shared) invariant subspace
  const auto locate = [&](const Vector& v) {
    for (std::size_t k = 0; k < split.bases.size(); ++k) {
      if ((split.bases[k].transpose() * v).squaredNorm() >=
          (1.0 - 1e-10) * v.squaredNorm()) {
        return static_cast<int>(k);
      }
    }
    return -1;
  };
  std::vector<Vector> vecs;
  for (const LinearConstraint& lc : problem.linear_constraints) {
    vecs.push_back(lc.v);
  }
  if (problem.schur_objective_vector.size() == d) {
    vecs.push_back(problem.schur_objective_vector.transpose());
  }
  for (const Vector& v : vecs) {
    const int k = locate(v);
    if (k < 0 || (split.main_block >= 0 && k != split.main_block)) {
      return std::nullopt;
    }
    split.main_block = k;
  }
  return split;
}

SdpSolution solve_split(const SdpProblem& problem, const SolveOptions& opts,
                        const SymmetrySplit& split) {
  const Index d = problem.dim;
  const int nb = static_cast<int>(split.bases.size());
  std::vector<Matrix> qs(nb);
  const auto assemble = [&](SdpSolution& out) {
    out.q = Matrix::Zero(d, d);
    for (int k = 0; k < nb; ++k) {
      const Matrix& u = split.bases[k];
      if (qs[k].rows() == u.cols()) {
        out.q += u * qs[k] * u.transpose();
      } else {
        out.q += 0.5 * (u * u.transpose());
      }
    }
  };

  SdpSolution sol;
  sol.eps_pd = 1e300;
  int iters = 0;

  // the block carrying the vectors goes first: it decides the objective and
  // is the most likely to be infeasible
  std::vector<int> order;
  if (split.main_block >= 0) order.push_back(split.main_block);
  for (int k = 0; k < nb; ++k) {
    if (k != split.main_block) order.push_back(k);
  }

  for (const int k : order) {
    const Matrix& u = split.bases[k];
    SdpProblem sub;
    sub.dim = u.cols();
    sub.eps_stab = problem.eps_stab;
    sub.eps_pd = problem.eps_pd;
    for (const Matrix& vm : problem.psd_constraints) {
      sub.psd_constraints.push_back(u.transpose() * vm * u);
    }
    if (k == split.main_block) {
      sub.objective = problem.objective;
      for (const LinearConstraint& lc : problem.linear_constraints) {
        sub.linear_constraints.push_back(
            LinearConstraint{Vector(u.transpose() * lc.v), lc.bound});
      }
      if (problem.schur_objective_vector.size() == d) {
        sub.schur_objective_vector = problem.schur_objective_vector * u;
      }
    }
    Matrix warm;
    SolveOptions sub_opts = opts;
    sub_opts.warm_start = nullptr;
    if (opts.warm_start != nullptr && opts.warm_start->rows() == d) {
      warm = u.transpose() * (*opts.warm_start) * u;
      sub_opts.warm_start = &warm;
    }
    SdpSolution bs = solve_dense(sub, sub_opts);
    iters += bs.report.iterations;
    if (bs.q.size() > 0) qs[k] = bs.q;
    if (bs.report.status != SolveStatus::Optimal &&
        bs.report.status != SolveStatus::Feasible) {
      sol.report = bs.report;
      sol.report.iterations = iters;
      assemble(sol);  // last iterates still help as a warm start
      return sol;
    }
    sol.eps_pd = std::min(sol.eps_pd, bs.eps_pd);
    if (k == split.main_block) {
      sol.report.gap = bs.report.gap;
      sol.report.message = bs.report.message;
    }
  }

  assemble(sol);
  sol.report.status = problem.objective == SdpObjective::MinimizeQuadratic
                          ? SolveStatus::Optimal
                          : SolveStatus::Feasible;
  sol.report.iterations = iters;
  finalize_solution(problem, sol);
  return sol;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem, const SolveOptions& opts) {
  problem.validate();
  if (problem.kron_base >= 2 && problem.kron_level >= 2 && problem.dim >= 24) {
    if (const auto split = build_symmetry_split(problem)) {
      return solve_split(problem, opts, *split);
    }
  }
  return solve_dense(problem, opts);
}

}  // namespace lyapbound
