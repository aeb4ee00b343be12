#include "lyapbound/certificates.hpp"

#include "json.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lyapbound {

using json = nlohmann::ordered_json;

namespace {

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

double spectral_abscissa(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

std::vector<Matrix> lifted_vertices(const UncertainSystem& sys, int level,
                                    double alpha, bool difference) {
  std::vector<Matrix> out;
  if (difference) {
    DifferenceData data = build_difference_vertices(sys, level);
    const Index dn = sys.order() * 2;
    const Matrix shift = alpha * Matrix::Identity(dn, dn);
    out.push_back(hierarchy_matrix(data.a_plus + shift, level));
    if (!same_matrix(data.a_plus, data.a_minus)) {
      out.push_back(hierarchy_matrix(data.a_minus + shift, level));
    }
  } else {
    auto [vp, vm] = shift_vertices(sys, alpha);
    out.push_back(hierarchy_matrix(vp, level));
    if (!same_matrix(vp, vm)) out.push_back(hierarchy_matrix(vm, level));
  }
  return out;
}

// exact integer root, or 0 when dim is not a clean tensor power
Index tensor_base(Index dim, int level) {
  if (level < 2) return 0;
  const Index guess =
      std::llround(std::pow(static_cast<double>(dim), 1.0 / level));
  for (Index cand = std::max<Index>(2, guess - 1); cand <= guess + 1; ++cand) {
    Index p = 1;
    for (int i = 0; i < level && p <= dim; ++i) p *= cand;
    if (p == dim) return cand;
  }
  return 0;
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index s = 0; s < m.cols(); ++s) row.push_back(m(r, s));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

SdpProblem build_impulse_program(const std::vector<HierarchyLevel>& levels,
                                 const Vector& b_lift,
                                 const RowVector& c_lift) {
  if (levels.empty()) throw DimensionError("impulse program needs a vertex");
  const Index dim = levels.front().dim;
  SdpProblem p;
  p.dim = dim;
  p.objective = SdpObjective::MinimizeQuadratic;
  for (const HierarchyLevel& lvl : levels) {
    if (lvl.dim != dim) {
      throw DimensionError("impulse program: vertex levels disagree on dim");
    }
    bool duplicate = false;
    for (const Matrix& seen : p.psd_constraints) {
      if (same_matrix(seen, lvl.a_mat)) duplicate = true;
    }
    if (!duplicate) p.psd_constraints.push_back(lvl.a_mat);
  }
  if (b_lift.size() != dim || c_lift.size() != dim) {
    throw DimensionError("impulse program: lifted b/c length mismatch");
  }
  p.linear_constraints.push_back(LinearConstraint{b_lift, 1.0});
  p.schur_objective_vector = c_lift;
  p.kron_level = levels.front().level;
  p.kron_base = tensor_base(dim, p.kron_level);
  return p;
}

SdpProblem build_step_program(const HierarchyLevel& level,
                              const Matrix& a_inv_lift, const Vector& b_lift,
                              const RowVector& c_lift) {
  if (a_inv_lift.rows() != level.dim || a_inv_lift.cols() != level.dim) {
    throw DimensionError("step program: lifted A^{-1} shape mismatch");
  }
  SdpProblem p = build_impulse_program({level}, b_lift, c_lift);
  p.linear_constraints.clear();
  p.linear_constraints.push_back(
      LinearConstraint{Vector(a_inv_lift * b_lift), 1.0});
  return p;
}

std::pair<Matrix, Matrix> shift_vertices(const UncertainSystem& sys,
                                         double alpha) {
  sys.validate();
  const Matrix shift = alpha * Matrix::Identity(sys.order(), sys.order());
  return {sys.a + sys.delta + shift, sys.a - sys.delta + shift};
}

DifferenceData build_difference_vertices(const UncertainSystem& sys, int level,
                                         std::int64_t dim_cap) {
  sys.validate();
  const Index n = sys.order();
  DifferenceData data;
  data.level = level;
  data.a_plus = Matrix::Zero(2 * n, 2 * n);
  data.a_plus.topLeftCorner(n, n) = sys.a + sys.delta;
  data.a_plus.bottomRightCorner(n, n) = sys.a;
  data.a_minus = Matrix::Zero(2 * n, 2 * n);
  data.a_minus.topLeftCorner(n, n) = sys.a - sys.delta;
  data.a_minus.bottomRightCorner(n, n) = sys.a;

  Vector b_stack(2 * n);
  b_stack << sys.b, sys.b;
  RowVector c_stack(2 * n);
  c_stack << sys.c, -sys.c;
  data.b_bar = lift_vector(b_stack, level, dim_cap);
  data.c_bar = RowVector{kron_power(c_stack, level, dim_cap)};
  return data;
}

CertificateResult solve(const SdpProblem& problem, int level, double alpha,
                        const SolveOptions& opts) {
  CertificateResult result;
  SdpSolution sol = solve_sdp(problem, opts);
  result.status = sol.report.status;
  result.report = sol.report;
  if (sol.report.status != SolveStatus::Optimal &&
      sol.report.status != SolveStatus::Feasible) {
    return result;
  }

  LyapunovCertificate cert;
  cert.level = level;
  cert.alpha = alpha;
  cert.p_mat = sol.q;
  cert.vertices = problem.psd_constraints;
  cert.objective_value = sol.objective_value;
  cert.solver_report = sol.report;

  const std::string problem_found = validate_certificate(cert, sol.eps_pd);
  if (!problem_found.empty()) {
    result.status = SolveStatus::NumericalFailure;
    result.report.status = SolveStatus::NumericalFailure;
    result.report.message = "residual validation failed: " + problem_found;
    return result;
  }
  result.certificate = std::move(cert);
  return result;
}

std::string validate_certificate(const LyapunovCertificate& cert,
                                 double eps_pd) {
  const Matrix& p = cert.p_mat;
  if (p.rows() != p.cols()) return "P is not square";
  const double asym = (p - p.transpose()).norm();
  if (asym > 1e-9 * std::max(1.0, p.norm())) return "P is not symmetric";
  Eigen::SelfAdjointEigenSolver<Matrix> es(p, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < eps_pd * (1.0 - 1e-9) || lmin <= 0.0) {
    return "P is below the positive-definiteness floor";
  }
  for (const Matrix& vm : cert.vertices) {
    const Matrix lyap = vm.transpose() * p + p * vm;
    Eigen::SelfAdjointEigenSolver<Matrix> esl(lyap, Eigen::EigenvaluesOnly);
    const double lmax = esl.eigenvalues().maxCoeff();
    const double tol = 1e-7 * p.norm() * vm.norm();
    if (lmax > tol) {
      std::ostringstream msg;
      msg << "vertex Lyapunov residual " << lmax << " above tolerance " << tol;
      return msg.str();
    }
  }
  return {};
}

AlphaResult max_alpha(const UncertainSystem& sys, int level, bool difference,
                      const AlphaSearch& search, const SolveOptions& opts) {
  sys.validate();
  const double abscissa = std::abs(spectral_abscissa(sys.a));
  const double span = std::max(2.0 * abscissa, 1e-3);
  double lo = search.lo.value_or(-span);
  double hi = search.hi.value_or(span);
  if (!(hi > lo) || !(search.tol > 0.0)) {
    throw DimensionError("max_alpha: invalid search interval or tolerance");
  }

  Matrix warm;
  SolveOptions feas_opts = opts;
  auto feasible_at = [&](double alpha) {
    std::vector<Matrix> vertices = lifted_vertices(sys, level, alpha,
                                                   difference);
    SdpProblem p;
    p.dim = vertices.front().rows();
    p.objective = SdpObjective::Feasibility;
    p.psd_constraints = std::move(vertices);
    p.kron_level = level;
    p.kron_base = tensor_base(p.dim, level);
    feas_opts.warm_start = warm.size() > 0 ? &warm : nullptr;
    SdpSolution sol = solve_sdp(p, feas_opts);
    if (sol.report.status == SolveStatus::Feasible) {
      warm = sol.q;
      return true;
    }
    if (sol.report.status == SolveStatus::Infeasible) {
      // the last interior iterate still shortens nearby solves
      if (sol.q.size() > 0) warm = sol.q;
      return false;
    }
    throw Error("max_alpha: solver failure at alpha=" + std::to_string(alpha) +
                ": " + sol.report.message);
  };

  if (!feasible_at(lo)) {
    throw NoFeasibleAlpha("program infeasible at the interval lower end " +
                          std::to_string(lo));
  }
  if (feasible_at(hi)) {
    lo = hi;  // frontier beyond the search interval
  }
  int iters = 0;
  while (hi - lo > search.tol && iters++ < search.max_iters) {
    const double mid = 0.5 * (lo + hi);
    if (feasible_at(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  AlphaResult out;
  out.alpha_star = lo;

  // certificate with a tol margin from the frontier
  const double alpha_cert = lo - search.tol;
  std::vector<HierarchyLevel> levels;
  Vector b_lift;
  RowVector c_lift;
  if (difference) {
    DifferenceData data = build_difference_vertices(sys, level);
    const Index dn = 2 * sys.order();
    const Matrix shift = alpha_cert * Matrix::Identity(dn, dn);
    Vector b_stack(dn);
    b_stack << sys.b, sys.b;
    RowVector c_stack(dn);
    c_stack << sys.c, -sys.c;
    levels.push_back(build_level(data.a_plus + shift, b_stack, c_stack, level));
    levels.push_back(
        build_level(data.a_minus + shift, b_stack, c_stack, level));
    b_lift = data.b_bar;
    c_lift = data.c_bar;
  } else {
    auto [vp, vm] = shift_vertices(sys, alpha_cert);
    levels.push_back(build_level(vp, sys.b, sys.c, level));
    levels.push_back(build_level(vm, sys.b, sys.c, level));
    b_lift = levels.front().b_vec;
    c_lift = levels.front().c_vec;
  }
  CertificateResult cr =
      solve(build_impulse_program(levels, b_lift, c_lift), level, alpha_cert,
            opts);
  if (!cr.certificate.has_value()) {
    throw Error("max_alpha: certificate solve failed at alpha=" +
                std::to_string(alpha_cert) + ": " + cr.report.message);
  }
  out.certificate = std::move(*cr.certificate);
  return out;
}

std::string certificate_to_json(const LyapunovCertificate& cert) {
  json j;
  j["level"] = cert.level;
  j["alpha"] = cert.alpha;
  json verts = json::array();
  for (const Matrix& vm : cert.vertices) verts.push_back(matrix_rows(vm));
  j["vertices"] = verts;
  json p_row_major = json::array();
  for (Index r = 0; r < cert.p_mat.rows(); ++r) {
    for (Index s = 0; s < cert.p_mat.cols(); ++s) {
      p_row_major.push_back(cert.p_mat(r, s));
    }
  }
  j["P"] = p_row_major;
  j["objective_value"] = cert.objective_value;
  j["residuals"] = {
      {"min_eig_P", cert.solver_report.min_eig_q},
      {"max_vertex_residual", cert.solver_report.max_vertex_residual},
  };
  j["solver"] = {
      {"status", cert.solver_report.status == SolveStatus::Optimal
                     ? "optimal"
                     : "feasible"},
      {"iterations", cert.solver_report.iterations},
  };
  return j.dump(2) + "\n";
}

}  // namespace lyapbound
