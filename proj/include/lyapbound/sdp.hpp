#pragma once

#include "lyapbound/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lyapbound {

enum class SdpObjective {
  Feasibility,       // any strictly admissible Q
  MinimizeQuadratic  // minimize w Q^{-1} w^T (epigraph of the Schur block)
};

enum class SolveStatus { Optimal, Feasible, Infeasible, NumericalFailure };

struct LinearConstraint {
  Vector v;
  double bound = 1.0;  // v^T Q v <= bound
};

// Linear SDP over a symmetric decision matrix Q:
//   minimize   w Q^{-1} w^T            (or pure feasibility)
//   subject to v^T Q v <= r            for each linear constraint
//              M^T Q + Q M <= -eps_stab I   for each vertex matrix M
//              Q >= eps_pd I
struct SdpProblem {
  Index dim = 0;
  SdpObjective objective = SdpObjective::Feasibility;
  std::vector<LinearConstraint> linear_constraints;
  std::vector<Matrix> psd_constraints;  // vertex matrices M
  double eps_stab = 0.0;
  double eps_pd = 0.0;  // 0 -> solver picks a scale-relative floor
  RowVector schur_objective_vector;  // w, used iff MinimizeQuadratic

  // Tensor structure hint: when dim == kron_base^kron_level and every
  // constraint matrix commutes with permutations of the tensor factors, the
  // solver decomposes the program over the invariant subspaces (verified
  // numerically, with a dense fallback). 0 disables.
  Index kron_base = 0;
  int kron_level = 1;

  void validate() const;
};

struct SolverReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  int iterations = 0;       // total Newton steps
  double gap = 0.0;         // final barrier duality-gap estimate
  double min_eig_q = 0.0;   // from the independent residual check
  double max_vertex_residual = 0.0;  // max eig of M^T Q + Q M over vertices
  std::string message;
};

struct SdpSolution {
  SolverReport report;
  Matrix q;                      // valid iff status is Optimal/Feasible
  double objective_value = 0.0;  // w Q^{-1} w^T at the returned Q
  double eps_pd = 0.0;           // floor actually enforced
};

struct SolveOptions {
  double gap_tol = 1e-9;       // relative duality-gap target
  double mu_factor = 25.0;     // barrier parameter growth per stage
  int max_newton_steps = 3000;  // overridden by LYAPBOUND_SOLVER_MAX_ITERS
  const Matrix* warm_start = nullptr;
};

// Log-barrier path-following solve. Residuals of the returned Q are
// re-checked by eigensolve, independent of the iteration history; a Q that
// fails the check is reported as NumericalFailure, never as success.
SdpSolution solve_sdp(const SdpProblem& problem, const SolveOptions& opts = {});

}  // namespace lyapbound
