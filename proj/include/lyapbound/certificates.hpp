#pragma once

#include "lyapbound/kron.hpp"
#include "lyapbound/sdp.hpp"
#include "lyapbound/system.hpp"
#include "lyapbound/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lyapbound {

// A solved Lyapunov certificate at hierarchy level i: P is positive definite
// and M^T P + P M is negative semidefinite for every stored vertex matrix.
struct LyapunovCertificate {
  int level = 1;
  Matrix p_mat;
  double alpha = 0.0;
  std::vector<Matrix> vertices;  // lifted vertex matrices certified by P
  double objective_value = 0.0;  // minimized w P^{-1} w^T when applicable
  SolverReport solver_report;
};

struct CertificateResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::optional<LyapunovCertificate> certificate;
  SolverReport report;
};

// minimize c_lift Q^{-1} c_lift^T  s.t.  b_lift^T Q b_lift <= 1 and one
// Lyapunov NSD constraint per vertex level. Identical vertex matrices are
// collapsed to a single constraint.
SdpProblem build_impulse_program(const std::vector<HierarchyLevel>& levels,
                                 const Vector& b_lift,
                                 const RowVector& c_lift);

// Same as the impulse program with the linear constraint replaced by
// (a_inv_lift b_lift)^T Q (a_inv_lift b_lift) <= 1.
SdpProblem build_step_program(const HierarchyLevel& level,
                              const Matrix& a_inv_lift, const Vector& b_lift,
                              const RowVector& c_lift);

// (A + Delta + alpha I, A - Delta + alpha I)
std::pair<Matrix, Matrix> shift_vertices(const UncertainSystem& sys,
                                         double alpha);

// Augmented 2n-state data whose impulse response is h(t) - c e^{At} b.
struct DifferenceData {
  int level = 1;
  Matrix a_plus;    // blockdiag(A + Delta, A)
  Matrix a_minus;   // blockdiag(A - Delta, A)
  Vector b_bar;     // i-fold lift of [b; b]
  RowVector c_bar;  // i-fold lift of [c, -c]
};

DifferenceData build_difference_vertices(const UncertainSystem& sys, int level,
                                         std::int64_t dim_cap = kDefaultDimCap);

CertificateResult solve(const SdpProblem& problem, int level,
                        double alpha = 0.0, const SolveOptions& opts = {});

// Eigenvalue-based residual check, independent of the solver path.
// Returns an error description, or empty when every invariant holds.
std::string validate_certificate(const LyapunovCertificate& cert,
                                 double eps_pd);

struct AlphaSearch {
  std::optional<double> lo;  // defaults derived from the spectral abscissa
  std::optional<double> hi;
  double tol = 1e-3;
  int max_iters = 60;
};

struct AlphaResult {
  double alpha_star = 0.0;
  LyapunovCertificate certificate;  // solved at alpha_star - tol
};

// Bisects feasibility of the (optionally difference-system) vertex program
// over the shift alpha; feasibility is assumed monotone (larger alpha harder).
AlphaResult max_alpha(const UncertainSystem& sys, int level, bool difference,
                      const AlphaSearch& search = {},
                      const SolveOptions& opts = {});

std::string certificate_to_json(const LyapunovCertificate& cert);

}  // namespace lyapbound
