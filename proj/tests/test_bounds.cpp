#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lyapbound/bounds.hpp"

#include <cmath>

using namespace lyapbound;

namespace {

LtiSystem osc_system() {
  LtiSystem sys;
  sys.a.resize(2, 2);
  sys.a << 0.0, 1.0, -1.0, -0.9;
  sys.b.resize(2);
  sys.b << 1.0, 1.0;
  sys.c.resize(2);
  sys.c << std::sqrt(2.0), -std::sqrt(2.0);
  return sys;
}

LtiSystem stiff_system(double m) {
  LtiSystem sys;
  sys.a = Matrix::Zero(2, 2);
  sys.a(0, 0) = -1.0;
  sys.a(1, 1) = -m;
  sys.b.resize(2);
  sys.b << 1.0, 1.0;
  sys.c.resize(2);
  sys.c << 1.0, -2.0;
  return sys;
}

UncertainSystem uncertain_system() {
  UncertainSystem sys;
  sys.a.resize(2, 2);
  sys.a << 0.0, 1.0, -0.6, -0.5;
  sys.delta.resize(2, 2);
  sys.delta << 0.0, 0.0, 0.1, -0.1;
  sys.b.resize(2);
  sys.b << 0.0, 1.0;
  sys.c.resize(2);
  sys.c << 1.0, 0.0;
  return sys;
}

LyapunovCertificate solve_impulse(const HierarchyLevel& lvl, int level) {
  const CertificateResult res =
      solve(build_impulse_program({lvl}, lvl.b_vec, lvl.c_vec), level);
  REQUIRE(res.certificate.has_value());
  return *res.certificate;
}

}  // namespace

TEST_CASE("oscillator peak bound is 2 sqrt 2") {
  const LtiSystem sys = osc_system();
  const HierarchyLevel lvl = build_level(sys, 1);
  const Envelope env = impulse_bound(solve_impulse(lvl, 1), lvl);
  CHECK(env.kind == EnvelopeKind::ConstantImpulse);
  CHECK(env.magnitude ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));
  CHECK(env.alpha == 0.0);
  CHECK(env.radius_at(0.0) == env.magnitude);
  CHECK(env.radius_at(17.0) == env.magnitude);
  CHECK(env.center_at(3.0) == 0.0);
}

TEST_CASE("magnitude follows the 2i-th root law") {
  // hand-built certificate: P = I at level i gives
  //   (c_i c_i^T)^{1/(2i)} (b_i^T b_i)^{1/(2i)} = (|c|^2 |b|^2)^{i/(2i)}
  const LtiSystem sys = osc_system();
  for (int i : {1, 2, 3}) {
    const HierarchyLevel lvl = build_level(sys, i);
    LyapunovCertificate cert;
    cert.level = i;
    cert.p_mat = Matrix::Identity(lvl.dim, lvl.dim);
    const Envelope env = impulse_bound(cert, lvl);
    const double expected = sys.c.norm() * sys.b.norm();
    CHECK(env.magnitude == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("deeper levels tighten the stiff bound") {
  const LtiSystem sys = stiff_system(100.0);
  const HierarchyLevel l1 = build_level(sys, 1);
  const HierarchyLevel l2 = build_level(sys, 2);
  const double h1 = impulse_bound(solve_impulse(l1, 1), l1).magnitude;
  const double h2 = impulse_bound(solve_impulse(l2, 2), l2).magnitude;
  CHECK(h1 > h2);
  CHECK(h2 >= 1.0);  // sup |h| = 1 at t = 0
}

TEST_CASE("step bound for decoupled dynamics") {
  // A = -I: x(t) = (1 - e^{-t}) b, so y - c A^{-1} b = -e^{-t} c b and the
  // sharp bound on |y - center| is |c b| with center c b.
  LtiSystem sys;
  sys.a = -Matrix::Identity(2, 2);
  sys.b.resize(2);
  sys.b << 1.0, 2.0;
  sys.c.resize(2);
  sys.c << 3.0, -1.0;
  const HierarchyLevel lvl = build_level(sys, 1);
  const Matrix a_inv = sys.a.inverse();
  const CertificateResult res =
      solve(build_step_program(lvl, a_inv, lvl.b_vec, lvl.c_vec), 1);
  REQUIRE(res.certificate.has_value());
  const Envelope env = step_bound(*res.certificate, lvl, sys);
  CHECK(env.kind == EnvelopeKind::Step);
  const double cb = sys.c.dot(sys.b);  // = 1
  CHECK(env.center_offset == doctest::Approx(cb).epsilon(1e-12));
  CHECK(env.magnitude >= std::abs(cb) - 1e-9);
  CHECK(env.center_at(5.0) == env.center_offset);
}

TEST_CASE("exponential envelope reduces to the constant bound at alpha zero") {
  const LtiSystem sys = osc_system();
  const HierarchyLevel lvl = build_level(sys, 1);
  LyapunovCertificate cert = solve_impulse(lvl, 1);
  cert.alpha = 0.0;
  const Envelope flat = impulse_bound(cert, lvl);
  const Envelope exp_env = exponential_impulse_envelope(cert, lvl);
  CHECK(exp_env.kind == EnvelopeKind::Exponential);
  CHECK(exp_env.magnitude == doctest::Approx(flat.magnitude).epsilon(1e-12));
  CHECK(exp_env.radius_at(2.0) ==
        doctest::Approx(flat.radius_at(2.0)).epsilon(1e-12));
}

TEST_CASE("exponential envelope decays at the certified rate") {
  const LtiSystem sys = osc_system();
  const double alpha = 0.1;
  const Matrix shifted = sys.a + alpha * Matrix::Identity(2, 2);
  const HierarchyLevel lvl = build_level(shifted, sys.b, sys.c, 2);
  LyapunovCertificate cert = solve_impulse(lvl, 2);
  cert.alpha = alpha;
  const Envelope env = exponential_impulse_envelope(cert, lvl);
  CHECK(env.alpha == alpha);
  CHECK(env.radius_at(3.0) ==
        doctest::Approx(env.magnitude * std::exp(-alpha * 3.0))
            .epsilon(1e-12));
}

TEST_CASE("zero uncertainty degenerates the difference program cleanly") {
  // with Delta = 0 the difference output is identically zero, the infimum 0
  // is not attained and the solver must refuse rather than mis-certify
  UncertainSystem sys = uncertain_system();
  sys.delta.setZero();
  const DifferenceData data = build_difference_vertices(sys, 1);
  SdpProblem prog;
  prog.dim = data.b_bar.size();
  prog.objective = SdpObjective::MinimizeQuadratic;
  prog.psd_constraints.push_back(hierarchy_matrix(data.a_plus, 1));
  prog.linear_constraints.push_back(LinearConstraint{data.b_bar, 1.0});
  prog.schur_objective_vector = data.c_bar;
  SolveOptions opts;
  opts.max_newton_steps = 300;
  const CertificateResult res = solve(prog, 1, 0.0, opts);
  CHECK(res.status == SolveStatus::NumericalFailure);
  CHECK_FALSE(res.certificate.has_value());
}

TEST_CASE("difference envelope tracks the nominal response") {
  const UncertainSystem sys = uncertain_system();
  const DifferenceData data = build_difference_vertices(sys, 1);
  SdpProblem prog;
  prog.dim = data.b_bar.size();
  prog.objective = SdpObjective::MinimizeQuadratic;
  prog.psd_constraints.push_back(hierarchy_matrix(data.a_plus, 1));
  prog.psd_constraints.push_back(hierarchy_matrix(data.a_minus, 1));
  prog.linear_constraints.push_back(LinearConstraint{data.b_bar, 1.0});
  prog.schur_objective_vector = data.c_bar;
  const CertificateResult res = solve(prog, 1);
  REQUIRE(res.certificate.has_value());
  const Envelope env = difference_envelope(*res.certificate, data, sys);
  CHECK(env.kind == EnvelopeKind::Difference);
  CHECK(env.magnitude > 0.0);
  REQUIRE(env.center_system.has_value());
  CHECK((env.center_system->a - sys.a).norm() == 0.0);
  CHECK((env.center_system->b - sys.b).norm() == 0.0);
}

TEST_CASE("tail bound at t0 = 0 matches the impulse bound") {
  const LtiSystem sys = osc_system();
  for (int i : {1, 2}) {
    const HierarchyLevel lvl = build_level(sys, i);
    const LyapunovCertificate cert = solve_impulse(lvl, i);
    const Envelope whole = impulse_bound(cert, lvl);
    const Envelope tail = tail_bound(cert, lvl, sys.b, 0.0);
    CHECK(tail.kind == EnvelopeKind::Tail);
    CHECK(tail.t_start == 0.0);
    CHECK(tail.magnitude == doctest::Approx(whole.magnitude).epsilon(1e-9));
  }
}

TEST_CASE("tail bound vanishes with the state") {
  const LtiSystem sys = osc_system();
  const HierarchyLevel lvl = build_level(sys, 2);
  const LyapunovCertificate cert = solve_impulse(lvl, 2);
  const Envelope tail = tail_bound(cert, lvl, Vector::Zero(2), 1.5);
  CHECK(tail.magnitude == 0.0);
  CHECK(tail.t_start == 1.5);
}

TEST_CASE("tail bound scales linearly in the state") {
  const LtiSystem sys = osc_system();
  const HierarchyLevel lvl = build_level(sys, 1);
  const LyapunovCertificate cert = solve_impulse(lvl, 1);
  Vector x(2);
  x << 0.3, -0.4;
  const Envelope one = tail_bound(cert, lvl, x, 2.0);
  const Envelope two = tail_bound(cert, lvl, Vector(2.0 * x), 2.0);
  CHECK(two.magnitude == doctest::Approx(2.0 * one.magnitude).epsilon(1e-12));
}

TEST_CASE("bound is invariant under state rescaling") {
  // T x for diagonal T leaves the transfer function unchanged
  const LtiSystem base = osc_system();
  Matrix t_mat = Matrix::Zero(2, 2);
  t_mat(0, 0) = 3.0;
  t_mat(1, 1) = 0.25;
  LtiSystem scaled;
  scaled.a = t_mat * base.a * t_mat.inverse();
  scaled.b = t_mat * base.b;
  scaled.c = base.c * t_mat.inverse();
  for (int i : {1, 2}) {
    const HierarchyLevel l0 = build_level(base, i);
    const HierarchyLevel l1 = build_level(scaled, i);
    const double h0 = impulse_bound(solve_impulse(l0, i), l0).magnitude;
    const double h1 = impulse_bound(solve_impulse(l1, i), l1).magnitude;
    CHECK(h1 == doctest::Approx(h0).epsilon(1e-6));
  }
}

TEST_CASE("envelope json carries the tube parameters") {
  const LtiSystem sys = osc_system();
  const HierarchyLevel lvl = build_level(sys, 1);
  const Envelope env = impulse_bound(solve_impulse(lvl, 1), lvl);
  const std::string text = envelope_to_json(env, "certificate.json");
  CHECK(text.find("\"magnitude\"") != std::string::npos);
  CHECK(text.find("\"alpha\"") != std::string::npos);
  CHECK(text.find("certificate.json") != std::string::npos);
}
