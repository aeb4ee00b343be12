#include "lyapbound/bounds.hpp"

#include "json.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace lyapbound {

using json = nlohmann::ordered_json;

namespace {

// (c P^{-1} c^T)^{1/(2i)} (b^T P b)^{1/(2i)}, roots taken in log space so
// large level-i quadratic forms cannot overflow.
double bound_magnitude(const Matrix& p, const Vector& b_lift,
                       const RowVector& c_lift, int level) {
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) {
    throw Error("bound_magnitude: certificate P is not positive definite");
  }
  const double q_out = c_lift.dot(llt.solve(c_lift.transpose()));
  const double q_in = b_lift.dot(p * b_lift);
  if (q_out <= 0.0 || q_in <= 0.0) return 0.0;
  return std::exp((std::log(q_out) + std::log(q_in)) /
                  (2.0 * static_cast<double>(level)));
}

void check_level(const LyapunovCertificate& cert, const HierarchyLevel& level) {
  if (cert.level != level.level) {
    throw DimensionError("certificate level " + std::to_string(cert.level) +
                         " does not match hierarchy level " +
                         std::to_string(level.level));
  }
  if (cert.p_mat.rows() != level.dim) {
    throw DimensionError("certificate dimension does not match level");
  }
}

}  // namespace

double Envelope::radius_at(double t) const {
  return magnitude * std::exp(-alpha * (t - t_start));
}

double Envelope::center_at(double t) const {
  if (center_system.has_value()) {
    // nominal impulse response c e^{At} b
    const LtiSystem& sys = *center_system;
    const Matrix e = (sys.a * t).exp();
    return sys.c.dot(e * sys.b);
  }
  return center_offset;
}

Envelope impulse_bound(const LyapunovCertificate& cert,
                       const HierarchyLevel& level) {
  check_level(cert, level);
  Envelope env;
  env.kind = EnvelopeKind::ConstantImpulse;
  env.magnitude = bound_magnitude(cert.p_mat, level.b_vec, level.c_vec,
                                  cert.level);
  env.alpha = 0.0;
  env.certificate = cert;
  return env;
}

Envelope step_bound(const LyapunovCertificate& cert,
                    const HierarchyLevel& level, const LtiSystem& sys) {
  check_level(cert, level);
  sys.validate();
  Eigen::FullPivLU<Matrix> lu(sys.a);
  if (!lu.isInvertible()) {
    throw SingularDynamics(
        "step bound requires invertible A (no finite equilibrium)");
  }
  const Vector a_inv_b = lu.solve(sys.b);
  Envelope env;
  env.kind = EnvelopeKind::Step;
  env.magnitude = bound_magnitude(cert.p_mat,
                                  lift_vector(a_inv_b, cert.level),
                                  level.c_vec, cert.level);
  env.alpha = 0.0;
  env.center_offset = -sys.c.dot(a_inv_b);
  env.certificate = cert;
  return env;
}

Envelope exponential_impulse_envelope(const LyapunovCertificate& cert,
                                      const HierarchyLevel& level) {
  Envelope env = impulse_bound(cert, level);
  env.kind = EnvelopeKind::Exponential;
  env.alpha = cert.alpha;
  return env;
}

Envelope difference_envelope(const LyapunovCertificate& cert,
                             const DifferenceData& data,
                             const UncertainSystem& sys) {
  if (cert.level != data.level) {
    throw DimensionError("certificate level does not match difference data");
  }
  if (cert.p_mat.rows() != data.b_bar.size()) {
    throw DimensionError("certificate dimension does not match difference data");
  }
  Envelope env;
  env.kind = EnvelopeKind::Difference;
  env.magnitude =
      bound_magnitude(cert.p_mat, data.b_bar, data.c_bar, cert.level);
  env.alpha = cert.alpha;
  env.center_system = sys.nominal();
  env.certificate = cert;
  return env;
}

Envelope tail_bound(const LyapunovCertificate& cert,
                    const HierarchyLevel& level, const Vector& state_at_t0,
                    double t0) {
  check_level(cert, level);
  if (t0 < 0.0) throw DimensionError("tail bound requires t0 >= 0");
  Envelope env;
  env.kind = EnvelopeKind::Tail;
  env.magnitude = bound_magnitude(
      cert.p_mat, lift_vector(state_at_t0, cert.level), level.c_vec,
      cert.level);
  env.alpha = cert.alpha;
  env.t_start = t0;
  env.certificate = cert;
  return env;
}

std::string envelope_to_json(const Envelope& env,
                             const std::string& certificate_ref) {
  json j;
  switch (env.kind) {
    case EnvelopeKind::ConstantImpulse: j["kind"] = "constant_impulse"; break;
    case EnvelopeKind::Step: j["kind"] = "step"; break;
    case EnvelopeKind::Exponential: j["kind"] = "exponential"; break;
    case EnvelopeKind::Difference: j["kind"] = "difference"; break;
    case EnvelopeKind::Tail: j["kind"] = "tail"; break;
  }
  j["magnitude"] = env.magnitude;
  j["alpha"] = env.alpha;
  j["t_start"] = env.t_start;
  json center;
  if (env.center_system.has_value()) {
    center["type"] = "nominal_impulse";
    json a_rows = json::array();
    for (Index r = 0; r < env.center_system->a.rows(); ++r) {
      json row = json::array();
      for (Index s = 0; s < env.center_system->a.cols(); ++s) {
        row.push_back(env.center_system->a(r, s));
      }
      a_rows.push_back(row);
    }
    json b_arr = json::array();
    for (Index k = 0; k < env.center_system->b.size(); ++k) {
      b_arr.push_back(env.center_system->b(k));
    }
    json c_arr = json::array();
    for (Index k = 0; k < env.center_system->c.size(); ++k) {
      c_arr.push_back(env.center_system->c(k));
    }
    center["data"] = {{"A", a_rows}, {"b", b_arr}, {"c", c_arr}};
  } else if (env.center_offset != 0.0) {
    center["type"] = "constant";
    center["data"] = env.center_offset;
  } else {
    center["type"] = "zero";
    center["data"] = nullptr;
  }
  j["center"] = center;
  j["certificate_ref"] = certificate_ref;
  return j.dump(2) + "\n";
}

}  // namespace lyapbound
