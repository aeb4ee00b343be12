#pragma once

#include "lyapbound/certificates.hpp"
#include "lyapbound/kron.hpp"
#include "lyapbound/system.hpp"
#include "lyapbound/types.hpp"

#include <optional>
#include <string>

namespace lyapbound {

enum class EnvelopeKind { ConstantImpulse, Step, Exponential, Difference, Tail };

// A certified time-dependent tube:
//   |y(t) - center(t)| <= e^{-alpha (t - t_start)} * magnitude  for t >= t_start.
struct Envelope {
  EnvelopeKind kind = EnvelopeKind::ConstantImpulse;
  double magnitude = 0.0;
  double alpha = 0.0;
  double t_start = 0.0;
  double center_offset = 0.0;  // step kind: -c A^{-1} b; otherwise 0
  std::optional<LtiSystem> center_system;  // difference kind: nominal system
  LyapunovCertificate certificate;

  double radius_at(double t) const;
  double center_at(double t) const;
};

// magnitude = (c_i P^{-1} c_i^T)^{1/(2i)} (b_i^T P b_i)^{1/(2i)}
Envelope impulse_bound(const LyapunovCertificate& cert,
                       const HierarchyLevel& level);

Envelope step_bound(const LyapunovCertificate& cert,
                    const HierarchyLevel& level, const LtiSystem& sys);

// Requires a certificate solved for the alpha-shifted vertices.
Envelope exponential_impulse_envelope(const LyapunovCertificate& cert,
                                      const HierarchyLevel& level);

Envelope difference_envelope(const LyapunovCertificate& cert,
                             const DifferenceData& data,
                             const UncertainSystem& sys);

// Bound on the tail t >= t0, re-evaluated with the lifted state x(t0).
Envelope tail_bound(const LyapunovCertificate& cert,
                    const HierarchyLevel& level, const Vector& state_at_t0,
                    double t0);

std::string envelope_to_json(const Envelope& env,
                             const std::string& certificate_ref);

}  // namespace lyapbound
