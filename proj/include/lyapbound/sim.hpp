#pragma once

#include "lyapbound/bounds.hpp"
#include "lyapbound/system.hpp"
#include "lyapbound/types.hpp"

#include <string>
#include <vector>

namespace lyapbound {

struct TimeGrid {
  double t_start = 0.0;
  double t_final = 10.0;
  double dt = 1e-3;

  std::vector<double> times() const;
  void validate() const;
};

struct TrajectorySample {
  std::vector<double> times;
  std::vector<double> outputs;
  std::vector<Vector> states;
  std::string signal;  // description of lambda(t), empty for LTI
};

// Matrix exponential e^{a t} (scaling-and-squaring Pade).
Matrix expm(const Matrix& a, double t = 1.0);

// h(t) = c e^{At} b, evaluated exactly on the grid.
TrajectorySample impulse_response(const LtiSystem& sys, const TimeGrid& grid);

// s(t) = c A^{-1} (e^{At} - I) b; throws SingularDynamics for singular A.
TrajectorySample step_response(const LtiSystem& sys, const TimeGrid& grid);

struct SwitchingSignal {
  enum class Kind { Constant, PiecewiseRandom };
  Kind kind = Kind::Constant;
  double constant_value = 1.0;  // lambda for Kind::Constant
  unsigned seed = 0;
  double dwell = 0.2;  // minimum dwell time for the random signal

  std::string describe() const;
};

// One bang-bang signal per extreme plus `num_random` seeded random signals.
std::vector<SwitchingSignal> default_signals(int num_random, unsigned base_seed,
                                             double dwell = 0.2);

// Classical fixed-step RK4 integration of phi' = (A + lambda(t) Delta) phi,
// phi(0) = b; lambda is piecewise constant between switch instants.
std::vector<TrajectorySample> ltv_impulse_samples(
    const UncertainSystem& sys, const std::vector<SwitchingSignal>& signals,
    const TimeGrid& grid);

struct ContainmentReport {
  bool pass = false;
  double max_violation = 0.0;  // max |y - center| - radius over all samples
  double argmax_time = 0.0;
  std::string argmax_signal;
  double tol = 0.0;
};

ContainmentReport check_containment(const Envelope& env,
                                    const std::vector<TrajectorySample>& samples);

// CSV emission: "t,value" rows, 12 significant digits, atomic write.
void write_trajectory_csv(const std::string& path,
                          const TrajectorySample& sample);
// "t,lower,upper" rows for the envelope tube on the grid.
void write_envelope_csv(const std::string& path, const Envelope& env,
                        const TimeGrid& grid);
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace lyapbound
