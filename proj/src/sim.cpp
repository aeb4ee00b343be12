#include "lyapbound/sim.hpp"

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace lyapbound {

namespace {

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Piecewise-constant lambda(t) realised on dwell windows; constant signals
// have a single window.
std::vector<double> realize_lambda(const SwitchingSignal& sig, double t_final) {
  if (sig.kind == SwitchingSignal::Kind::Constant) {
    return {sig.constant_value};
  }
  const std::size_t windows =
      static_cast<std::size_t>(std::ceil(t_final / sig.dwell)) + 1;
  std::mt19937 rng(sig.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> values(windows);
  for (double& v : values) v = uni(rng);
  return values;
}

double lambda_at(const std::vector<double>& values, double dwell, double t) {
  if (values.size() == 1) return values.front();
  const std::size_t k = std::min(
      values.size() - 1,
      static_cast<std::size_t>(std::max(0.0, std::floor(t / dwell + 1e-12))));
  return values[k];
}

}  // namespace

std::vector<double> TimeGrid::times() const {
  validate();
  std::vector<double> out;
  const std::size_t steps =
      static_cast<std::size_t>(std::round((t_final - t_start) / dt));
  out.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) out.push_back(t_start + k * dt);
  return out;
}

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !(t_final > t_start) || !std::isfinite(t_final) ||
      !std::isfinite(t_start)) {
    throw DimensionError("invalid time grid");
  }
  if ((t_final - t_start) / dt > 5e7) {
    throw DimensionError("time grid too fine");
  }
}

Matrix expm(const Matrix& a, double t) {
  if (a.rows() != a.cols()) throw DimensionError("expm requires a square matrix");
  if (!std::isfinite(t)) throw DimensionError("expm requires finite time");
  return (a * t).exp();
}

TrajectorySample impulse_response(const LtiSystem& sys, const TimeGrid& grid) {
  sys.validate();
  TrajectorySample out;
  out.times = grid.times();
  out.outputs.reserve(out.times.size());
  out.states.reserve(out.times.size());
  const Matrix step = expm(sys.a, grid.dt);
  Vector phi = expm(sys.a, grid.t_start) * sys.b;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    out.states.push_back(phi);
    out.outputs.push_back(sys.c.dot(phi));
    phi = step * phi;
  }
  return out;
}

TrajectorySample step_response(const LtiSystem& sys, const TimeGrid& grid) {
  sys.validate();
  Eigen::FullPivLU<Matrix> lu(sys.a);
  if (!lu.isInvertible()) {
    throw SingularDynamics("step response requires invertible A");
  }
  TrajectorySample out;
  out.times = grid.times();
  out.outputs.reserve(out.times.size());
  out.states.reserve(out.times.size());
  const Matrix step = expm(sys.a, grid.dt);
  Matrix e = expm(sys.a, grid.t_start);
  const Index n = sys.order();
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    const Vector x = lu.solve((e - Matrix::Identity(n, n)) * sys.b);
    out.states.push_back(x);
    out.outputs.push_back(sys.c.dot(x));
    e = step * e;
  }
  return out;
}

std::string SwitchingSignal::describe() const {
  if (kind == Kind::Constant) {
    return "constant lambda=" + fmt12(constant_value);
  }
  std::ostringstream os;
  os << "piecewise-random seed=" << seed << " dwell=" << fmt12(dwell);
  return os.str();
}

std::vector<SwitchingSignal> default_signals(int num_random, unsigned base_seed,
                                             double dwell) {
  std::vector<SwitchingSignal> out;
  out.push_back({SwitchingSignal::Kind::Constant, 1.0, 0, dwell});
  out.push_back({SwitchingSignal::Kind::Constant, -1.0, 0, dwell});
  for (int k = 0; k < num_random; ++k) {
    out.push_back(
        {SwitchingSignal::Kind::PiecewiseRandom, 0.0, base_seed + static_cast<unsigned>(k), dwell});
  }
  return out;
}

std::vector<TrajectorySample> ltv_impulse_samples(
    const UncertainSystem& sys, const std::vector<SwitchingSignal>& signals,
    const TimeGrid& grid) {
  sys.validate();
  if (grid.t_start != 0.0) {
    throw DimensionError("LTV impulse simulation starts at t = 0");
  }
  std::vector<TrajectorySample> out;
  const std::vector<double> times = grid.times();
  const double stiff_scale = std::max(1.0, sys.a.norm() + sys.delta.norm());

  for (const SwitchingSignal& sig : signals) {
    if (sig.kind == SwitchingSignal::Kind::PiecewiseRandom &&
        !(sig.dwell > 0.0)) {
      throw DimensionError("random switching signal requires positive dwell");
    }
    const std::vector<double> lambdas = realize_lambda(sig, grid.t_final);
    const double dwell = sig.dwell;
    // substep within a dwell window and within the stability limit
    const double h_cap = std::min(sig.kind == SwitchingSignal::Kind::Constant
                                      ? grid.dt
                                      : dwell,
                                  1.0 / stiff_scale) /
                         4.0;
    const int substeps =
        std::max(1, static_cast<int>(std::ceil(grid.dt / h_cap)));
    const double h = grid.dt / substeps;

    TrajectorySample sample;
    sample.times = times;
    sample.signal = sig.describe();
    sample.outputs.reserve(times.size());
    sample.states.reserve(times.size());

    Vector phi = sys.b;
    sample.states.push_back(phi);
    sample.outputs.push_back(sys.c.dot(phi));
    Vector k1, k2, k3, k4;
    for (std::size_t k = 1; k < times.size(); ++k) {
      const double t_base = times[k - 1];
      for (int s = 0; s < substeps; ++s) {
        const double t_sub = t_base + s * h;
        const double lam = lambda_at(lambdas, dwell, t_sub + 0.5 * h);
        const Matrix a_t = sys.a + lam * sys.delta;
        k1 = a_t * phi;
        k2 = a_t * (phi + 0.5 * h * k1);
        k3 = a_t * (phi + 0.5 * h * k2);
        k4 = a_t * (phi + h * k3);
        phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      sample.states.push_back(phi);
      sample.outputs.push_back(sys.c.dot(phi));
    }
    out.push_back(std::move(sample));
  }
  return out;
}

ContainmentReport check_containment(const Envelope& env,
                                    const std::vector<TrajectorySample>& samples) {
  ContainmentReport report;
  report.tol = 1e-6 * std::max(1.0, env.magnitude);
  report.max_violation = -std::numeric_limits<double>::infinity();

  for (const TrajectorySample& sample : samples) {
    // precompute the center along this sample's grid
    std::vector<double> center(sample.times.size(), env.center_offset);
    if (env.center_system.has_value()) {
      const LtiSystem& nom = *env.center_system;
      const double dt = sample.times.size() > 1
                            ? sample.times[1] - sample.times[0]
                            : 1.0;
      const Matrix step = expm(nom.a, dt);
      Vector phi = expm(nom.a, sample.times.front()) * nom.b;
      for (std::size_t k = 0; k < sample.times.size(); ++k) {
        center[k] = nom.c.dot(phi);
        phi = step * phi;
      }
    }
    for (std::size_t k = 0; k < sample.times.size(); ++k) {
      const double t = sample.times[k];
      if (t < env.t_start - 1e-12) continue;
      const double violation =
          std::abs(sample.outputs[k] - center[k]) - env.radius_at(t);
      if (violation > report.max_violation) {
        report.max_violation = violation;
        report.argmax_time = t;
        report.argmax_signal = sample.signal;
      }
    }
  }
  if (samples.empty()) {
    report.pass = false;
    report.argmax_signal = "no samples";
    return report;
  }
  report.pass = report.max_violation <= report.tol;
  return report;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

void write_trajectory_csv(const std::string& path,
                          const TrajectorySample& sample) {
  std::ostringstream os;
  os << "t,value\n";
  for (std::size_t k = 0; k < sample.times.size(); ++k) {
    os << fmt12(sample.times[k]) << ',' << fmt12(sample.outputs[k]) << '\n';
  }
  write_text_atomic(path, os.str());
}

void write_envelope_csv(const std::string& path, const Envelope& env,
                        const TimeGrid& grid) {
  std::ostringstream os;
  os << "t,lower,upper\n";
  // center precomputed by stepping when the envelope follows a trajectory
  std::vector<double> times = grid.times();
  std::vector<double> center(times.size(), env.center_offset);
  if (env.center_system.has_value()) {
    const LtiSystem& nom = *env.center_system;
    const Matrix step = expm(nom.a, grid.dt);
    Vector phi = expm(nom.a, grid.t_start) * nom.b;
    for (std::size_t k = 0; k < times.size(); ++k) {
      center[k] = nom.c.dot(phi);
      phi = step * phi;
    }
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (t < env.t_start - 1e-12) continue;
    const double r = env.radius_at(t);
    os << fmt12(t) << ',' << fmt12(center[k] - r) << ','
       << fmt12(center[k] + r) << '\n';
  }
  write_text_atomic(path, os.str());
}

}  // namespace lyapbound
