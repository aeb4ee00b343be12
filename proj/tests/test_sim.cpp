#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lyapbound/sim.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

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

}  // namespace

TEST_CASE("expm basic cases") {
  CHECK((expm(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).norm() <= 1e-15);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = -1.0;
  d(1, 1) = 2.0;
  const Matrix e = expm(d, 0.5);
  CHECK(e(0, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(e(1, 1) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(std::abs(e(0, 1)) <= 1e-16);

  // rotation generator
  Matrix j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  const double th = 0.73;
  const Matrix r = expm(j, th);
  CHECK(r(0, 0) == doctest::Approx(std::cos(th)).epsilon(1e-14));
  CHECK(r(1, 0) == doctest::Approx(std::sin(th)).epsilon(1e-14));
}

TEST_CASE("expm semigroup property") {
  Matrix a(3, 3);
  a << -1.0, 2.0, 0.5, 0.0, -3.0, 1.0, 0.2, -0.1, -0.5;
  const Matrix lhs = expm(a, 1.3);
  const Matrix rhs = expm(a, 0.8) * expm(a, 0.5);
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("oscillator impulse response starts at c b") {
  const TimeGrid grid{0.0, 10.0, 1e-3};
  const TrajectorySample s = impulse_response(osc_system(), grid);
  REQUIRE(s.times.size() == 10001);
  CHECK(s.outputs.front() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s.times.back() == doctest::Approx(10.0));
}

TEST_CASE("stiff impulse response matches the closed form") {
  for (double m : {100.0, 1000.0}) {
    const TimeGrid grid{0.0, 5.0, 1e-3};
    const TrajectorySample s = impulse_response(stiff_system(m), grid);
    for (std::size_t k = 0; k < s.times.size(); k += 37) {
      const double t = s.times[k];
      const double exact = std::exp(-t) - 2.0 * std::exp(-m * t);
      CHECK(s.outputs[k] == doctest::Approx(exact).epsilon(1e-9));
    }
  }
}

TEST_CASE("step response closed form for diagonal dynamics") {
  // s(t) = c A^{-1} (e^{At} - I) b for A = diag(-1, -2)
  LtiSystem sys;
  sys.a = Matrix::Zero(2, 2);
  sys.a(0, 0) = -1.0;
  sys.a(1, 1) = -2.0;
  sys.b.resize(2);
  sys.b << 1.0, 3.0;
  sys.c.resize(2);
  sys.c << 2.0, -1.0;
  const TimeGrid grid{0.0, 4.0, 1e-2};
  const TrajectorySample s = step_response(sys, grid);
  for (std::size_t k = 0; k < s.times.size(); k += 11) {
    const double t = s.times[k];
    const double exact =
        2.0 * (1.0 - std::exp(-t)) - 1.5 * (1.0 - std::exp(-2.0 * t));
    CHECK(s.outputs[k] == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("step response rejects singular dynamics") {
  LtiSystem sys;
  sys.a = Matrix::Zero(2, 2);
  sys.a(0, 1) = 1.0;
  sys.b = Vector::Ones(2);
  sys.c = RowVector::Ones(2);
  CHECK_THROWS_AS(step_response(sys, TimeGrid{}), SingularDynamics);
}

TEST_CASE("LTV simulation degenerates to LTI when Delta is zero") {
  UncertainSystem sys;
  const LtiSystem osc = osc_system();
  sys.a = osc.a;
  sys.delta = Matrix::Zero(2, 2);
  sys.b = osc.b;
  sys.c = osc.c;
  const TimeGrid grid{0.0, 8.0, 1e-3};
  const TrajectorySample exact = impulse_response(osc, grid);
  const auto samples = ltv_impulse_samples(sys, default_signals(1, 5), grid);
  REQUIRE(samples.size() == 3);
  for (const TrajectorySample& s : samples) {
    double max_err = 0.0;
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      max_err = std::max(max_err, std::abs(s.outputs[k] - exact.outputs[k]));
    }
    CHECK(max_err <= 1e-6);
  }
}

TEST_CASE("constant lambda matches the frozen LTI system") {
  const UncertainSystem sys = uncertain_system();
  LtiSystem frozen;
  frozen.a = sys.a + sys.delta;
  frozen.b = sys.b;
  frozen.c = sys.c;
  const TimeGrid grid{0.0, 8.0, 1e-3};
  const TrajectorySample exact = impulse_response(frozen, grid);
  const std::vector<SwitchingSignal> sig = {
      {SwitchingSignal::Kind::Constant, 1.0, 0, 0.2}};
  const auto samples = ltv_impulse_samples(sys, sig, grid);
  double max_err = 0.0;
  for (std::size_t k = 0; k < exact.times.size(); ++k) {
    max_err = std::max(max_err,
                       std::abs(samples[0].outputs[k] - exact.outputs[k]));
  }
  CHECK(max_err <= 1e-6);
}

TEST_CASE("RK4 observed convergence order") {
  const UncertainSystem sys = uncertain_system();
  const std::vector<SwitchingSignal> sig = {
      {SwitchingSignal::Kind::Constant, 1.0, 0, 0.2}};
  LtiSystem frozen;
  frozen.a = sys.a + sys.delta;
  frozen.b = sys.b;
  frozen.c = sys.c;
  const double t_end = 2.0;

  auto error_at = [&](double dt) {
    const TimeGrid grid{0.0, t_end, dt};
    const auto samples = ltv_impulse_samples(sys, sig, grid);
    const Vector exact = expm(frozen.a, t_end) * frozen.b;
    return (samples[0].states.back() - exact).norm();
  };
  // substep control keeps the step fixed only for coarse dt
  const double e1 = error_at(0.4);
  const double e2 = error_at(0.2);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 3.5);
}

TEST_CASE("containment verdicts") {
  const TimeGrid grid{0.0, 6.0, 1e-3};
  const TrajectorySample s = impulse_response(osc_system(), grid);
  double sup = 0.0;
  for (double y : s.outputs) sup = std::max(sup, std::abs(y));

  Envelope env;
  env.kind = EnvelopeKind::ConstantImpulse;
  env.magnitude = sup * 1.01;
  const ContainmentReport pass = check_containment(env, {s});
  CHECK(pass.pass);
  CHECK(pass.max_violation < 0.0);

  env.magnitude = sup * 0.5;
  const ContainmentReport fail = check_containment(env, {s});
  CHECK_FALSE(fail.pass);
  CHECK(fail.max_violation > 0.0);
  CHECK(fail.argmax_time > 0.0);

  // vacuous check: no samples
  env.magnitude = 0.0;
  const ContainmentReport vac = check_containment(env, {});
  CHECK_FALSE(vac.pass);
}

TEST_CASE("simulation output is deterministic") {
  const UncertainSystem sys = uncertain_system();
  const TimeGrid grid{0.0, 3.0, 1e-2};
  const auto a = ltv_impulse_samples(sys, default_signals(2, 123), grid);
  const auto b = ltv_impulse_samples(sys, default_signals(2, 123), grid);
  REQUIRE(a.size() == b.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (std::size_t k = 0; k < a[s].outputs.size(); ++k) {
      CHECK(a[s].outputs[k] == b[s].outputs[k]);  // bit-exact
    }
  }
}

TEST_CASE("csv writers") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lyapbound_sim_test";
  fs::create_directories(dir);
  const TimeGrid grid{0.0, 0.01, 1e-2};
  const TrajectorySample s = impulse_response(osc_system(), grid);
  const std::string path = (dir / "traj.csv").string();
  write_trajectory_csv(path, s);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,value");
  std::string row;
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 2);
  fs::remove_all(dir);
}

TEST_CASE("time grid validation") {
  CHECK_THROWS_AS(TimeGrid({0.0, 1.0, -1e-3}).times(), DimensionError);
  CHECK_THROWS_AS(TimeGrid({1.0, 0.5, 1e-3}).times(), DimensionError);
}
