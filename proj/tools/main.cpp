#include "lyapbound/bounds.hpp"
#include "lyapbound/certificates.hpp"
#include "lyapbound/kron.hpp"
#include "lyapbound/sim.hpp"
#include "lyapbound/system.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lyapbound;

namespace {

// Exit-code contract: 0 success/PASS, 1 input error, 2 infeasible,
// 3 numerical failure, 4 containment FAIL.
constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitContainment = 4;

struct CommonOpts {
  std::string system_path;
  int level = 1;
  double alpha = 0.0;
  double tol = 1e-3;
  double t_final = 10.0;
  double dt = 1e-3;
  unsigned seed = 0;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_grid = true) {
  cmd->add_option("--system", o.system_path, "system description JSON file")
      ->required();
  cmd->add_option("--level", o.level, "hierarchy level i")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", o.alpha, "exponential shift");
  cmd->add_option("--tol", o.tol, "bisection tolerance");
  if (with_grid) {
    cmd->add_option("--t-final", o.t_final, "simulation horizon");
    cmd->add_option("--dt", o.dt, "simulation grid step");
  }
  cmd->add_option("--seed", o.seed, "base seed for random switching signals");
  cmd->add_option("--out", o.out_dir, "output directory for artifacts");
}

fs::path ensure_out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::vector<HierarchyLevel> vertex_levels(const UncertainSystem& sys,
                                          int level, double alpha) {
  auto [vp, vm] = shift_vertices(sys, alpha);
  std::vector<HierarchyLevel> levels;
  levels.push_back(build_level(vp, sys.b, sys.c, level));
  if (vp != vm) levels.push_back(build_level(vm, sys.b, sys.c, level));
  return levels;
}

int status_exit(SolveStatus status, const SolverReport& report) {
  if (status == SolveStatus::Infeasible) {
    std::cerr << "infeasible: " << report.message << "\n";
    return kExitInfeasible;
  }
  std::cerr << "numerical failure: " << report.message << "\n";
  return kExitNumerical;
}

void emit_artifacts(const fs::path& dir, const Envelope& env,
                    const TimeGrid& grid) {
  write_text_atomic((dir / "certificate.json").string(),
                    certificate_to_json(env.certificate));
  write_text_atomic((dir / "envelope.json").string(),
                    envelope_to_json(env, "certificate.json"));
  write_envelope_csv((dir / "envelope.csv").string(), env, grid);
}

int cmd_bound(const std::string& kind, const CommonOpts& o, double t0,
              bool state_from_sim) {
  ParsedSystem ps = parse_system(o.system_path);
  const UncertainSystem& sys = ps.system;
  const TimeGrid grid{0.0, o.t_final, o.dt};

  Envelope env;
  if (kind == "impulse") {
    std::vector<HierarchyLevel> levels = vertex_levels(sys, o.level, o.alpha);
    SdpProblem program = build_impulse_program(
        levels, levels.front().b_vec, levels.front().c_vec);
    CertificateResult cr = solve(program, o.level, o.alpha);
    if (!cr.certificate.has_value()) return status_exit(cr.status, cr.report);

    const HierarchyLevel nominal = build_level(sys.nominal(), o.level);
    if (state_from_sim) {
      if (t0 < 0.0) throw ParseError("--t0 must be nonnegative");
      const Vector x_t0 = expm(sys.a, t0) * sys.b;
      env = tail_bound(*cr.certificate, nominal, x_t0, t0);
    } else if (o.alpha != 0.0) {
      env = exponential_impulse_envelope(*cr.certificate, nominal);
    } else {
      env = impulse_bound(*cr.certificate, nominal);
    }
  } else {  // step
    if (o.alpha != 0.0) {
      throw ParseError("alpha shifts are not supported for step bounds");
    }
    if (ps.has_delta && sys.has_uncertainty()) {
      throw ParseError("step bounds require an LTI system (no Delta)");
    }
    const HierarchyLevel level = build_level(sys.nominal(), o.level);
    Eigen::FullPivLU<Matrix> lu(sys.a);
    if (!lu.isInvertible()) {
      throw SingularDynamics("A is singular; step response has no equilibrium");
    }
    const Matrix a_inv = lu.inverse();
    SdpProblem program = build_step_program(
        level, kron_power(a_inv, o.level), level.b_vec, level.c_vec);
    CertificateResult cr = solve(program, o.level, 0.0);
    if (!cr.certificate.has_value()) return status_exit(cr.status, cr.report);
    env = step_bound(*cr.certificate, level, sys.nominal());
  }

  std::printf("%.9g\n", env.magnitude);
  if (!o.out_dir.empty()) emit_artifacts(ensure_out_dir(o.out_dir), env, grid);
  return kExitOk;
}

int cmd_envelope(const CommonOpts& o, bool difference, bool has_delta) {
  ParsedSystem ps = parse_system(o.system_path);
  (void)has_delta;
  if (!ps.has_delta) throw ParseError("envelope requires Delta");
  const UncertainSystem& sys = ps.system;
  const TimeGrid grid{0.0, o.t_final, o.dt};

  Envelope env;
  if (difference) {
    DifferenceData data = build_difference_vertices(sys, o.level);
    const Index dn = 2 * sys.order();
    const Matrix shift = o.alpha * Matrix::Identity(dn, dn);
    std::vector<HierarchyLevel> levels;
    Vector b_stack(dn);
    b_stack << sys.b, sys.b;
    RowVector c_stack(dn);
    c_stack << sys.c, -sys.c;
    levels.push_back(
        build_level(data.a_plus + shift, b_stack, c_stack, o.level));
    levels.push_back(
        build_level(data.a_minus + shift, b_stack, c_stack, o.level));
    SdpProblem program =
        build_impulse_program(levels, data.b_bar, data.c_bar);
    CertificateResult cr = solve(program, o.level, o.alpha);
    if (!cr.certificate.has_value()) return status_exit(cr.status, cr.report);
    env = difference_envelope(*cr.certificate, data, sys);
  } else {
    std::vector<HierarchyLevel> levels = vertex_levels(sys, o.level, o.alpha);
    SdpProblem program = build_impulse_program(
        levels, levels.front().b_vec, levels.front().c_vec);
    CertificateResult cr = solve(program, o.level, o.alpha);
    if (!cr.certificate.has_value()) return status_exit(cr.status, cr.report);
    const HierarchyLevel nominal = build_level(sys.nominal(), o.level);
    env = o.alpha != 0.0
              ? exponential_impulse_envelope(*cr.certificate, nominal)
              : impulse_bound(*cr.certificate, nominal);
  }

  std::printf("%.9g\n", env.magnitude);
  if (!o.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(o.out_dir);
    emit_artifacts(dir, env, grid);
    if (difference) {
      write_trajectory_csv((dir / "nominal.csv").string(),
                           impulse_response(sys.nominal(), grid));
    }
  }
  return kExitOk;
}

int cmd_max_alpha(const CommonOpts& o, bool difference, double lo, double hi,
                  bool have_interval) {
  ParsedSystem ps = parse_system(o.system_path);
  AlphaSearch search;
  search.tol = o.tol;
  if (have_interval) {
    search.lo = lo;
    search.hi = hi;
  }
  AlphaResult res = max_alpha(ps.system, o.level, difference, search);
  std::printf("%.9g\n", res.alpha_star);
  if (!o.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(o.out_dir);
    write_text_atomic((dir / "certificate.json").string(),
                      certificate_to_json(res.certificate));
  }
  return kExitOk;
}

int cmd_simulate(const std::string& kind, const CommonOpts& o,
                 int num_signals) {
  ParsedSystem ps = parse_system(o.system_path);
  const TimeGrid grid{0.0, o.t_final, o.dt};
  if (o.out_dir.empty()) throw ParseError("simulate requires --out");
  const fs::path dir = ensure_out_dir(o.out_dir);

  if (kind == "impulse") {
    write_trajectory_csv((dir / "impulse.csv").string(),
                         impulse_response(ps.system.nominal(), grid));
  } else if (kind == "step") {
    write_trajectory_csv((dir / "step.csv").string(),
                         step_response(ps.system.nominal(), grid));
  } else {  // ltv
    if (!ps.has_delta) throw ParseError("ltv simulation requires Delta");
    std::vector<SwitchingSignal> signals;
    for (int k = 0; k < num_signals; ++k) {
      signals.push_back({SwitchingSignal::Kind::PiecewiseRandom, 0.0,
                         o.seed + static_cast<unsigned>(k), 0.2});
    }
    std::vector<TrajectorySample> samples =
        ltv_impulse_samples(ps.system, signals, grid);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      write_trajectory_csv(
          (dir / ("ltv_" + std::to_string(k) + ".csv")).string(), samples[k]);
    }
  }
  return kExitOk;
}

int cmd_check(const CommonOpts& o, const std::vector<int>& levels_in) {
  ParsedSystem ps = parse_system(o.system_path);
  const UncertainSystem& sys = ps.system;
  const TimeGrid grid{0.0, o.t_final, o.dt};
  std::vector<int> levels = levels_in.empty() ? std::vector<int>{1} : levels_in;

  std::vector<TrajectorySample> samples;
  if (ps.has_delta && sys.has_uncertainty()) {
    samples = ltv_impulse_samples(sys, default_signals(3, o.seed), grid);
  } else {
    samples.push_back(impulse_response(sys.nominal(), grid));
  }

  std::printf("%-6s %-14s %-14s %s\n", "level", "h_bar", "max_violation",
              "status");
  bool all_pass = true;
  ContainmentReport worst;
  for (int level : levels) {
    std::vector<HierarchyLevel> vlevels = vertex_levels(sys, level, o.alpha);
    SdpProblem program = build_impulse_program(
        vlevels, vlevels.front().b_vec, vlevels.front().c_vec);
    CertificateResult cr = solve(program, level, o.alpha);
    if (!cr.certificate.has_value()) return status_exit(cr.status, cr.report);

    const HierarchyLevel nominal = build_level(sys.nominal(), level);
    const Envelope env =
        o.alpha != 0.0 ? exponential_impulse_envelope(*cr.certificate, nominal)
                       : impulse_bound(*cr.certificate, nominal);
    const ContainmentReport report = check_containment(env, samples);
    std::printf("%-6d %-14.9g %-14.3g %s\n", level, env.magnitude,
                report.max_violation, report.pass ? "PASS" : "FAIL");
    if (!report.pass) {
      all_pass = false;
      worst = report;
    }
  }
  if (!all_pass) {
    std::cerr << "containment FAIL at t=" << worst.argmax_time << " ("
              << worst.argmax_signal << "), violation " << worst.max_violation
              << "\n";
    return kExitContainment;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-wise-in-time response bounds via polynomial Lyapunov "
               "certificates"};
  app.require_subcommand(1);

  CommonOpts bound_opts;
  std::string bound_kind;
  double bound_t0 = 0.0;
  bool state_from_sim = false;
  CLI::App* bound = app.add_subcommand("bound", "certified response bound");
  bound->add_option("kind", bound_kind, "impulse or step")
      ->required()
      ->check(CLI::IsMember({"impulse", "step"}));
  add_common(bound, bound_opts);
  bound->add_option("--t0", bound_t0, "restart time for tail bounds");
  bound->add_flag("--state-from-sim", state_from_sim,
                  "bound the tail from the simulated state x(t0)");

  CommonOpts env_opts;
  bool difference = false;
  CLI::App* envelope =
      app.add_subcommand("envelope", "uncertain-system envelope");
  add_common(envelope, env_opts);
  envelope->add_flag("--difference", difference,
                     "envelope around the nominal impulse response");

  CommonOpts alpha_opts;
  bool alpha_difference = false;
  double alpha_lo = 0.0, alpha_hi = 0.0;
  CLI::App* maxalpha =
      app.add_subcommand("max-alpha", "largest feasible exponential shift");
  add_common(maxalpha, alpha_opts, false);
  maxalpha->add_flag("--difference", alpha_difference,
                     "search the difference program");
  CLI::Option* lo_opt = maxalpha->add_option("--lo", alpha_lo, "interval low");
  maxalpha->add_option("--hi", alpha_hi, "interval high")->needs(lo_opt);

  CommonOpts sim_opts;
  std::string sim_kind;
  int num_signals = 3;
  CLI::App* simulate = app.add_subcommand("simulate", "reference simulation");
  simulate->add_option("kind", sim_kind, "impulse, step or ltv")
      ->required()
      ->check(CLI::IsMember({"impulse", "step", "ltv"}));
  add_common(simulate, sim_opts);
  simulate->add_option("--num-signals", num_signals,
                       "number of random switching signals");

  CommonOpts check_opts;
  std::vector<int> check_levels;
  CLI::App* check = app.add_subcommand("check", "certify then verify");
  add_common(check, check_opts);
  check->add_option("--levels", check_levels, "hierarchy levels to certify");

  try {
    app.parse(argc, argv);
    if (bound->parsed()) {
      return cmd_bound(bound_kind, bound_opts, bound_t0, state_from_sim);
    }
    if (envelope->parsed()) {
      return cmd_envelope(env_opts, difference, true);
    }
    if (maxalpha->parsed()) {
      return cmd_max_alpha(alpha_opts, alpha_difference, alpha_lo, alpha_hi,
                           lo_opt->count() > 0);
    }
    if (simulate->parsed()) return cmd_simulate(sim_kind, sim_opts, num_signals);
    if (check->parsed()) return cmd_check(check_opts, check_levels);
    return kExitInput;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n";
    return kExitInput;
  } catch (const NoFeasibleAlpha& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SingularDynamics& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DimensionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DimensionCapError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
