// gradlab: problem generation, single runs, sweeps, characteristic roots and
// trace analysis for spectral gradient methods on quadratics.
//
// Exit codes: 0 converged / ok, 1 error, 2 max iterations, 3 degenerate step.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gradlab/analysis.hpp"
#include "gradlab/serialize.hpp"
#include "gradlab/sweep.hpp"

namespace fs = std::filesystem;
using namespace gradlab;

namespace {

constexpr int kExitError = 1;

int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::Converged:
      return 0;
    case RunStatus::MaxIters:
      return 2;
    case RunStatus::Degenerate:
      return 3;
  }
  return kExitError;
}

fs::path output_dir(const std::string& flag) {
  if (const char* env = std::getenv("GRADLAB_OUT"); env && *env) return env;
  return flag;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidSpec("bad number '" + item + "' in list");
    out.push_back(v);
  }
  return out;
}

struct GenOptions {
  std::string family;
  int n = 0;
  double ncond = 0.0;
  double kappa = 0.0;
  std::string eigs;
  std::uint64_t seed = 0;
  double x_star = 1.0;
  std::string out = ".";
};

struct RunOptions {
  std::string problem;
  std::string method = "bb1";
  std::string tau = "ratio_mu1";
  int m = 1;
  int delay = 1;
  double power = 1.0;
  double tol = 1e-20;
  long max_iters = 100000;
  double x0 = 0.0;
  double alpha0 = 0.0;
  std::string gradient_mode = "iterates";
  std::string out = ".";
};

struct SweepOptions {
  std::string config;
  unsigned threads = 0;
  std::string out = ".";
};

struct RootsOptions {
  int d = 0;
  bool rbb = false;
};

struct AnalyzeOptions {
  std::string trace;
  std::string problem;
  std::size_t window = 10;
  double fraction = 0.8;
};

int cmd_gen(const GenOptions& o, const CLI::App& app) {
  SpectrumSpec spec;
  const auto need = [&](const char* flag) {
    if (app.count(flag) == 0) throw CLI::ValidationError(std::string(flag) + " is required for --family " + o.family);
  };
  if (o.family == "deasmundis") {
    need("--n");
    need("--ncond");
    spec = DeAsmundis{o.n, o.ncond};
  } else if (o.family == "explicit") {
    need("--eigs");
    spec = ExplicitSpectrum{parse_list(o.eigs)};
  } else {
    need("--n");
    need("--kappa");
    spec = RandomLogUniform{o.n, o.kappa, o.seed};
  }
  const auto eigs = generate_spectrum(spec);
  const auto problem =
      build_problem<double>(eigs, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(eigs.size()), o.x_star));
  const fs::path dir = output_dir(o.out);
  fs::create_directories(dir);
  write_problem_file(problem, dir / "problem.json");
  std::cout << (dir / "problem.json").string() << "\n";
  return 0;
}

StepPolicy policy_from_flags(const RunOptions& o) {
  StepPolicy policy;
  if (o.method == "sd") {
    policy = SteepestDescent{};
  } else if (o.method == "bb1") {
    policy = BB1{};
  } else if (o.method == "bb2") {
    policy = BB2{};
  } else if (o.method == "rbb") {
    policy = RBB{parse_tau(o.tau)};
  } else if (o.method == "rbb_like") {
    policy = RBBLike{o.m, parse_tau(o.tau)};
  } else {
    policy = Delayed{o.delay, o.power};
  }
  validate(policy);
  return policy;
}

int cmd_run(const RunOptions& o, const CLI::App& app) {
  const auto problem = read_problem_file(o.problem);
  const StepPolicy policy = policy_from_flags(o);

  RunConfig<double> config;
  config.x0 = Eigen::VectorXd::Constant(problem.dim(), o.x0);
  if (app.count("--alpha0")) config.alpha_init = AlphaInitFixed{o.alpha0};
  config.rel_tol = o.tol;
  config.max_iters = o.max_iters;
  config.gradient_mode = parse_gradient_mode(o.gradient_mode);

  auto trace = run(problem, policy, config);
  if (has_simple_smallest_eigenvalue(problem)) attach(trace, diagnose(problem, trace));

  const fs::path dir = output_dir(o.out);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "trace.csv");
    if (!csv) throw InvalidSpec("cannot write " + (dir / "trace.csv").string());
    write_trace_csv(trace, csv);
  }
  const json summary = summary_json(trace, problem);
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return exit_code(trace.status);
}

int cmd_sweep(const SweepOptions& o, const CLI::App& app) {
  SweepConfig config = read_sweep_config(o.config);
  if (app.count("--threads")) config.threads = o.threads;
  const auto rows = run_sweep(config);
  const fs::path dir = output_dir(o.out);
  write_sweep(rows, dir);
  std::cout << (dir / "results.csv").string() << "\n";
  return 0;
}

int cmd_roots(const RootsOptions& o) {
  if (!o.rbb && o.d == 0) throw CLI::ValidationError("roots needs --d or --rbb");
  const auto roots = o.rbb ? rbb_char_roots() : char_roots(o.d);
  std::cout << roots_to_json(roots).dump(2) << "\n";
  return 0;
}

int cmd_analyze(const AnalyzeOptions& o) {
  std::ifstream in(o.trace);
  if (!in) throw InvalidSpec("cannot open " + o.trace);
  const auto trace = read_trace_csv(in);

  std::vector<std::optional<double>> r;
  for (const auto& row : trace.rows) r.push_back(row.r);

  json report;
  report["rows"] = trace.rows.size();
  report["oscillation"] = oscillation_to_json(oscillation_report(r, o.window));
  if (!o.problem.empty()) {
    const auto problem = read_problem_file(o.problem);
    const auto diag = diagnostics_from_columns(trace, problem.eigenvalues());
    report["recursion"] = recursion_to_json(verify_recursion(diag));
  } else {
    report["recursion"] = nullptr;
  }
  report["descent"] = descent_to_json(descent_table(r, o.fraction));
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral gradient methods on strictly convex quadratics"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a problem description (problem.json)");
  gen_cmd->add_option("--family", gen.family, "deasmundis | explicit | random")
      ->required()
      ->check(CLI::IsMember({"deasmundis", "explicit", "random"}));
  gen_cmd->add_option("--n", gen.n, "Dimension");
  gen_cmd->add_option("--ncond", gen.ncond, "log10 of the condition number (deasmundis)");
  gen_cmd->add_option("--kappa", gen.kappa, "Condition number (random)");
  gen_cmd->add_option("--eigs", gen.eigs, "Comma-separated eigenvalues (explicit)");
  gen_cmd->add_option("--seed", gen.seed, "Seed (random)");
  gen_cmd->add_option("--x-star", gen.x_star, "Value of every x* entry")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "Run one method; writes trace.csv and summary.json");
  run_cmd->add_option("--problem", run_opts.problem, "Problem JSON")->required();
  run_cmd->add_option("--method", run_opts.method, "sd | bb1 | bb2 | rbb | rbb_like | delayed")
      ->check(CLI::IsMember({"sd", "bb1", "bb2", "rbb", "rbb_like", "delayed"}))
      ->capture_default_str();
  run_cmd->add_option("--tau", run_opts.tau, "constant:<v> | ratio_mu1 | ratio_alpha")->capture_default_str();
  run_cmd->add_option("--m", run_opts.m, "Matrix power of the rbb_like regularizer")->capture_default_str();
  run_cmd->add_option("--delay", run_opts.delay, "Delay j of the delayed rule")->capture_default_str();
  run_cmd->add_option("--power", run_opts.power, "Power rho of the delayed rule")->capture_default_str();
  run_cmd->add_option("--tol", run_opts.tol, "Relative gradient tolerance")->capture_default_str();
  run_cmd->add_option("--max-iters", run_opts.max_iters, "Maximum number of steps")->capture_default_str();
  run_cmd->add_option("--x0", run_opts.x0, "Value of every x0 entry")->capture_default_str();
  run_cmd->add_option("--alpha0", run_opts.alpha0, "Fixed first inverse step (default: steepest descent)");
  run_cmd->add_option("--gradient-mode", run_opts.gradient_mode, "iterates | recursive")
      ->check(CLI::IsMember({"iterates", "recursive"}))
      ->capture_default_str();
  run_cmd->add_option("--out", run_opts.out, "Output directory")->capture_default_str();

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run every (problem, policy) pair of a sweep config");
  sweep_cmd->add_option("--config", sweep.config, "Sweep config JSON")->required();
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--out", sweep.out, "Output directory")->capture_default_str();

  RootsOptions roots;
  auto* roots_cmd = app.add_subcommand("roots", "Characteristic roots as JSON");
  roots_cmd->add_option("--d", roots.d, "Degree of q^d - q^(d-1) + 2")->check(CLI::Range(2, 64));
  roots_cmd->add_flag("--rbb", roots.rbb, "Roots of q^2 - q/sqrt(2) + 1");

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Oscillation, recursion and descent reports for a trace");
  analyze_cmd->add_option("--trace", analyze.trace, "Trace CSV")->required();
  analyze_cmd->add_option("--problem", analyze.problem, "Problem JSON (enables the recursion check)");
  analyze_cmd->add_option("--window", analyze.window, "Amplitude window")->capture_default_str();
  analyze_cmd->add_option("--fraction", analyze.fraction, "Leading share of rows in the descent table")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (*gen_cmd) return cmd_gen(gen, *gen_cmd);
    if (*run_cmd) return cmd_run(run_opts, *run_cmd);
    if (*sweep_cmd) return cmd_sweep(sweep, *sweep_cmd);
    if (*roots_cmd) return cmd_roots(roots);
    if (*analyze_cmd) return cmd_analyze(analyze);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "gradlab: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
