#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gradlab/serialize.hpp"

namespace gradlab {

struct SweepProblem {
  std::string name;
  SpectrumSpec spectrum;
  std::vector<double> x_star{1.0};  // one value is broadcast
  std::vector<double> x0{0.0};
};

struct SweepConfig {
  std::vector<SweepProblem> problems;
  std::vector<StepPolicy> policies;
  double rel_tol = 1e-20;
  long max_iters = 100000;
  std::uint64_t seed = 0;  // random spectra without their own seed get seed + problem index
  GradientMode gradient_mode = GradientMode::FromIterates;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// {"problems":[{"name", "spectrum":{"family", ...}, "x_star", "x0"}], "policies":[...],
///  "rel_tol", "max_iters", "seed", "gradient_mode", "threads"}
SweepConfig sweep_config_from_json(const json& doc);
SweepConfig read_sweep_config(const std::filesystem::path& path);

/// "deasmundis" {n, ncond}, "explicit" {eigs}, "random" {n, kappa, seed}.
SpectrumSpec spectrum_from_json(const json& doc, std::uint64_t default_seed);

struct SweepRow {
  std::size_t problem_index = 0;
  std::size_t policy_index = 0;
  std::string problem;
  std::string policy;
  std::optional<IterationTrace<double>> trace;
  std::string error;  // set when the run threw
};

/// Every (problem, policy) pair, problems outermost. Rows may run on several
/// threads but come back in declared order.
std::vector<SweepRow> run_sweep(const SweepConfig& config);

/// results.csv plus traces/<problem>__<policy index>.csv under `out_dir`.
void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& out_dir);

}  // namespace gradlab
