#include "gradlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

namespace gradlab {
namespace {

std::vector<double> numbers(const json& doc, const char* what) {
  if (doc.is_number()) return {doc.get<double>()};
  if (!doc.is_array()) throw InvalidSpec(std::string(what) + " must be a number or an array");
  std::vector<double> out;
  for (const auto& v : doc) {
    if (!v.is_number()) throw InvalidSpec(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Eigen::VectorXd expand(const std::vector<double>& values, Eigen::Index n, const char* what) {
  if (values.size() == 1) return Eigen::VectorXd::Constant(n, values[0]);
  if (static_cast<Eigen::Index>(values.size()) != n) {
    throw InvalidSpec(std::string(what) + " length does not match the spectrum");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), n);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

SweepRow run_one(const SweepConfig& config, std::size_t pi, std::size_t qi) {
  const SweepProblem& sp = config.problems[pi];
  SweepRow row;
  row.problem_index = pi;
  row.policy_index = qi;
  row.problem = sp.name;
  row.policy = policy_label(config.policies[qi]);
  try {
    const auto eigs = generate_spectrum(sp.spectrum);
    const auto n = static_cast<Eigen::Index>(eigs.size());
    const auto problem = build_problem<double>(eigs, expand(sp.x_star, n, "x_star"));
    RunConfig<double> rc;
    rc.x0 = expand(sp.x0, n, "x0");
    rc.rel_tol = config.rel_tol;
    rc.max_iters = config.max_iters;
    rc.gradient_mode = config.gradient_mode;
    rc.record_gradients = false;
    row.trace = run(problem, config.policies[qi], rc);
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

SpectrumSpec spectrum_from_json(const json& doc, std::uint64_t default_seed) {
  if (!doc.is_object()) throw InvalidSpec("spectrum must be an object");
  const std::string family = doc.value("family", "");
  if (family == "deasmundis") return DeAsmundis{doc.value("n", 0), doc.value("ncond", 0.0)};
  if (family == "explicit") {
    if (!doc.contains("eigs")) throw InvalidSpec("explicit spectrum needs eigs");
    return ExplicitSpectrum{numbers(doc["eigs"], "eigs")};
  }
  if (family == "random") {
    return RandomLogUniform{doc.value("n", 0), doc.value("kappa", 1.0), doc.value("seed", default_seed)};
  }
  throw InvalidSpec("unknown spectrum family '" + family + "'");
}

SweepConfig sweep_config_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidSpec("sweep config must be an object");
  SweepConfig config;
  config.rel_tol = doc.value("rel_tol", config.rel_tol);
  config.max_iters = doc.value("max_iters", config.max_iters);
  config.seed = doc.value("seed", config.seed);
  config.threads = doc.value("threads", config.threads);
  if (doc.contains("gradient_mode")) config.gradient_mode = parse_gradient_mode(doc["gradient_mode"].get<std::string>());

  if (!doc.contains("problems") || !doc["problems"].is_array() || doc["problems"].empty()) {
    throw InvalidSpec("sweep needs a non-empty problems list");
  }
  if (!doc.contains("policies") || !doc["policies"].is_array() || doc["policies"].empty()) {
    throw InvalidSpec("sweep needs a non-empty policies list");
  }
  for (std::size_t i = 0; i < doc["problems"].size(); ++i) {
    const json& p = doc["problems"][i];
    SweepProblem sp;
    sp.name = p.value("name", "p" + std::to_string(i));
    if (!p.contains("spectrum")) throw InvalidSpec("problem " + sp.name + " needs a spectrum");
    sp.spectrum = spectrum_from_json(p["spectrum"], config.seed + i);
    if (p.contains("x_star")) sp.x_star = numbers(p["x_star"], "x_star");
    if (p.contains("x0")) sp.x0 = numbers(p["x0"], "x0");
    config.problems.push_back(std::move(sp));
  }
  for (const auto& q : doc["policies"]) config.policies.push_back(policy_from_json(q));
  if (!(config.rel_tol > 0.0)) throw InvalidSpec("rel_tol must be > 0");
  if (config.max_iters < 1) throw InvalidSpec("max_iters must be >= 1");
  return config;
}

SweepConfig read_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open " + path.string());
  try {
    return sweep_config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw InvalidSpec(path.string() + ": " + e.what());
  }
}

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
  const std::size_t count = config.problems.size() * config.policies.size();
  std::vector<SweepRow> rows(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      rows[i] = run_one(config, i / config.policies.size(), i % config.policies.size());
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  return rows;
}

void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "traces");
  std::ofstream results(out_dir / "results.csv");
  if (!results) throw InvalidSpec("cannot write " + (out_dir / "results.csv").string());
  results << "problem,policy,status,iterations,final_grad_norm,error\n";
  for (const auto& row : rows) {
    results << csv_field(row.problem) << "," << csv_field(row.policy) << ",";
    if (row.trace) {
      results << to_string(row.trace->status) << "," << row.trace->iterations << ","
              << format_double(row.trace->final_grad_norm()) << ",\n";
      std::ofstream trace(out_dir / "traces" /
                          (row.problem + "__" + std::to_string(row.policy_index) + ".csv"));
      write_trace_csv(*row.trace, trace);
    } else {
      results << "error,,," << csv_field(row.error) << "\n";
    }
  }
}

}  // namespace gradlab
