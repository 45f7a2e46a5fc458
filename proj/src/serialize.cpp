#include "gradlab/serialize.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace gradlab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const json& arr, const char* what) {
  if (!arr.is_array()) throw InvalidSpec(std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw InvalidSpec(std::string(what) + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

std::optional<double> parse_cell(const std::string& cell, const std::string& column) {
  if (cell.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) throw InvalidSpec("bad number '" + cell + "' in column " + column);
  return v;
}

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

json tau_to_json(const TauSchedule& s) {
  json j;
  switch (s.kind) {
    case TauKind::Constant:
      j["kind"] = "constant";
      j["value"] = s.value;
      break;
    case TauKind::RatioMu1:
      j["kind"] = "ratio_mu1";
      break;
    case TauKind::RatioAlphaScaled:
      j["kind"] = "ratio_alpha";
      break;
  }
  if (s.fallback != 0.0) j["fallback"] = s.fallback;
  return j;
}

TauSchedule tau_from_json(const json& j) {
  if (!j.is_object()) throw InvalidSpec("tau must be an object");
  const std::string kind = j.value("kind", "");
  TauSchedule s;
  if (kind == "constant") {
    s = TauSchedule::constant(j.value("value", 0.0));
  } else if (kind == "ratio_mu1") {
    s = TauSchedule::ratio_mu1();
  } else if (kind == "ratio_alpha") {
    s = TauSchedule::ratio_alpha_scaled();
  } else {
    throw InvalidSpec("unknown tau kind '" + kind + "'");
  }
  s.fallback = j.value("fallback", 0.0);
  validate(s);
  return s;
}

json optional_array(const std::vector<std::optional<double>>& values) {
  json arr = json::array();
  for (const auto& v : values) arr.push_back(v ? json(*v) : json(nullptr));
  return arr;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// problems

json problem_to_json(const QuadraticProblem<double>& problem) {
  json j;
  if (problem.is_spectral()) {
    j["kind"] = "spectral";
    j["eigenvalues"] = to_std(problem.eigenvalues());
  } else {
    j["kind"] = "dense";
    const Eigen::MatrixXd h = problem.hessian();
    json rows = json::array();
    for (Eigen::Index i = 0; i < h.rows(); ++i) rows.push_back(to_std(h.row(i).transpose()));
    j["matrix"] = rows;
  }
  j["x_star"] = to_std(problem.x_star());
  j["n"] = problem.dim();
  return j;
}

QuadraticProblem<double> problem_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidSpec("problem document must be an object");
  const std::string kind = doc.value("kind", "");
  if (!doc.contains("x_star")) throw InvalidSpec("problem is missing x_star");
  const Eigen::VectorXd x_star = to_eigen(doc["x_star"], "x_star");
  if (doc.contains("n") && doc["n"].get<long>() != x_star.size()) throw InvalidSpec("n does not match x_star");
  if (kind == "spectral") {
    if (!doc.contains("eigenvalues")) throw InvalidSpec("spectral problem is missing eigenvalues");
    return QuadraticProblem<double>::spectral(to_eigen(doc["eigenvalues"], "eigenvalues"), x_star);
  }
  if (kind == "dense") {
    if (!doc.contains("matrix") || !doc["matrix"].is_array()) throw InvalidSpec("dense problem is missing matrix");
    const json& rows = doc["matrix"];
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd row = to_eigen(rows[static_cast<std::size_t>(i)], "matrix row");
      if (row.size() != n) throw InvalidSpec("matrix must be square");
      h.row(i) = row.transpose();
    }
    return QuadraticProblem<double>::dense(h, x_star);
  }
  throw InvalidSpec("unknown problem kind '" + kind + "'");
}

void write_problem_file(const QuadraticProblem<double>& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidSpec("cannot write " + path.string());
  out << problem_to_json(problem).dump(2) << "\n";
}

QuadraticProblem<double> read_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidSpec(path.string() + ": " + e.what());
  }
  return problem_from_json(doc);
}

std::string problem_digest(const QuadraticProblem<double>& problem) {
  const std::string text = problem_to_json(problem).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

// ---------------------------------------------------------------------------
// policies

json policy_to_json(const StepPolicy& policy) {
  return std::visit(overloaded{
                        [](const SteepestDescent&) { return json{{"rule", "sd"}}; },
                        [](const BB1&) { return json{{"rule", "bb1"}}; },
                        [](const BB2&) { return json{{"rule", "bb2"}}; },
                        [](const RBB& p) { return json{{"rule", "rbb"}, {"tau", tau_to_json(p.schedule)}}; },
                        [](const RBBLike& p) {
                          return json{{"rule", "rbb_like"}, {"tau", tau_to_json(p.schedule)}, {"m", p.m}};
                        },
                        [](const Delayed& p) {
                          return json{{"rule", "delayed"}, {"delay", p.delay}, {"power", p.power}};
                        },
                    },
                    policy);
}

StepPolicy policy_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidSpec("policy must be an object");
  const std::string rule = doc.value("rule", "");
  const auto schedule = [&] {
    return doc.contains("tau") ? tau_from_json(doc["tau"]) : TauSchedule::ratio_mu1();
  };
  StepPolicy policy;
  if (rule == "sd") {
    policy = SteepestDescent{};
  } else if (rule == "bb1") {
    policy = BB1{};
  } else if (rule == "bb2") {
    policy = BB2{};
  } else if (rule == "rbb") {
    policy = RBB{schedule()};
  } else if (rule == "rbb_like") {
    policy = RBBLike{doc.value("m", 1), schedule()};
  } else if (rule == "delayed") {
    policy = Delayed{doc.value("delay", 1), doc.value("power", 1.0)};
  } else {
    throw InvalidSpec("unknown rule '" + rule + "'");
  }
  validate(policy);
  return policy;
}

TauSchedule parse_tau(const std::string& text) {
  if (text == "ratio_mu1") return TauSchedule::ratio_mu1();
  if (text == "ratio_alpha") return TauSchedule::ratio_alpha_scaled();
  const std::string prefix = "constant:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string body = text.substr(prefix.size());
    const auto v = parse_cell(body, "tau");
    if (!v) throw InvalidSpec("constant tau needs a value");
    TauSchedule s = TauSchedule::constant(*v);
    validate(s);
    return s;
  }
  throw InvalidSpec("tau must be constant:<v>, ratio_mu1 or ratio_alpha");
}

std::string tau_to_string(const TauSchedule& schedule) {
  switch (schedule.kind) {
    case TauKind::Constant:
      return "constant:" + format_double(schedule.value);
    case TauKind::RatioMu1:
      return "ratio_mu1";
    case TauKind::RatioAlphaScaled:
      return "ratio_alpha";
  }
  return "?";
}

GradientMode parse_gradient_mode(const std::string& text) {
  if (text == "iterates") return GradientMode::FromIterates;
  if (text == "recursive") return GradientMode::Recursive;
  throw InvalidSpec("gradient mode must be iterates or recursive");
}

// ---------------------------------------------------------------------------
// traces

void write_trace_csv(const IterationTrace<double>& trace, std::ostream& out) {
  for (std::size_t c = 0; c < kTraceColumns.size(); ++c) out << (c ? "," : "") << kTraceColumns[c];
  out << "\n";
  for (const auto& row : trace.rows) {
    out << row.k << "," << format_double(row.f) << "," << format_double(row.grad_norm) << ",";
    put(out, row.alpha);
    out << ",";
    put(out, row.tau);
    out << ",";
    put(out, row.r);
    out << ",";
    put(out, row.xi);
    out << ",";
    put(out, row.eta);
    out << ",";
    put(out, row.eta_bar);
    out << ",";
    put(out, row.h);
    out << "\n";
  }
}

IterationTrace<double> read_trace_csv(std::istream& in) {
  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw InvalidSpec("trace CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  for (const auto& name : kTraceColumns) {
    if (!index.count(name)) throw InvalidSpec("trace CSV is missing column '" + name + "'");
  }

  IterationTrace<double> trace;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw InvalidSpec("trace CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    }
    const auto cell = [&](const std::string& name) { return parse_cell(cells[index.at(name)], name); };
    TraceRow<double> row;
    const std::string& k_text = cells[index.at("k")];
    long k = 0;
    const auto [ptr, ec] = std::from_chars(k_text.data(), k_text.data() + k_text.size(), k);
    if (ec != std::errc() || ptr != k_text.data() + k_text.size()) {
      throw InvalidSpec("bad iteration index on line " + std::to_string(line_no));
    }
    row.k = k;
    const auto f = cell("f");
    const auto g = cell("grad_norm");
    if (!f || !g) throw InvalidSpec("f and grad_norm are required on line " + std::to_string(line_no));
    row.f = *f;
    row.grad_norm = *g;
    row.alpha = cell("alpha");
    row.tau = cell("tau");
    row.r = cell("r");
    row.xi = cell("xi");
    row.eta = cell("eta");
    row.eta_bar = cell("eta_bar");
    row.h = cell("h");
    if (row.alpha) ++trace.iterations;
    trace.rows.push_back(row);
  }
  return trace;
}

json summary_json(const IterationTrace<double>& trace, const QuadraticProblem<double>& problem) {
  json policy = policy_to_json(trace.policy);
  policy["label"] = policy_label(trace.policy);
  return json{{"status", to_string(trace.status)},
              {"iterations", trace.iterations},
              {"final_grad_norm", trace.final_grad_norm()},
              {"problem_digest", problem_digest(problem)},
              {"policy", policy}};
}

// ---------------------------------------------------------------------------
// reports

json roots_to_json(const CharacteristicRootSet& roots) {
  json arr = json::array();
  for (std::size_t i = 0; i < roots.roots.size(); ++i) {
    arr.push_back(json{{"re", roots.roots[i].real()},
                       {"im", roots.roots[i].imag()},
                       {"modulus", roots.moduli[i]},
                       {"residual", roots.residuals[i]}});
  }
  json j{{"d", roots.d}, {"roots", arr}};
  if (roots.theta) j["theta"] = *roots.theta;
  return j;
}

json oscillation_to_json(const OscillationReport& report) {
  return json{{"defined", report.defined},
              {"sign_changes", report.sign_changes},
              {"mean_run_length", report.mean_run_length},
              {"alternating", report.alternating},
              {"local_minima_indices", report.local_minima_indices},
              {"local_maxima_indices", report.local_maxima_indices},
              {"amplitude_by_window", report.amplitude_by_window}};
}

json monotonicity_to_json(const MonotonicityReport& report) {
  return json{{"quantity", to_string(report.quantity)},
              {"grid", report.grid},
              {"values", optional_array(report.values)},
              {"monotone", report.monotone},
              {"hypothesis_held", report.hypothesis_held}};
}

json recursion_to_json(const RecursionReport& report) {
  return json{{"max_rel_error", report.max_rel_error},
              {"windows_checked", report.windows_checked},
              {"windows_skipped", report.windows_skipped},
              {"windows_ill_conditioned", report.windows_ill_conditioned}};
}

json descent_to_json(const std::vector<DescentEntry>& table) {
  json arr = json::array();
  for (const auto& e : table) arr.push_back(json{{"k", e.k}, {"n", e.n ? json(*e.n) : json(nullptr)}});
  return arr;
}

json comparison_to_json(const RecurrenceComparison& comparison) {
  return json{{"max_scaled_error", comparison.max_scaled_error},
              {"window", comparison.window},
              {"seed_offset", comparison.seed_offset},
              {"seed_shifted", comparison.seed_shifted},
              {"growth", comparison.growth}};
}

}  // namespace gradlab
