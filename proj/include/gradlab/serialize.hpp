#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gradlab/analysis.hpp"
#include "gradlab/quadprob.hpp"
#include "gradlab/recurrence.hpp"
#include "gradlab/solver.hpp"
#include "gradlab/steps.hpp"

namespace gradlab {

using json = nlohmann::ordered_json;

// Problems: {"kind":"spectral"|"dense", "eigenvalues"|"matrix", "x_star", "n"}
json problem_to_json(const QuadraticProblem<double>& problem);
QuadraticProblem<double> problem_from_json(const json& doc);
void write_problem_file(const QuadraticProblem<double>& problem, const std::filesystem::path& path);
QuadraticProblem<double> read_problem_file(const std::filesystem::path& path);

/// FNV-1a 64 of the compact problem JSON, as 16 hex digits.
std::string problem_digest(const QuadraticProblem<double>& problem);

// Policies: {"rule", "tau":{"kind","value"}, "m", "delay", "power"}
json policy_to_json(const StepPolicy& policy);
StepPolicy policy_from_json(const json& doc);

/// "constant:<v>", "ratio_mu1" or "ratio_alpha".
TauSchedule parse_tau(const std::string& text);
std::string tau_to_string(const TauSchedule& schedule);

GradientMode parse_gradient_mode(const std::string& text);

// Traces
inline const std::vector<std::string> kTraceColumns = {"k", "f",  "grad_norm", "alpha",   "tau",
                                                       "r", "xi", "eta",       "eta_bar", "h"};

void write_trace_csv(const IterationTrace<double>& trace, std::ostream& out);
/// Rows only; gradients, status and policy are not part of the CSV. Throws
/// InvalidSpec naming the first missing column.
IterationTrace<double> read_trace_csv(std::istream& in);

json summary_json(const IterationTrace<double>& trace, const QuadraticProblem<double>& problem);

// Reports
json roots_to_json(const CharacteristicRootSet& roots);
json oscillation_to_json(const OscillationReport& report);
json monotonicity_to_json(const MonotonicityReport& report);
json recursion_to_json(const RecursionReport& report);
json descent_to_json(const std::vector<DescentEntry>& table);
json comparison_to_json(const RecurrenceComparison& comparison);

/// %.17g, which reads back to the same double.
std::string format_double(double v);

}  // namespace gradlab
