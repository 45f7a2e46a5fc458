#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradlab/quadprob.hpp"
#include "gradlab/solver.hpp"

namespace gradlab {

// Eigen-split diagnostics. A gradient is written in the Hessian eigenbasis as
// g = (g_head, g_tail): g_head holds the components on a_1 >= ... >= a_{n-1},
// g_tail the component on the smallest eigenvalue a_n. All closed-form
// quantities below assume a_n = 1; `lambda` is therefore the ratio a_1 / a_n.

/// Tail components below this magnitude leave r undefined.
inline constexpr double kTailFloor = 1e-290;

/// Steps whose amplification max_i a_i / |alpha - a_i| exceeds this are too
/// close to annihilating a component for the next gradient to be resolved in
/// double precision; windowed identity checks skip them.
inline constexpr double kResolvableCondition = 1e6;

struct SpectralSplit {
  Eigen::VectorXd head;
  double tail = 0.0;
  std::optional<double> r;  // ||head||^2 / tail^2
};

/// Throws InvalidSpec when the smallest eigenvalue is not simple.
SpectralSplit split_gradient(const QuadraticProblem<double>& problem,
                             const Eigen::Ref<const Eigen::VectorXd>& g);

/// Normalized Rayleigh quotients of a head vector against A_1 and A_1^2:
///   eta = h'A_1 h / (lambda |h|^2),  eta_bar = h'A_1^2 h / (eta lambda^2 |h|^2).
struct EtaPair {
  double eta = 0.0;
  double eta_bar = 0.0;
};

/// `head_eigenvalues` are a_1..a_{n-1} (a_1 = lambda first). Empty for a zero head.
std::optional<EtaPair> eta_pair(const Eigen::Ref<const Eigen::VectorXd>& head_eigenvalues,
                                const Eigen::Ref<const Eigen::VectorXd>& head);
std::optional<EtaPair> eta_pair(const QuadraticProblem<double>& problem,
                                const Eigen::Ref<const Eigen::VectorXd>& head);

/// State entering one step k: (r, eta, eta_bar) of g_{k-1}, (eta, eta_bar) of g_k.
struct SpectralState {
  double r_prev = 0.0;
  double eta_prev = 1.0;
  double eta_bar_prev = 1.0;
  double eta = 1.0;
  double eta_bar = 1.0;
  double lambda = 2.0;
};

// The closed forms return nothing outside the regime eta_prev * lambda > 1,
// tau >= 0, r >= 0.

/// Tail contraction |g_{k+1}^(n) / g_k^(n)| predicted from (r, eta, eta_bar) of g_{k-1}.
std::optional<double> xi_formula(double r, double eta, double eta_bar, double lambda, double tau);

/// r_{k-1}^2 r_{k+1} / r_k predicted for one RBB step.
std::optional<double> h_formula(const SpectralState& state, double tau);

/// ||g_{k+1}^head||^2 / ||g_k^head||^2 predicted for one RBB step.
std::optional<double> beta_formula(const SpectralState& state, double tau);

std::optional<double> delta_formula(double r_prev, double eta_prev, double eta_bar_prev, double lambda,
                                    double tau);

/// Upper bound 2 (1 + r)^2 lambda^2 / (eta lambda - 1)^2 on h.
std::optional<double> h_upper_bound(double r_prev, double eta_prev, double lambda);

/// Per-iteration diagnostics. Row k refers to g_k:
///   xi    = |g_{k+1}^(n) / g_k^(n)|
///   h     = r_{k-1}^2 r_{k+1} / r_k
///   beta  = ||g_{k+1}^head||^2 / ||g_k^head||^2
///   delta = closed form at (r_{k-1}, eta_{k-1}, eta_bar_{k-1}, tau_k)
/// The *_model fields hold the closed forms for the same step. When built
/// from gradients, all of them are evaluated in extended precision, since
/// differences such as eta_{k-1} - eta_k cancel badly in double.
struct DiagnosticRow {
  long k = 0;
  double tau = 0.0;
  std::optional<double> r;
  std::optional<double> xi;
  std::optional<double> eta;
  std::optional<double> eta_bar;
  std::optional<double> h;
  std::optional<double> beta;
  std::optional<double> delta;
  std::optional<double> xi_model;
  std::optional<double> h_model;
  std::optional<double> beta_model;
  std::optional<double> step_condition;  // max_i a_i / |alpha_k - a_i|
};

struct Diagnostics {
  double lambda = 0.0;  // a_1 / a_n
  std::vector<DiagnosticRow> rows;

  std::vector<std::optional<double>> r_sequence() const;
  /// Spectral state entering step k (index into rows), when all parts are defined.
  std::optional<SpectralState> state_at(std::size_t index) const;
};

/// Requires a trace recorded with gradients. Rows without tau count as tau = 0.
Diagnostics diagnose(const QuadraticProblem<double>& problem, const IterationTrace<double>& trace);

/// Copies r, xi, eta, eta_bar and h into the trace's diagnostic columns.
void attach(IterationTrace<double>& trace, const Diagnostics& diagnostics);

/// True when row `index` of `diagnostics` describes a step that double
/// precision resolves (step_condition known and <= max_condition).
bool step_resolved(const DiagnosticRow& row, double max_condition = kResolvableCondition);

/// Rebuilds diagnostics from the columns of a trace (e.g. one read from CSV).
/// `eigenvalues` (non-increasing) supply lambda and the step conditions.
/// Models are evaluated in double from the rounded columns.
Diagnostics diagnostics_from_columns(const IterationTrace<double>& trace,
                                     const Eigen::Ref<const Eigen::VectorXd>& eigenvalues);

struct RecursionReport {
  double max_rel_error = 0.0;
  long windows_checked = 0;
  long windows_skipped = 0;          // some r or model value undefined
  long windows_ill_conditioned = 0;  // step not resolved in double
  std::vector<std::optional<double>> rel_errors;  // per row
};

/// Compares the empirical h column with the model at every row where both
/// are defined and the step is resolved. Valid for BB1 / RBB traces.
RecursionReport verify_recursion(const Diagnostics& diagnostics,
                                 double max_condition = kResolvableCondition);

/// Smallest N >= 1 with r[index + N] <= r[index]; undefined entries are skipped.
std::optional<std::size_t> find_descent_N(std::span<const std::optional<double>> r, std::size_t index);

struct DescentEntry {
  long k = 0;
  std::optional<std::size_t> n;
};

/// find_descent_N for each defined row in the leading `fraction` of the sequence.
std::vector<DescentEntry> descent_table(std::span<const std::optional<double>> r, double fraction = 0.8);

struct OscillationReport {
  long defined = 0;
  long sign_changes = 0;
  double mean_run_length = 0.0;
  bool alternating = false;
  std::vector<long> local_minima_indices;  // row numbers k
  std::vector<long> local_maxima_indices;
  std::vector<double> amplitude_by_window;  // max |ln r| per window
};

/// Needs at least 10 defined values; otherwise returns an empty report.
/// Row numbers are 1-based positions in `r`.
OscillationReport oscillation_report(std::span<const std::optional<double>> r, std::size_t window = 10);

enum class ProbeQuantity { Xi, H, Delta };

struct MonotonicityReport {
  ProbeQuantity quantity = ProbeQuantity::Xi;
  std::vector<double> grid;
  std::vector<std::optional<double>> values;
  bool monotone = false;         // increasing for xi, decreasing for h and delta
  bool hypothesis_held = true;   // eta_bar_prev <= eta (only meaningful for h)
};

MonotonicityReport monotonicity_probe(ProbeQuantity quantity, const SpectralState& state,
                                      std::span<const double> tau_grid);

std::string to_string(ProbeQuantity quantity);

}  // namespace gradlab
