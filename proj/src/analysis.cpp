#include "gradlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gradlab {
namespace {

using Wide = long double;

template <typename T>
T sq(T v) {
  return v * v;
}

template <typename T>
bool in_regime(T r, T eta_prev, T lambda, T tau) {
  using std::isfinite;
  return r >= T(0) && tau >= T(0) && eta_prev * lambda > T(1) && isfinite(r) && isfinite(lambda);
}

template <typename T>
struct State {
  T r_prev, eta_prev, eta_bar_prev, eta, eta_bar, lambda;
};

template <typename T>
State<T> widen(const SpectralState& s) {
  return {T(s.r_prev), T(s.eta_prev), T(s.eta_bar_prev), T(s.eta), T(s.eta_bar), T(s.lambda)};
}

template <typename T>
struct HTerms {
  T p, c, q, e, f, g, h;
};

template <typename T>
HTerms<T> h_terms(const State<T>& s) {
  const T lam = s.lambda;
  HTerms<T> t{};
  t.p = T(1) - s.eta * lam + s.r_prev * lam * (s.eta_prev - s.eta);
  t.c = T(1) - s.eta * lam + s.r_prev * s.eta_prev * lam * lam * (s.eta_bar_prev - s.eta);
  t.q = T(1) + s.r_prev;
  t.e = s.r_prev * s.eta_prev * lam + T(1);
  t.f = s.eta * (s.eta_bar - s.eta) * lam * lam;
  t.g = s.eta_prev * lam - T(1);
  t.h = s.eta_prev * lam * (s.eta_bar_prev * lam - T(1));
  return t;
}

template <typename T>
std::optional<T> xi_model(T r, T eta, T eta_bar, T lambda, T tau) {
  using std::isinf;
  if (!in_regime(r, eta, lambda, tau)) return std::nullopt;
  const T el = eta * lambda;
  if (isinf(tau)) return r * el * (eta_bar * lambda - T(1)) / (T(1) + r * eta_bar * el * lambda);
  const T num = r * (el - T(1)) + tau * r * el * (eta_bar * lambda - T(1));
  const T den = T(1) + r * el + tau * (T(1) + r * eta_bar * el * lambda);
  return num / den;
}

template <typename T>
std::optional<T> h_model(const State<T>& s, T tau) {
  using std::isinf;
  if (!in_regime(s.r_prev, s.eta_prev, s.lambda, tau)) return std::nullopt;
  const HTerms<T> t = h_terms(s);
  if (!(t.h > T(0))) return std::nullopt;
  if (isinf(tau)) return (sq(t.c) + sq(t.e) * t.f) / sq(t.h);
  return (sq(t.p + tau * t.c) + sq(t.q + tau * t.e) * t.f) / sq(t.g + tau * t.h);
}

template <typename T>
std::optional<T> beta_model(const State<T>& s, T tau) {
  using std::isinf;
  if (!in_regime(s.r_prev, s.eta_prev, s.lambda, tau)) return std::nullopt;
  const HTerms<T> t = h_terms(s);
  const T lam = s.lambda;
  const T base = T(1) + s.r_prev * s.eta_prev * lam;
  const T slope = T(1) + s.r_prev * s.eta_bar_prev * s.eta_prev * lam * lam;
  if (isinf(tau)) return (sq(t.c) + sq(t.e) * t.f) / sq(slope);
  return (sq(t.p + tau * t.c) + sq(t.q + tau * t.e) * t.f) / sq(base + tau * slope);
}

template <typename T>
std::optional<T> delta_model(T r_prev, T eta_prev, T eta_bar_prev, T lambda, T tau) {
  using std::isinf;
  if (!in_regime(r_prev, eta_prev, lambda, tau)) return std::nullopt;
  const T el = eta_prev * lambda;
  const T slope_den = el * (eta_bar_prev * lambda - T(1));
  if (!(slope_den > T(0))) return std::nullopt;
  if (isinf(tau)) return (r_prev * el + T(1)) / slope_den;
  return (T(1) + r_prev + tau * (r_prev * el + T(1))) / ((el - T(1)) + tau * slope_den);
}

template <typename T>
std::optional<double> narrow(const std::optional<T>& v) {
  if (!v) return std::nullopt;
  return static_cast<double>(*v);
}

// Closed forms only describe two-point rules of the RBB family; BB2 is the
// tau -> infinity end of it.
std::optional<double> model_tau(const StepPolicy& policy, const std::optional<double>& row_tau) {
  if (std::holds_alternative<BB1>(policy)) return 0.0;
  if (std::holds_alternative<BB2>(policy)) return std::numeric_limits<double>::infinity();
  if (std::holds_alternative<RBB>(policy)) return row_tau.value_or(0.0);
  return std::nullopt;
}

std::optional<double> step_condition(const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                     const std::optional<double>& alpha) {
  if (!alpha) return std::nullopt;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double gap = std::abs(*alpha - eigenvalues(i));
    if (gap == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, eigenvalues(i) / gap);
  }
  return worst;
}

// Split quantities of one gradient, accumulated in extended precision.
struct WideSplit {
  Wide tail = 0;
  Wide head2 = 0;
  std::optional<Wide> r;
  std::optional<Wide> eta;
  std::optional<Wide> eta_bar;
};

WideSplit wide_split(const Eigen::VectorXd& scaled_eigs, Wide lambda, const Eigen::VectorXd& coords) {
  const Eigen::Index n = coords.size();
  WideSplit out;
  Wide m1 = 0;
  Wide m2 = 0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Wide a = scaled_eigs(i);
    const Wide g2 = sq(Wide(coords(i)));
    out.head2 += g2;
    m1 += a * g2;
    m2 += a * a * g2;
  }
  out.tail = coords(n - 1);
  if (std::abs(out.tail) >= Wide(kTailFloor)) out.r = out.head2 / sq(out.tail);
  if (out.head2 > 0) {
    out.eta = m1 / (lambda * out.head2);
    out.eta_bar = m2 / (*out.eta * lambda * lambda * out.head2);
  }
  return out;
}

}  // namespace

SpectralSplit split_gradient(const QuadraticProblem<double>& problem,
                             const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (!has_simple_smallest_eigenvalue(problem)) {
    throw InvalidSpec("head/tail split needs a simple smallest eigenvalue");
  }
  const Eigen::VectorXd coords = problem.to_eigenbasis(g);
  const Eigen::Index n = coords.size();
  SpectralSplit out;
  out.head = coords.head(n - 1);
  out.tail = coords(n - 1);
  if (std::abs(out.tail) >= kTailFloor) out.r = out.head.squaredNorm() / sq(out.tail);
  return out;
}

std::optional<EtaPair> eta_pair(const Eigen::Ref<const Eigen::VectorXd>& head_eigenvalues,
                                const Eigen::Ref<const Eigen::VectorXd>& head) {
  const double norm2 = head.squaredNorm();
  if (!(norm2 > 0.0)) return std::nullopt;
  const double lambda = head_eigenvalues(0);
  const Eigen::VectorXd a_head = head_eigenvalues.cwiseProduct(head);
  const double eta = head.dot(a_head) / (lambda * norm2);
  const double eta_bar = a_head.squaredNorm() / (eta * lambda * lambda * norm2);
  return EtaPair{eta, eta_bar};
}

std::optional<EtaPair> eta_pair(const QuadraticProblem<double>& problem,
                                const Eigen::Ref<const Eigen::VectorXd>& head) {
  const Eigen::Index n = problem.dim();
  if (head.size() != n - 1) throw InvalidSpec("head vector must have n - 1 entries");
  return eta_pair(problem.eigenvalues().head(n - 1), head);
}

std::optional<double> xi_formula(double r, double eta, double eta_bar, double lambda, double tau) {
  return xi_model(r, eta, eta_bar, lambda, tau);
}

std::optional<double> h_formula(const SpectralState& state, double tau) {
  return h_model(widen<double>(state), tau);
}

std::optional<double> beta_formula(const SpectralState& state, double tau) {
  return beta_model(widen<double>(state), tau);
}

std::optional<double> delta_formula(double r_prev, double eta_prev, double eta_bar_prev, double lambda,
                                    double tau) {
  return delta_model(r_prev, eta_prev, eta_bar_prev, lambda, tau);
}

std::optional<double> h_upper_bound(double r_prev, double eta_prev, double lambda) {
  if (!in_regime(r_prev, eta_prev, lambda, 0.0)) return std::nullopt;
  return 2.0 * sq(1.0 + r_prev) * sq(lambda) / sq(eta_prev * lambda - 1.0);
}

// ---------------------------------------------------------------------------

std::vector<std::optional<double>> Diagnostics::r_sequence() const {
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.r);
  return out;
}

std::optional<SpectralState> Diagnostics::state_at(std::size_t index) const {
  if (index == 0 || index >= rows.size()) return std::nullopt;
  const auto& prev = rows[index - 1];
  const auto& cur = rows[index];
  if (!prev.r || !prev.eta || !prev.eta_bar || !cur.eta || !cur.eta_bar) return std::nullopt;
  return SpectralState{*prev.r, *prev.eta, *prev.eta_bar, *cur.eta, *cur.eta_bar, lambda};
}

Diagnostics diagnose(const QuadraticProblem<double>& problem, const IterationTrace<double>& trace) {
  if (trace.gradients.size() != trace.rows.size()) {
    throw InvalidSpec("diagnostics need a trace recorded with gradients");
  }
  if (!has_simple_smallest_eigenvalue(problem)) {
    throw InvalidSpec("head/tail split needs a simple smallest eigenvalue");
  }
  const Eigen::VectorXd& eigs = problem.eigenvalues();
  const Eigen::VectorXd scaled = eigs / problem.smallest_eigenvalue();
  const Wide lambda = Wide(problem.largest_eigenvalue()) / Wide(problem.smallest_eigenvalue());

  Diagnostics diag;
  diag.lambda = static_cast<double>(lambda);
  const std::size_t count = trace.rows.size();
  std::vector<WideSplit> splits;
  splits.reserve(count);
  for (const auto& g : trace.gradients) splits.push_back(wide_split(scaled, lambda, problem.to_eigenbasis(g)));

  diag.rows.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& row = diag.rows[i];
    const auto& src = trace.rows[i];
    row.k = src.k;
    const auto tau = model_tau(trace.policy, src.tau);
    row.tau = tau.value_or(src.tau.value_or(0.0));
    row.r = narrow(splits[i].r);
    row.eta = narrow(splits[i].eta);
    row.eta_bar = narrow(splits[i].eta_bar);
    row.step_condition = step_condition(eigs, src.alpha);

    const WideSplit& cur = splits[i];
    if (i + 1 < count) {
      const WideSplit& next = splits[i + 1];
      if (std::abs(cur.tail) >= Wide(kTailFloor)) row.xi = static_cast<double>(std::abs(next.tail / cur.tail));
      if (cur.head2 > 0) row.beta = static_cast<double>(next.head2 / cur.head2);
      if (i > 0 && splits[i - 1].r && cur.r && next.r && *cur.r > 0) {
        row.h = static_cast<double>(sq(*splits[i - 1].r) * *next.r / *cur.r);
      }
    }
    if (i == 0 || !tau) continue;
    const WideSplit& prev = splits[i - 1];
    if (!prev.r || !prev.eta || !prev.eta_bar) continue;
    const Wide t = *tau;
    row.delta = narrow(delta_model(*prev.r, *prev.eta, *prev.eta_bar, lambda, t));
    row.xi_model = narrow(xi_model(*prev.r, *prev.eta, *prev.eta_bar, lambda, t));
    if (!cur.eta || !cur.eta_bar) continue;
    const State<Wide> state{*prev.r, *prev.eta, *prev.eta_bar, *cur.eta, *cur.eta_bar, lambda};
    row.h_model = narrow(h_model(state, t));
    row.beta_model = narrow(beta_model(state, t));
  }
  return diag;
}

void attach(IterationTrace<double>& trace, const Diagnostics& diagnostics) {
  const std::size_t count = std::min(trace.rows.size(), diagnostics.rows.size());
  for (std::size_t i = 0; i < count; ++i) {
    auto& row = trace.rows[i];
    const auto& d = diagnostics.rows[i];
    row.r = d.r;
    row.xi = d.xi;
    row.eta = d.eta;
    row.eta_bar = d.eta_bar;
    row.h = d.h;
  }
}

bool step_resolved(const DiagnosticRow& row, double max_condition) {
  return row.step_condition && *row.step_condition <= max_condition;
}

Diagnostics diagnostics_from_columns(const IterationTrace<double>& trace,
                                     const Eigen::Ref<const Eigen::VectorXd>& eigenvalues) {
  if (eigenvalues.size() < 2) throw InvalidSpec("need at least two eigenvalues");
  Diagnostics diag;
  diag.lambda = eigenvalues(0) / eigenvalues(eigenvalues.size() - 1);
  diag.rows.resize(trace.rows.size());
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& src = trace.rows[i];
    auto& row = diag.rows[i];
    row.k = src.k;
    row.tau = src.tau.value_or(0.0);
    row.r = src.r;
    row.xi = src.xi;
    row.eta = src.eta;
    row.eta_bar = src.eta_bar;
    row.h = src.h;
    row.step_condition = step_condition(eigenvalues, src.alpha);
  }
  for (std::size_t i = 1; i < diag.rows.size(); ++i) {
    const auto& prev = diag.rows[i - 1];
    auto& row = diag.rows[i];
    if (!prev.r || !prev.eta || !prev.eta_bar) continue;
    row.delta = delta_formula(*prev.r, *prev.eta, *prev.eta_bar, diag.lambda, row.tau);
    row.xi_model = xi_formula(*prev.r, *prev.eta, *prev.eta_bar, diag.lambda, row.tau);
    if (const auto state = diag.state_at(i)) {
      row.h_model = h_formula(*state, row.tau);
      row.beta_model = beta_formula(*state, row.tau);
    }
  }
  return diag;
}

RecursionReport verify_recursion(const Diagnostics& diagnostics, double max_condition) {
  RecursionReport report;
  report.rel_errors.resize(diagnostics.rows.size());
  for (std::size_t i = 1; i + 1 < diagnostics.rows.size(); ++i) {
    const auto& row = diagnostics.rows[i];
    if (!row.h || !row.h_model || !(*row.h_model > 0.0)) {
      ++report.windows_skipped;
      continue;
    }
    if (!step_resolved(row, max_condition)) {
      ++report.windows_ill_conditioned;
      continue;
    }
    const double err = std::abs(*row.h - *row.h_model) / *row.h_model;
    report.rel_errors[i] = err;
    report.max_rel_error = std::max(report.max_rel_error, err);
    ++report.windows_checked;
  }
  return report;
}

std::optional<std::size_t> find_descent_N(std::span<const std::optional<double>> r, std::size_t index) {
  if (index >= r.size() || !r[index]) return std::nullopt;
  for (std::size_t j = index + 1; j < r.size(); ++j) {
    if (r[j] && *r[j] <= *r[index]) return j - index;
  }
  return std::nullopt;
}

std::vector<DescentEntry> descent_table(std::span<const std::optional<double>> r, double fraction) {
  std::vector<DescentEntry> out;
  const auto limit = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(r.size())));
  for (std::size_t i = 0; i < limit; ++i) {
    if (!r[i]) continue;
    out.push_back({static_cast<long>(i + 1), find_descent_N(r, i)});
  }
  return out;
}

OscillationReport oscillation_report(std::span<const std::optional<double>> r, std::size_t window) {
  OscillationReport report;
  std::vector<long> rows;
  std::vector<double> values;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] && *r[i] > 0.0 && std::isfinite(*r[i])) {
      rows.push_back(static_cast<long>(i + 1));
      values.push_back(*r[i]);
    }
  }
  report.defined = static_cast<long>(values.size());
  if (values.size() < 10) return report;

  // Sign changes of ln r; exact zeros keep the previous sign.
  std::vector<std::size_t> change_positions;
  int sign = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double y = std::log(values[i]);
    const int s = y > 0.0 ? 1 : (y < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) change_positions.push_back(i);
    sign = s;
  }
  report.sign_changes = static_cast<long>(change_positions.size());
  if (change_positions.size() >= 2) {
    const double span = static_cast<double>(change_positions.back() - change_positions.front());
    report.mean_run_length = span / static_cast<double>(change_positions.size() - 1);
  }
  report.alternating = change_positions.size() + 1 == values.size();

  // Strict extrema over plateau-compressed runs; a plateau reports its first index.
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i;
    while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
    if (i > 0 && j + 1 < values.size()) {
      if (values[i - 1] > values[i] && values[j + 1] > values[i]) report.local_minima_indices.push_back(rows[i]);
      if (values[i - 1] < values[i] && values[j + 1] < values[i]) report.local_maxima_indices.push_back(rows[i]);
    }
    i = j + 1;
  }

  window = std::max<std::size_t>(window, 1);
  for (std::size_t start = 0; start < values.size(); start += window) {
    double amp = 0.0;
    for (std::size_t t = start; t < std::min(values.size(), start + window); ++t) {
      amp = std::max(amp, std::abs(std::log(values[t])));
    }
    report.amplitude_by_window.push_back(amp);
  }
  return report;
}

MonotonicityReport monotonicity_probe(ProbeQuantity quantity, const SpectralState& state,
                                      std::span<const double> tau_grid) {
  MonotonicityReport report;
  report.quantity = quantity;
  report.grid.assign(tau_grid.begin(), tau_grid.end());
  for (double tau : tau_grid) {
    switch (quantity) {
      case ProbeQuantity::Xi:
        report.values.push_back(
            xi_formula(state.r_prev, state.eta_prev, state.eta_bar_prev, state.lambda, tau));
        break;
      case ProbeQuantity::H:
        report.values.push_back(h_formula(state, tau));
        break;
      case ProbeQuantity::Delta:
        report.values.push_back(
            delta_formula(state.r_prev, state.eta_prev, state.eta_bar_prev, state.lambda, tau));
        break;
    }
  }
  if (quantity == ProbeQuantity::H) report.hypothesis_held = state.eta_bar_prev <= state.eta;

  const bool increasing = quantity == ProbeQuantity::Xi;
  report.monotone = std::all_of(report.values.begin(), report.values.end(),
                                [](const auto& v) { return v.has_value(); });
  for (std::size_t i = 1; report.monotone && i < report.values.size(); ++i) {
    const double a = *report.values[i - 1];
    const double b = *report.values[i];
    // Ties within rounding are accepted.
    const double slack = 1e-12 * std::max(std::abs(a), std::abs(b));
    report.monotone = increasing ? (b >= a - slack) : (b <= a + slack);
  }
  return report;
}

std::string to_string(ProbeQuantity quantity) {
  switch (quantity) {
    case ProbeQuantity::Xi:
      return "xi";
    case ProbeQuantity::H:
      return "h";
    case ProbeQuantity::Delta:
      return "delta";
  }
  return "?";
}

}  // namespace gradlab
