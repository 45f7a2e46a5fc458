#include "gradlab/recurrence.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gradlab/errors.hpp"

namespace gradlab {
namespace {

using cd = std::complex<double>;

struct Eval {
  cd value;
  cd derivative;
};

// Horner with the leading coefficient 1.
Eval horner(std::span<const double> coeffs, cd q) {
  cd p = 1.0;
  cd dp = 0.0;
  for (double c : coeffs) {
    dp = dp * q + p;
    p = p * q + c;
  }
  return {p, dp};
}

double residual_bound(cd q, std::size_t degree) {
  return 1e-10 * std::max(1.0, std::pow(std::abs(q), static_cast<double>(degree)));
}

cd polish(std::span<const double> coeffs, cd q) {
  for (int it = 0; it < 8; ++it) {
    const Eval e = horner(coeffs, q);
    if (e.derivative == cd(0.0)) break;
    const cd next = q - e.value / e.derivative;
    // Only keep steps that do not make the residual worse.
    if (!(std::abs(horner(coeffs, next).value) <= std::abs(e.value))) break;
    if (next == q) break;
    q = next;
  }
  return q;
}

}  // namespace

CharacteristicRootSet polynomial_roots(std::span<const double> coeffs) {
  const auto d = static_cast<Eigen::Index>(coeffs.size());
  if (d < 1) throw InvalidSpec("polynomial degree must be >= 1");

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) companion(0, j) = -coeffs[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < d; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("companion eigenvalue iteration did not converge",
                           std::numeric_limits<double>::infinity());
  }

  CharacteristicRootSet out;
  out.d = static_cast<int>(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    cd q = polish(coeffs, solver.eigenvalues()(i));
    // Snap numerically real roots onto the axis and re-polish there.
    if (std::abs(q.imag()) <= 1e-12 * std::max(1.0, std::abs(q))) q = polish(coeffs, cd(q.real(), 0.0));
    out.roots.push_back(q);
  }
  std::sort(out.roots.begin(), out.roots.end(),
            [](const cd& a, const cd& b) { return std::arg(a) < std::arg(b); });

  double worst = 0.0;
  bool ok = true;
  for (const cd& q : out.roots) {
    const double res = std::abs(horner(coeffs, q).value);
    out.residuals.push_back(res);
    out.moduli.push_back(std::abs(q));
    worst = std::max(worst, res);
    if (!(res <= residual_bound(q, coeffs.size()))) ok = false;
  }
  if (!ok) throw NumericalFailure("root residual above tolerance", worst);
  return out;
}

CharacteristicRootSet char_roots(int d) {
  if (d < 2 || d > 64) throw InvalidSpec("characteristic degree must be in [2, 64]");
  std::vector<double> coeffs(static_cast<std::size_t>(d), 0.0);
  coeffs.front() = -1.0;
  coeffs.back() = 2.0;
  return polynomial_roots(coeffs);
}

double rbb_theta() { return std::acos(1.0 / std::sqrt(8.0)); }

CharacteristicRootSet rbb_char_roots() {
  const double c[] = {-1.0 / std::numbers::sqrt2, 1.0};
  CharacteristicRootSet out = polynomial_roots(c);
  out.theta = rbb_theta();
  return out;
}

std::size_t recurrence_order(const RecurrenceModel& model) {
  if (const auto* dl = std::get_if<DelayedLog>(&model.kind)) {
    if (dl->d < 1) throw InvalidSpec("delayed recurrence order must be >= 1");
    return static_cast<std::size_t>(dl->d);
  }
  return 2;
}

RecurrenceSeries simulate_recurrence(const RecurrenceModel& model, std::size_t steps) {
  const std::size_t order = recurrence_order(model);
  if (model.initial.size() != order) {
    throw InvalidSpec("recurrence needs exactly " + std::to_string(order) + " initial values");
  }
  if (steps < 1) throw InvalidSpec("steps must be >= 1");

  RecurrenceSeries out;
  out.y = model.initial;
  const auto* forced = std::get_if<ForcedLog>(&model.kind);
  for (std::size_t s = 0; s < steps; ++s) {
    if (forced && s >= forced->forcing.size()) break;
    // y_{s+order} from y_{s+order-1} and y_s
    double next = out.y[s + order - 1] - 2.0 * out.y[s];
    if (forced) next += forced->forcing[s];
    out.y.push_back(next);
  }
  for (double y : out.y) {
    const double r = std::exp(y);
    if (!std::isfinite(r)) {
      out.overflow = true;
      break;
    }
    out.r.push_back(r);
  }
  return out;
}

ClosedFormCoefficients bb1_closed_form_coefficients(double y0, double y1) {
  const double theta = rbb_theta();
  ClosedFormCoefficients c;
  c.a = y0;
  c.b = (y1 / std::numbers::sqrt2 - c.a * std::cos(theta)) / std::sin(theta);
  return c;
}

double bb1_closed_form(double y0, double y1, long k) {
  const auto c = bb1_closed_form_coefficients(y0, y1);
  const double theta = rbb_theta();
  const double kk = static_cast<double>(k);
  return std::pow(std::numbers::sqrt2, kk) * (c.a * std::cos(kk * theta) + c.b * std::sin(kk * theta));
}

double particular_solution(std::span<const double> forcing, long k) {
  const double theta = rbb_theta();
  const long last = std::min<long>(k - 1, static_cast<long>(forcing.size()) - 1);
  double sum = 0.0;
  for (long j = 0; j <= last; ++j) {
    sum += forcing[static_cast<std::size_t>(j)] * std::sin(static_cast<double>(k - j - 1) * theta);
  }
  return sum / std::sin(theta);
}

std::optional<RecurrenceComparison> trace_vs_recurrence(std::span<const std::optional<double>> r,
                                                        const RecurrenceModel& model, std::size_t max_window) {
  const std::size_t order = recurrence_order(model);
  auto usable = [&](std::size_t i) { return r[i] && *r[i] > 0.0 && std::isfinite(*r[i]); };

  std::optional<std::size_t> start;
  for (std::size_t i = 0; i + order <= r.size(); ++i) {
    bool all = true;
    for (std::size_t j = i; j < i + order; ++j) all = all && usable(j);
    if (all) {
      start = i;
      break;
    }
  }
  if (!start) return std::nullopt;

  std::size_t window = 0;
  while (*start + order + window < r.size() && window < max_window && usable(*start + order + window)) ++window;
  if (const auto* forced = std::get_if<ForcedLog>(&model.kind)) window = std::min(window, forced->forcing.size());

  RecurrenceComparison out;
  out.seed_offset = *start;
  out.seed_shifted = *start > 0;
  out.window = window;
  if (window == 0) return out;

  RecurrenceModel seeded = model;
  seeded.initial.clear();
  for (std::size_t j = 0; j < order; ++j) seeded.initial.push_back(std::log(*r[*start + j]));
  const RecurrenceSeries sim = simulate_recurrence(seeded, window);

  if (order >= 2) {
    double rho = 0.0;
    if (std::holds_alternative<DelayedLog>(model.kind)) {
      for (double m : char_roots(static_cast<int>(order)).moduli) rho = std::max(rho, m);
    } else {
      rho = std::numbers::sqrt2;
    }
    out.growth = rho;
  }

  double max_diff = 0.0;
  double max_mag = 0.0;
  for (std::size_t t = 0; t < sim.y.size(); ++t) {
    const double scale = std::pow(out.growth, static_cast<double>(t));
    const double observed = std::log(*r[*start + t]);
    max_diff = std::max(max_diff, std::abs(observed - sim.y[t]) / scale);
    max_mag = std::max(max_mag, std::abs(sim.y[t]) / scale);
  }
  out.max_scaled_error = max_mag > 0.0 ? max_diff / max_mag : max_diff;
  return out;
}

}  // namespace gradlab
