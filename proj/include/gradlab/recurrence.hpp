#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace gradlab {

// Log-domain difference equations for r_k. With y_k = ln r_k a delay-d
// spectral method on a 2-D problem obeys y_{k+d} = y_{k+d-1} - 2 y_k, whose
// characteristic polynomial is q^d - q^{d-1} + 2.

struct CharacteristicRootSet {
  int d = 0;
  std::vector<std::complex<double>> roots;
  std::vector<double> residuals;  // |p(root)|
  std::vector<double> moduli;
  std::optional<double> theta;  // argument of the upper root, when meaningful
};

/// Roots of the monic polynomial with `coeffs` = (c_{d-1}, ..., c_0), i.e.
/// q^d + c_{d-1} q^{d-1} + ... + c_0. Companion-matrix eigenvalues polished by
/// Newton steps. Throws NumericalFailure when a residual exceeds
/// 1e-10 max(1, |q|^d). Roots are ordered by argument in (-pi, pi].
CharacteristicRootSet polynomial_roots(std::span<const double> coeffs);

/// Roots of q^d - q^{d-1} + 2, 2 <= d <= 64.
CharacteristicRootSet char_roots(int d);

/// Roots e^{+-i theta} of q^2 - q / sqrt(2) + 1.
CharacteristicRootSet rbb_char_roots();

/// arccos(1 / sqrt(8)).
double rbb_theta();

/// y_{k+2} = y_{k+1} - 2 y_k
struct BB1Log {};
/// y_{k+d} = y_{k+d-1} - 2 y_k, d >= 1 (d = 1 is steepest descent: y_{k+1} = -y_k).
struct DelayedLog {
  int d = 2;
};
/// y_{k+2} = y_{k+1} - 2 y_k + m_k; forcing[j] drives the step producing y_{j+2}.
struct ForcedLog {
  std::vector<double> forcing;
};

struct RecurrenceModel {
  std::variant<BB1Log, DelayedLog, ForcedLog> kind;
  std::vector<double> initial;  // y_0 .. y_{order-1}
};

std::size_t recurrence_order(const RecurrenceModel& model);

struct RecurrenceSeries {
  std::vector<double> y;  // initial values followed by `steps` new ones
  std::vector<double> r;  // exp(y), cut at the first overflow
  bool overflow = false;
};

/// Forward recursion in the unscaled log domain. ForcedLog stops early when
/// the forcing runs out.
RecurrenceSeries simulate_recurrence(const RecurrenceModel& model, std::size_t steps);

struct ClosedFormCoefficients {
  double a = 0.0;
  double b = 0.0;
};

/// (A, B) with y_k = sqrt(2)^k (A cos k theta + B sin k theta) through y_0, y_1.
ClosedFormCoefficients bb1_closed_form_coefficients(double y0, double y1);

double bb1_closed_form(double y0, double y1, long k);

/// Variation-of-constants solution of u_{k+2} - u_{k+1}/sqrt(2) + u_k = m_k
/// with u_0 = u_1 = 0: u_k = sum_{j<k} m_j sin((k-j-1) theta) / sin(theta).
double particular_solution(std::span<const double> forcing, long k);

struct RecurrenceComparison {
  double max_scaled_error = 0.0;  // max_k |dy_k| / rho^k over max_k |y_sim_k| / rho^k
  double growth = 1.0;            // rho, the dominant root modulus used for scaling
  std::size_t seed_offset = 0;    // index of the first seeded value
  std::size_t window = 0;         // values compared after the seed
  bool seed_shifted = false;
};

/// Seeds `model` with the first `order` consecutive defined values of ln r
/// (the model's own initial values are ignored) and compares the simulation
/// against the following defined values, up to `max_window` of them.
/// Returns nothing when no seed window exists.
std::optional<RecurrenceComparison> trace_vs_recurrence(std::span<const std::optional<double>> r,
                                                        const RecurrenceModel& model,
                                                        std::size_t max_window = 1000);

}  // namespace gradlab
