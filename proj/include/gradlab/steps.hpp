#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "gradlab/errors.hpp"
#include "gradlab/quadprob.hpp"

namespace gradlab {

// Step rules return the inverse step size alpha_k of x_{k+1} = x_k - g_k / alpha_k.
// An empty optional is the degenerate signal: a denominator fell below
// kDegenerateFloor (or the gradient vanished) and the caller must stop.

inline constexpr double kDegenerateFloor = 1e-300;

enum class TauKind { Constant, RatioMu1, RatioAlphaScaled };

/// Rule producing the regularization parameter tau_k >= 0 from past alphas.
struct TauSchedule {
  TauKind kind = TauKind::Constant;
  double value = 0.0;     // Constant only
  double fallback = 0.0;  // used while fewer than two alphas are known

  static TauSchedule constant(double tau) { return {TauKind::Constant, tau, 0.0}; }
  static TauSchedule ratio_mu1() { return {TauKind::RatioMu1, 0.0, 0.0}; }
  static TauSchedule ratio_alpha_scaled() { return {TauKind::RatioAlphaScaled, 0.0, 0.0}; }

  friend bool operator==(const TauSchedule&, const TauSchedule&) = default;
};

struct SteepestDescent {
  friend bool operator==(const SteepestDescent&, const SteepestDescent&) = default;
};
struct BB1 {
  friend bool operator==(const BB1&, const BB1&) = default;
};
struct BB2 {
  friend bool operator==(const BB2&, const BB2&) = default;
};
/// Regularized BB: (s'y + tau y'y) / (s's + tau s'y).
struct RBB {
  TauSchedule schedule;
  friend bool operator==(const RBB&, const RBB&) = default;
};
/// RBB with the regularizer weighted by A^m.
struct RBBLike {
  int m = 1;
  TauSchedule schedule;
  friend bool operator==(const RBBLike&, const RBBLike&) = default;
};
/// Rayleigh-type quotient of a retarded gradient g_{v(k)}, v(k) = max(k - delay, 1).
struct Delayed {
  int delay = 0;
  double power = 1.0;
  friend bool operator==(const Delayed&, const Delayed&) = default;
};

using StepPolicy = std::variant<SteepestDescent, BB1, BB2, RBB, RBBLike, Delayed>;

/// Short label such as "bb1", "rbb[ratio_mu1]" or "delayed[j=2,p=1]".
std::string policy_label(const StepPolicy& policy);

/// Throws InvalidSpec on out-of-range parameters.
void validate(const StepPolicy& policy);

inline void validate(const TauSchedule& s) {
  if (s.kind == TauKind::Constant && !(s.value >= 0.0)) {
    throw InvalidSpec("constant tau must be >= 0");
  }
  if (!(s.fallback >= 0.0)) throw InvalidSpec("tau fallback must be >= 0");
}

// ---------------------------------------------------------------------------

// Non-deduced so that plain vectors and expressions bind without naming Scalar.
template <typename Scalar>
using ConstVecRef = std::type_identity_t<Eigen::Ref<const VectorX<Scalar>>>;

namespace detail {
template <typename Scalar>
std::optional<Scalar> checked_quotient(Scalar num, Scalar den) {
  using std::abs;
  if (!(abs(den) >= Scalar(kDegenerateFloor))) return std::nullopt;
  return num / den;
}
}  // namespace detail

/// Exact line search on a quadratic: g'Ag / g'g.
template <typename Scalar>
std::optional<Scalar> sd_alpha(const QuadraticProblem<Scalar>& problem, ConstVecRef<Scalar> g) {
  const VectorX<Scalar> ag = problem.apply(g);
  return detail::checked_quotient(g.dot(ag), g.dot(g));
}

template <typename DerivedS, typename DerivedY>
auto bb1_alpha(const Eigen::MatrixBase<DerivedS>& s, const Eigen::MatrixBase<DerivedY>& y)
    -> std::optional<typename DerivedS::Scalar> {
  return detail::checked_quotient(s.dot(y), s.dot(s));
}

template <typename DerivedS, typename DerivedY>
auto bb2_alpha(const Eigen::MatrixBase<DerivedS>& s, const Eigen::MatrixBase<DerivedY>& y)
    -> std::optional<typename DerivedS::Scalar> {
  return detail::checked_quotient(y.dot(y), s.dot(y));
}

/// Lies in [bb1, bb2), non-decreasing in tau, and equals bb1 at tau = 0.
template <typename DerivedS, typename DerivedY>
auto rbb_alpha(const Eigen::MatrixBase<DerivedS>& s, const Eigen::MatrixBase<DerivedY>& y,
               std::type_identity_t<typename DerivedS::Scalar> tau)
    -> std::optional<typename DerivedS::Scalar> {
  using Scalar = typename DerivedS::Scalar;
  const Scalar sy = s.dot(y);
  return detail::checked_quotient<Scalar>(sy + tau * y.dot(y), s.dot(s) + tau * sy);
}

template <typename Scalar>
std::optional<Scalar> rbb_like_alpha(const QuadraticProblem<Scalar>& problem, ConstVecRef<Scalar> s,
                                     ConstVecRef<Scalar> y, std::type_identity_t<Scalar> tau, int m) {
  if (m < 1) throw InvalidSpec("RBB-like power m must be >= 1");
  const VectorX<Scalar> am_s = problem.apply_power(s, Scalar(m));
  return detail::checked_quotient(s.dot(y) + tau * y.dot(am_s), s.dot(s) + tau * s.dot(am_s));
}

/// Recent gradients keyed by iteration index. Evicts the oldest entry once
/// `capacity` is reached.
template <typename Scalar>
class GradientHistory {
 public:
  explicit GradientHistory(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  void push(long k, VectorX<Scalar> g) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.emplace_back(k, std::move(g));
  }

  bool empty() const { return entries_.empty(); }
  long oldest_index() const { return entries_.front().first; }
  long newest_index() const { return entries_.back().first; }

  /// g_v if still held, otherwise the most delayed gradient available.
  const VectorX<Scalar>& at_or_oldest(long v) const {
    for (const auto& [k, g] : entries_) {
      if (k == v) return g;
    }
    return entries_.front().second;
  }

 private:
  std::size_t capacity_;
  std::deque<std::pair<long, VectorX<Scalar>>> entries_;
};

/// g_v' A^rho g_v / g_v' A^(rho-1) g_v with v = max(k - delay, 1).
template <typename Scalar>
std::optional<Scalar> delayed_alpha(const QuadraticProblem<Scalar>& problem,
                                    const GradientHistory<Scalar>& history, long k, int delay,
                                    std::type_identity_t<Scalar> power) {
  if (delay < 0) throw InvalidSpec("delay must be >= 0");
  if (!(power >= Scalar(1))) throw InvalidSpec("delayed power must be >= 1");
  if (history.empty()) return std::nullopt;
  const long v = std::max<long>(k - delay, 1);
  const VectorX<Scalar>& g = history.at_or_oldest(v);
  const VectorX<Scalar> num_vec = problem.apply_power(g, power);
  const VectorX<Scalar> den_vec = problem.apply_power(g, power - Scalar(1));
  return detail::checked_quotient(g.dot(num_vec), g.dot(den_vec));
}

/// tau_k together with a flag telling whether the fallback was used because
/// alpha_{k-2} underflowed (as opposed to plain warm-up).
template <typename Scalar>
struct TauValue {
  Scalar value = Scalar(0);
  bool underflow = false;
};

/// `alpha_history` holds past alphas oldest first; only the last two matter.
template <typename Scalar>
TauValue<Scalar> next_tau(const TauSchedule& schedule, std::span<const Scalar> alpha_history) {
  using std::abs;
  if (schedule.kind == TauKind::Constant) return {Scalar(schedule.value), false};
  if (alpha_history.size() < 2) return {Scalar(schedule.fallback), false};
  const Scalar prev = alpha_history[alpha_history.size() - 1];
  const Scalar prev2 = alpha_history[alpha_history.size() - 2];
  if (!(abs(prev2) >= Scalar(kDegenerateFloor))) return {Scalar(schedule.fallback), true};
  const Scalar ratio = prev / prev2;
  if (schedule.kind == TauKind::RatioMu1) return {ratio, false};
  return {prev * ratio, false};
}

}  // namespace gradlab
