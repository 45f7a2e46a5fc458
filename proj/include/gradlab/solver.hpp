#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gradlab/errors.hpp"
#include "gradlab/quadprob.hpp"
#include "gradlab/steps.hpp"

namespace gradlab {

/// How g_{k+1} and the two-point pair (s, y) are produced.
///
/// FromIterates: g_k = grad f(x_k), s = x_k - x_{k-1}, y = g_k - g_{k-1}.
/// Recursive: g_{k+1} = g_k - A g_k / alpha_k (one product per step) and the
/// pair is taken as s = g_{k-1}, y = A g_{k-1}, a positive rescaling of the
/// exact quadratic pair that every two-point rule is invariant to.
enum class GradientMode { FromIterates, Recursive };

enum class RunStatus { Converged, MaxIters, Degenerate };

std::string to_string(RunStatus status);
std::string to_string(GradientMode mode);

struct AlphaInitSD {};
struct AlphaInitFixed {
  double value = 1.0;
};
using AlphaInit = std::variant<AlphaInitSD, AlphaInitFixed>;

template <typename Scalar>
struct RunConfig {
  VectorX<Scalar> x0;
  AlphaInit alpha_init = AlphaInitSD{};
  Scalar rel_tol = Scalar(1e-20);
  long max_iters = 100000;  // alpha evaluations
  GradientMode gradient_mode = GradientMode::FromIterates;
  bool record_gradients = true;
};

/// One trace line. Row k holds g_k's statistics and the alpha_k used to move
/// from x_k to x_{k+1}; the final row has no alpha. Diagnostic columns are
/// filled by the analysis layer.
template <typename Scalar>
struct TraceRow {
  long k = 0;
  Scalar f = Scalar(0);
  Scalar grad_norm = Scalar(0);
  std::optional<Scalar> alpha;
  std::optional<Scalar> tau;
  std::optional<double> r;
  std::optional<double> xi;
  std::optional<double> eta;
  std::optional<double> eta_bar;
  std::optional<double> h;
};

template <typename Scalar>
struct IterationTrace {
  std::vector<TraceRow<Scalar>> rows;
  std::vector<VectorX<Scalar>> gradients;  // g_k per row when recorded
  RunStatus status = RunStatus::MaxIters;
  long iterations = 0;     // number of alpha evaluations
  long tau_underflows = 0;  // ratio schedules that fell back on alpha_{k-2} underflow
  StepPolicy policy = BB1{};

  Scalar final_grad_norm() const { return rows.empty() ? Scalar(0) : rows.back().grad_norm; }

  std::vector<Scalar> alphas() const {
    std::vector<Scalar> out;
    for (const auto& row : rows) {
      if (row.alpha) out.push_back(*row.alpha);
    }
    return out;
  }
};

/// ||g_k|| <= rel_tol ||g_1||.
template <typename Scalar>
bool stop_check(Scalar grad_norm_k, Scalar grad_norm_1, Scalar rel_tol) {
  return grad_norm_k <= rel_tol * grad_norm_1;
}

namespace detail {

template <typename Scalar>
void check_policy_against(const QuadraticProblem<Scalar>& problem, const StepPolicy& policy) {
  validate(policy);
  if (const auto* d = std::get_if<Delayed>(&policy)) {
    if (!problem.is_spectral() && std::floor(d->power) != d->power) {
      throw UnsupportedOperation("non-integer delayed power requires a spectral Hessian");
    }
  }
}

template <typename Scalar>
long history_capacity(const StepPolicy& policy) {
  if (const auto* d = std::get_if<Delayed>(&policy)) return d->delay + 1;
  return 1;
}

}  // namespace detail

/// Runs x_{k+1} = x_k - g_k / alpha_k from config.x0 until the relative
/// gradient test fires, max_iters alphas have been used, or a step turns
/// degenerate. Iterations are numbered from k = 1 (x_1 = x0).
template <typename Scalar>
IterationTrace<Scalar> run(const QuadraticProblem<Scalar>& problem, const StepPolicy& policy,
                           const RunConfig<Scalar>& config) {
  using Vector = VectorX<Scalar>;
  using std::isfinite;

  detail::check_policy_against(problem, policy);
  if (config.x0.size() != problem.dim()) throw InvalidSpec("x0 dimension mismatch");
  if (!config.x0.allFinite()) throw InvalidSpec("x0 must be finite");
  if (!(config.rel_tol > Scalar(0))) throw InvalidSpec("rel_tol must be > 0");
  if (config.max_iters < 1) throw InvalidSpec("max_iters must be >= 1");
  if (const auto* fixed = std::get_if<AlphaInitFixed>(&config.alpha_init); fixed && !(fixed->value > 0.0)) {
    throw InvalidSpec("fixed initial alpha must be > 0");
  }

  IterationTrace<Scalar> trace;
  trace.policy = policy;

  const bool recursive = config.gradient_mode == GradientMode::Recursive;
  Vector x = config.x0;
  Vector g = problem.gradient(x);
  Vector x_prev;
  Vector g_prev;
  const Scalar g1 = g.norm();

  GradientHistory<Scalar> history(static_cast<std::size_t>(detail::history_capacity<Scalar>(policy)));
  std::vector<Scalar> alphas;

  for (long k = 1;; ++k) {
    TraceRow<Scalar> row;
    row.k = k;
    row.f = problem.objective(x);
    row.grad_norm = g.norm();
    if (config.record_gradients) trace.gradients.push_back(g);

    if (!isfinite(row.grad_norm)) {
      trace.rows.push_back(row);
      trace.status = RunStatus::Degenerate;
      break;
    }
    if (stop_check(row.grad_norm, g1, config.rel_tol)) {
      trace.rows.push_back(row);
      trace.status = RunStatus::Converged;
      break;
    }
    if (trace.iterations >= config.max_iters) {
      trace.rows.push_back(row);
      trace.status = RunStatus::MaxIters;
      break;
    }
    history.push(k, g);

    std::optional<Scalar> alpha;
    std::optional<Scalar> tau;
    if (const auto* d = std::get_if<Delayed>(&policy); d && k > 1) {
      alpha = delayed_alpha(problem, history, k, d->delay, Scalar(d->power));
    } else if (std::holds_alternative<SteepestDescent>(policy) && k > 1) {
      alpha = sd_alpha(problem, g);
    } else if (k == 1) {
      if (const auto* fixed = std::get_if<AlphaInitFixed>(&config.alpha_init)) {
        alpha = Scalar(fixed->value);
      } else {
        alpha = sd_alpha(problem, g);
      }
    } else {
      const Vector s = recursive ? g_prev : Vector(x - x_prev);
      const Vector y = recursive ? problem.apply(g_prev) : Vector(g - g_prev);
      const auto schedule_tau = [&](const TauSchedule& schedule) {
        const auto t = next_tau<Scalar>(schedule, std::span<const Scalar>(alphas));
        if (t.underflow) ++trace.tau_underflows;
        return t.value;
      };
      if (std::holds_alternative<BB1>(policy)) {
        alpha = bb1_alpha(s, y);
      } else if (std::holds_alternative<BB2>(policy)) {
        alpha = bb2_alpha(s, y);
      } else if (const auto* p = std::get_if<RBB>(&policy)) {
        tau = schedule_tau(p->schedule);
        alpha = rbb_alpha(s, y, *tau);
      } else if (const auto* p = std::get_if<RBBLike>(&policy)) {
        tau = schedule_tau(p->schedule);
        alpha = rbb_like_alpha<Scalar>(problem, s, y, *tau, p->m);
      }
    }

    if (!alpha || !isfinite(*alpha) || !(*alpha > Scalar(0))) {
      trace.rows.push_back(row);
      trace.status = RunStatus::Degenerate;
      break;
    }
    row.alpha = alpha;
    row.tau = tau;
    trace.rows.push_back(row);
    alphas.push_back(*alpha);
    ++trace.iterations;

    x_prev = x;
    g_prev = g;
    x -= g / *alpha;
    if (recursive) {
      g -= problem.apply(g) / *alpha;
    } else {
      g = problem.gradient(x);
    }
  }
  return trace;
}

}  // namespace gradlab
