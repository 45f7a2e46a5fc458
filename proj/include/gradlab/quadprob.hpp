#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "gradlab/errors.hpp"

namespace gradlab {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Strictly convex quadratic f(x) = 1/2 (x - x*)^T A (x - x*), or
/// equivalently 1/2 x^T A x - b^T x with b = A x*.
///
/// The Hessian is held either as its spectrum (diagonal in the standard
/// basis, eigenvalues non-increasing) or as a dense SPD matrix. Dense
/// problems are diagonalized once at construction so that eigen-split
/// diagnostics can work in the eigenbasis. Instances are immutable.
template <typename Scalar>
class QuadraticProblem {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using ConstRef = Eigen::Ref<const Vector>;

  enum class Representation { Spectral, Dense };
  /// Which vector was supplied; the other is derived from it.
  enum class LinearTerm { Shift, Rhs };

  static QuadraticProblem spectral(Vector eigenvalues, Vector x_star) {
    QuadraticProblem p;
    p.repr_ = Representation::Spectral;
    p.eigenvalues_ = std::move(eigenvalues);
    p.check_spectrum();
    p.set_shift(std::move(x_star));
    return p;
  }

  static QuadraticProblem spectral_from_rhs(Vector eigenvalues, Vector b) {
    QuadraticProblem p;
    p.repr_ = Representation::Spectral;
    p.eigenvalues_ = std::move(eigenvalues);
    p.check_spectrum();
    p.set_rhs(std::move(b));
    return p;
  }

  static QuadraticProblem dense(Matrix hessian, Vector x_star) {
    QuadraticProblem p;
    p.repr_ = Representation::Dense;
    p.hessian_ = std::move(hessian);
    p.check_dense();
    p.set_shift(std::move(x_star));
    return p;
  }

  static QuadraticProblem dense_from_rhs(Matrix hessian, Vector b) {
    QuadraticProblem p;
    p.repr_ = Representation::Dense;
    p.hessian_ = std::move(hessian);
    p.check_dense();
    p.set_rhs(std::move(b));
    return p;
  }

  Eigen::Index dim() const { return eigenvalues_.size(); }
  Representation representation() const { return repr_; }
  bool is_spectral() const { return repr_ == Representation::Spectral; }
  LinearTerm linear_term() const { return term_; }

  /// Eigenvalues in non-increasing order.
  const Vector& eigenvalues() const { return eigenvalues_; }
  Scalar largest_eigenvalue() const { return eigenvalues_(0); }
  Scalar smallest_eigenvalue() const { return eigenvalues_(dim() - 1); }

  const Vector& x_star() const { return x_star_; }
  const Vector& rhs() const { return rhs_; }

  /// Dense Hessian; materialized from the spectrum for spectral problems.
  Matrix hessian() const {
    if (is_spectral()) return eigenvalues_.asDiagonal();
    return hessian_;
  }

  /// Orthonormal eigenvectors, column i paired with eigenvalues()(i).
  Matrix eigenvectors() const {
    if (is_spectral()) return Matrix::Identity(dim(), dim());
    return eigenvectors_;
  }

  /// Coordinates of v in the eigenbasis (identity map for spectral problems).
  Vector to_eigenbasis(ConstRef v) const {
    check_dim(v);
    if (is_spectral()) return v;
    return eigenvectors_.transpose() * v;
  }

  /// A v
  Vector apply(ConstRef v) const {
    check_dim(v);
    if (is_spectral()) return eigenvalues_.cwiseProduct(v);
    return hessian_ * v;
  }

  /// A^m v. Spectral problems accept any real m >= 0 (eigenvalue powers);
  /// dense problems accept integer m >= 0 only (repeated products).
  Vector apply_power(ConstRef v, Scalar m) const {
    check_dim(v);
    using std::floor;
    using std::pow;
    if (!(m >= Scalar(0))) throw InvalidSpec("matrix power must be non-negative");
    if (is_spectral()) {
      Vector out(dim());
      for (Eigen::Index i = 0; i < dim(); ++i) out(i) = pow(eigenvalues_(i), m) * v(i);
      return out;
    }
    if (floor(m) != m) {
      throw UnsupportedOperation("non-integer matrix power requires a spectral Hessian");
    }
    Vector out = v;
    for (long i = 0; i < static_cast<long>(m); ++i) out = hessian_ * out;
    return out;
  }

  Vector gradient(ConstRef x) const {
    check_dim(x);
    if (term_ == LinearTerm::Shift) return apply(x - x_star_);
    return apply(x) - rhs_;
  }

  Scalar objective(ConstRef x) const {
    check_dim(x);
    if (term_ == LinearTerm::Shift) {
      const Vector d = x - x_star_;
      return Scalar(0.5) * d.dot(apply(d));
    }
    return Scalar(0.5) * x.dot(apply(x)) - rhs_.dot(x);
  }

  /// Optimal value, 0 for shift-form problems.
  Scalar optimal_value() const { return objective(x_star_); }

 private:
  QuadraticProblem() = default;

  void check_dim(ConstRef v) const {
    if (v.size() != dim()) {
      throw InvalidSpec("dimension mismatch: expected " + std::to_string(dim()) + ", got " +
                        std::to_string(v.size()));
    }
  }

  void check_spectrum() {
    if (eigenvalues_.size() < 2) throw InvalidSpec("dimension n >= 2 required");
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
      using std::isfinite;
      if (!(eigenvalues_(i) > Scalar(0)) || !isfinite(eigenvalues_(i))) {
        throw InvalidSpec("eigenvalues must be finite and strictly positive");
      }
      if (i > 0 && eigenvalues_(i) > eigenvalues_(i - 1)) {
        throw InvalidSpec("spectral eigenvalues must be in non-increasing order");
      }
    }
  }

  void check_dense() {
    using std::abs;
    if (hessian_.rows() != hessian_.cols()) throw InvalidSpec("Hessian must be square");
    if (hessian_.rows() < 2) throw InvalidSpec("dimension n >= 2 required");
    if (!hessian_.allFinite()) throw InvalidSpec("Hessian must be finite");
    const Scalar scale = hessian_.cwiseAbs().maxCoeff();
    const Scalar asym = (hessian_ - hessian_.transpose()).cwiseAbs().maxCoeff();
    if (asym > Scalar(1e-12) * scale) throw InvalidSpec("Hessian is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian_);
    if (eig.info() != Eigen::Success) throw InvalidSpec("Hessian eigendecomposition failed");
    // Eigen returns ascending order; store descending.
    eigenvalues_ = eig.eigenvalues().reverse();
    eigenvectors_ = eig.eigenvectors().rowwise().reverse();
    if (!(smallest_eigenvalue() > Scalar(0))) {
      throw InvalidSpec("Hessian is not positive definite");
    }
  }

  void set_shift(Vector x_star) {
    check_dim(x_star);
    term_ = LinearTerm::Shift;
    x_star_ = std::move(x_star);
    rhs_ = apply(x_star_);
  }

  void set_rhs(Vector b) {
    check_dim(b);
    term_ = LinearTerm::Rhs;
    rhs_ = std::move(b);
    if (is_spectral()) {
      x_star_ = rhs_.cwiseQuotient(eigenvalues_);
    } else {
      x_star_ = hessian_.llt().solve(rhs_);
    }
  }

  Representation repr_ = Representation::Spectral;
  LinearTerm term_ = LinearTerm::Shift;
  Vector eigenvalues_;
  Matrix hessian_;
  Matrix eigenvectors_;
  Vector x_star_;
  Vector rhs_;
};

template <typename Scalar>
VectorX<Scalar> gradient(const QuadraticProblem<Scalar>& problem,
                         const std::type_identity_t<Eigen::Ref<const VectorX<Scalar>>>& x) {
  return problem.gradient(x);
}

template <typename Scalar>
Scalar objective(const QuadraticProblem<Scalar>& problem,
                 const std::type_identity_t<Eigen::Ref<const VectorX<Scalar>>>& x) {
  return problem.objective(x);
}

template <typename Scalar>
VectorX<Scalar> matvec_power(const QuadraticProblem<Scalar>& problem,
                             const std::type_identity_t<Eigen::Ref<const VectorX<Scalar>>>& v,
                             std::type_identity_t<Scalar> m) {
  return problem.apply_power(v, m);
}

/// Spectral problem from a non-increasing eigenvalue list and the optimum.
template <typename Scalar>
QuadraticProblem<Scalar> build_problem(const std::vector<double>& spectrum,
                                       const VectorX<Scalar>& x_star) {
  if (static_cast<Eigen::Index>(spectrum.size()) != x_star.size()) {
    throw InvalidSpec("spectrum length does not match dim(x_star)");
  }
  VectorX<Scalar> eig(static_cast<Eigen::Index>(spectrum.size()));
  for (std::size_t i = 0; i < spectrum.size(); ++i) eig(static_cast<Eigen::Index>(i)) = Scalar(spectrum[i]);
  return QuadraticProblem<Scalar>::spectral(std::move(eig), x_star);
}

// ---------------------------------------------------------------------------
// Spectrum generators

/// Logarithmically spaced spectrum a_i = 10^((ncond/(n-1)) (n-i)).
struct DeAsmundis {
  int n = 0;
  double ncond = 0.0;  // log10 of the condition number
};

struct ExplicitSpectrum {
  std::vector<double> values;
};

/// log10(a_i) uniform on [0, log10 kappa] with both endpoints pinned.
struct RandomLogUniform {
  int n = 0;
  double kappa = 1.0;
  std::uint64_t seed = 0;
};

using SpectrumSpec = std::variant<DeAsmundis, ExplicitSpectrum, RandomLogUniform>;

/// Eigenvalues described by `spec`, sorted non-increasing.
std::vector<double> generate_spectrum(const SpectrumSpec& spec);

/// True when the smallest eigenvalue is strictly below the next one, which
/// the head/tail gradient split needs.
template <typename Scalar>
bool has_simple_smallest_eigenvalue(const QuadraticProblem<Scalar>& problem) {
  const auto n = problem.dim();
  return problem.eigenvalues()(n - 2) > problem.eigenvalues()(n - 1);
}

}  // namespace gradlab
