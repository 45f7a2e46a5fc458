#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "gradlab/quadprob.hpp"

namespace testsupport {

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline Eigen::VectorXd normal_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

/// Random spectral problem with a_n = 1 and a_1 = kappa.
inline gradlab::QuadraticProblem<double> random_problem(std::mt19937_64& rng, int n, double kappa) {
  const auto eigs = gradlab::generate_spectrum(gradlab::RandomLogUniform{n, kappa, rng()});
  return gradlab::build_problem<double>(eigs, normal_vector(rng, n));
}

/// Dense SPD matrix Q diag(eigs) Q^T with a random orthogonal Q.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, const Eigen::VectorXd& eigs) {
  const Eigen::Index n = eigs.size();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) m.col(j) = normal_vector(rng, n);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd a = q * eigs.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

}  // namespace testsupport
