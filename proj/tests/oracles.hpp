#pragma once

// Hand-derived reference values for the curved Gaussian
//   X ~ N((t1, t2, alpha t1^2), sigma^2 I_3),  T = (X1, X2 + gamma (X3 - alpha t1^2)),
// evaluated at t1 = 0, plus small random generators for property tests.
// Nothing here calls into the library.

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd fisher(double sigma) { return MatrixXd::Identity(2, 2) / (sigma * sigma); }

// Pair order (1,1), (1,2), (2,2).
inline MatrixXd normal_gram(double sigma, double alpha) {
  const double s2 = sigma * sigma, s4 = s2 * s2;
  MatrixXd g = MatrixXd::Zero(3, 3);
  g(0, 0) = 3.0 / (16 * s4) + alpha * alpha / s2;
  g(1, 1) = 1.0 / (16 * s4);
  g(2, 2) = 3.0 / (16 * s4);
  g(0, 2) = g(2, 0) = 1.0 / (16 * s4);
  return g;
}

inline MatrixXd error_pairings(double alpha, double gamma) {
  MatrixXd c = MatrixXd::Zero(2, 3);
  c(1, 0) = gamma * alpha;
  return c;
}

inline MatrixXd covariance(double sigma, double gamma) {
  MatrixXd s = MatrixXd::Zero(2, 2);
  s(0, 0) = sigma * sigma;
  s(1, 1) = sigma * sigma * (1 + gamma * gamma);
  return s;
}

inline double directional(double sigma, double alpha, double gamma, double v1, double v2) {
  const double s2 = sigma * sigma, n2 = v1 * v1 + v2 * v2, v14 = std::pow(v1, 4);
  return 16 * s2 * s2 * v2 * v2 * v14 * gamma * gamma * alpha * alpha / (3 * n2 * n2 + 16 * s2 * alpha * alpha * v14);
}

// Random helpers ---------------------------------------------------------

inline VectorXd gaussian_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

inline MatrixXd random_orthogonal(int d, std::mt19937_64& rng) {
  MatrixXd g(d, d);
  for (int j = 0; j < d; ++j) g.col(j) = gaussian_vector(d, rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  return qr.householderQ() * MatrixXd::Identity(d, d);
}

/// Invertible matrix with singular values in [1, cond].
inline MatrixXd random_invertible(int d, double cond, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0, cond);
  VectorXd s(d);
  for (int i = 0; i < d; ++i) s(i) = u(rng);
  s(0) = 1.0;
  if (d > 1) s(d - 1) = cond;
  return random_orthogonal(d, rng) * s.asDiagonal() * random_orthogonal(d, rng).transpose();
}

inline MatrixXd random_spd(int d, std::mt19937_64& rng) {
  MatrixXd b(d, d);
  for (int j = 0; j < d; ++j) b.col(j) = gaussian_vector(d, rng);
  return b * b.transpose() + 0.5 * MatrixXd::Identity(d, d);
}

inline double uniform(double lo, double hi, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace oracle
