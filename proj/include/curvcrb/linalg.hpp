#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace curvcrb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of the symmetric part of `m`.
inline double min_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_abs_asymmetry(const MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// Derives an independent 64-bit seed for stream `stream` from a parent seed
/// (splitmix64 finalizer over the combined words).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform direction on the unit sphere via a normalized Gaussian draw.
inline VectorXd random_unit_vector(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(d);
  do {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

}  // namespace curvcrb
