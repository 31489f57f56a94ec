#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvcrb/geometry.hpp"

namespace curvcrb {

/// Curvature correction along one direction v:
/// v^T (Sigma - J^-1) v >= R(v) = N(v)^2 / D(v).
struct DirectionalBound {
  VectorXd v;
  VectorXd v_tilde;  // G^-1 v
  double N = 0.0;    // <Z_v, Pi_v>
  double D = 0.0;    // ||Pi_v||^2, clamped at 0
  double R = 0.0;    // N^2 / D, or 0 on degenerate directions
  bool degenerate = false;
};

/// Remark-style rank-1 case: Pi_v = h(v) phi for a single normal phi, giving
/// the exact correction Delta = a a^T / ||phi||^2.
struct ExactCorrection {
  bool applies = false;
  MatrixXd Delta;
  VectorXd a;
  double c = 0.0;  // ||phi||^2 (top eigenvalue of G_N)
  VectorXd u;      // unit top eigenvector of G_N
  double rank_ratio = 0.0;          // lambda_2 / lambda_1
  double alignment_residual = 0.0;  // ||C - (C u) u^T||_F / ||C||_F
};

/// J^-1 for symmetric positive definite J.
MatrixXd classical_crb(const MatrixXd& J);

/// Weighted quadratic monomials s_alpha = w_alpha v~_i v~_j over PairIndex order.
VectorXd quadratic_coordinates(const PairIndex& idx, const VectorXd& v_tilde);

DirectionalBound directional_bound(const GeometryReport& report, const VectorXd& v);

ExactCorrection exact_matrix_correction(const GeometryReport& report, double tol = 1e-8);

/// Either explicit directions or `count` seeded uniform unit directions.
struct SweepSpec {
  std::vector<VectorXd> directions;
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

std::vector<DirectionalBound> directional_sweep(const GeometryReport& report, const SweepSpec& spec);

/// CSV with columns v1..vd,N,D,R,degenerate and, when `excess` (= Sigma - J^-1)
/// is given, gap = v^T excess v.
std::string sweep_csv(const std::vector<DirectionalBound>& sweep, const std::optional<MatrixXd>& excess = std::nullopt);

}  // namespace curvcrb
