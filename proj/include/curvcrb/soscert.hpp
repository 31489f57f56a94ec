#pragma once

// Sum-of-squares certificate for a conservative matrix correction Delta:
//
//   P_Delta(v) = N(v)^2 - (v^T Delta v) D(v) = z(v)^T S z(v),  S >= 0, Delta >= 0,
//
// with z(v) the degree-3 monomials. Coefficients of both sides are matched
// over the degree-6 monomials, giving a small SDP in (Delta, S).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "curvcrb/geometry.hpp"
#include "curvcrb/monomials.hpp"

namespace curvcrb {

struct PolynomialSystem {
  int d = 0;
  MonomialBasis cubic;   // z(v), size M
  MonomialBasis sextic;  // constraint index, size K
  HomogeneousPolynomial numerator;    // N(v), degree 3
  HomogeneousPolynomial denominator;  // D(v), degree 4
  VectorXd nsq_coeffs;                // N(v)^2
  /// K x d(d+1)/2: column for packed Delta entry (i <= j) holds the
  /// coefficients of (w_ij v_i v_j) D(v).
  MatrixXd d_quad_map;
  /// K x M(M+1)/2: column for packed S entry (a <= b) holds the coefficients
  /// of w_ab z_a z_b.
  MatrixXd sos_map;
  MatrixXd Delta0;  // zero
  MatrixXd S0;      // n n^T, n = coefficients of N

  /// Coefficients of P_Delta(v) - z^T S z; zero on a valid certificate.
  VectorXd residual(const MatrixXd& Delta, const MatrixXd& S) const;
};

PolynomialSystem build_system(const GeometryReport& report);

enum class SolverStatus { optimal, max_iter, infeasible_numerics };
enum class SosObjective { trace, zero };

std::string to_string(SolverStatus s);

struct SosSolverOptions {
  SosObjective objective = SosObjective::trace;
  int max_iter = 200;             // Newton steps
  double gap_tol = 1e-10;         // relative to the scaled problem
  double shift = 1e-9;            // cone shift, scaled units
};

struct SOSCertificate {
  MatrixXd Delta;
  MatrixXd S;
  double objective = 0.0;  // trace(Delta)
  double max_coeff_residual = 0.0;
  SolverStatus status = SolverStatus::optimal;
  int iterations = 0;
  double min_eig_delta = 0.0;
  double min_eig_s = 0.0;
  /// The solver's iterate could not be placed exactly on the PSD cones and
  /// the trivial certificate (Delta = 0, S = n n^T) was returned instead.
  bool fallback = false;
  std::vector<double> objective_history;
};

SOSCertificate solve_sos_sdp(const PolynomialSystem& system, const SosSolverOptions& options = {});

struct VerificationReport {
  bool passed = false;
  std::size_t samples = 0;
  double scale = 0.0;  // largest |v|^6 (max|coeff N^2| + |Delta|_F max|coeff D|) seen
  double worst_nonnegativity = 0.0;  // min P_Delta(v) / scale(v)
  double worst_sos_mismatch = 0.0;   // max |P_Delta(v) - z^T S z| / scale(v)
  double worst_bound_excess = 0.0;   // max over non-degenerate v of v^T Delta v - R(v)
  std::size_t degenerate_count = 0;
  /// Degenerate directions (D(v) = 0) with v^T Delta v > 0: outside the
  /// directional guarantee, reported rather than failed.
  std::size_t degenerate_excess_count = 0;
  double worst_degenerate_excess = 0.0;
  std::vector<VectorXd> offending;
};

VerificationReport verify_certificate(const SOSCertificate& cert, const PolynomialSystem& system,
                                      const GeometryReport& report, std::size_t nsamples, std::uint64_t seed);

}  // namespace curvcrb
