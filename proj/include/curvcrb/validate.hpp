#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvcrb/bounds.hpp"
#include "curvcrb/geometry.hpp"
#include "curvcrb/model.hpp"
#include "curvcrb/pairing.hpp"
#include "curvcrb/soscert.hpp"

namespace curvcrb {

struct CovarianceEstimate {
  MatrixXd sigma_hat;        // mean of Z Z^T with Z = T(X) - theta
  MatrixXd standard_errors;  // entrywise
  VectorXd bias;             // mean of Z
  VectorXd bias_se;
  std::size_t samples = 0;
};

/// Seeded Monte Carlo covariance of the estimator error, centered at the true
/// theta. Needs n >= 1000.
CovarianceEstimate estimate_covariance(const ModelSpec& model, const EstimatorSpec& estimator,
                                       const ParameterPoint& theta, std::size_t n, std::uint64_t seed);

struct MatrixBoundCheck {
  double margin = 0.0;  // min eigenvalue of sigma - J_inv - Delta
  bool pass = false;
};

MatrixBoundCheck check_matrix_bound(const MatrixXd& sigma, const MatrixXd& J_inv, const MatrixXd& Delta, double tol);

struct SlackSummary {
  std::size_t count = 0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct ValidationOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  bool force_empirical = false;  // ignore a closed-form covariance
};

struct ValidationReport {
  std::string sigma_source;  // "closed_form" or "empirical"
  MatrixXd sigma;            // covariance used for the checks
  MatrixXd sigma_hat;        // empty when no sampling was done
  std::size_t sample_count = 0;
  MatrixXd standard_errors;
  VectorXd bias;
  VectorXd bias_se;
  double tolerance = 0.0;

  double classical_margin = 0.0;
  bool classical_pass = false;
  MatrixXd Delta;
  double matrix_margin = 0.0;
  bool matrix_pass = false;
  SlackSummary directional_slacks;  // v^T (Sigma - J^-1) v - R(v)
  bool directional_pass = false;

  std::vector<std::string> warnings;
  bool passed = false;
};

ValidationReport full_validation(const ModelSpec& model, const EstimatorSpec& estimator, const ParameterPoint& theta,
                                 const PairingConfig& cfg, const std::optional<SOSCertificate>& cert,
                                 const SweepSpec& sweep, const ValidationOptions& options = {});

}  // namespace curvcrb
