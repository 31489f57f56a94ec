#include "curvcrb/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curvcrb/errors.hpp"
#include "curvcrb/linalg.hpp"

namespace curvcrb {

CovarianceEstimate estimate_covariance(const ModelSpec& model, const EstimatorSpec& estimator,
                                       const ParameterPoint& theta, std::size_t n, std::uint64_t seed) {
  if (n < 1000) throw DomainError("estimate_covariance needs at least 1000 samples");
  if (!estimator.map) throw DomainError("estimator has no map");
  const Eigen::Index d = theta.dim();
  const VectorXd th = theta.theta();
  const PairingConfig cfg{MonteCarlo{n, seed}};
  // outputs: Z (d), then Z Z^T column-major (d*d)
  const BatchExpectation res = expect_vector(
      model, theta, d + d * d,
      [&](SampleRef x, Eigen::Ref<VectorXd> out) {
        const VectorXd t = estimator.map(x);
        if (t.size() != d) throw DomainError("estimator output has the wrong dimension");
        if (!t.allFinite()) throw NumericalError("nonfinite estimator value");
        const VectorXd z = t - th;
        out.head(d) = z;
        for (Eigen::Index j = 0; j < d; ++j) out.segment(d + j * d, d) = z * z(j);
      },
      cfg);

  CovarianceEstimate est;
  est.samples = n;
  est.bias = res.values.head(d);
  est.bias_se = res.std_errors.head(d);
  est.sigma_hat = symmetrize(Eigen::Map<const MatrixXd>(res.values.data() + d, d, d));
  est.standard_errors = Eigen::Map<const MatrixXd>(res.std_errors.data() + d, d, d);
  return est;
}

MatrixBoundCheck check_matrix_bound(const MatrixXd& sigma, const MatrixXd& J_inv, const MatrixXd& Delta, double tol) {
  if (sigma.rows() != J_inv.rows() || sigma.rows() != Delta.rows() || sigma.rows() != sigma.cols() ||
      J_inv.rows() != J_inv.cols() || Delta.rows() != Delta.cols())
    throw DomainError("check_matrix_bound: dimension mismatch");
  MatrixBoundCheck out;
  out.margin = min_eigenvalue(sigma - J_inv - Delta);
  out.pass = out.margin >= -tol;
  return out;
}

namespace {

constexpr double kClosedFormTol = 1e-8;
constexpr double kSeTolFactor = 3.0;
constexpr double kBiasSe = 4.0;

}  // namespace

ValidationReport full_validation(const ModelSpec& model, const EstimatorSpec& estimator, const ParameterPoint& theta,
                                 const PairingConfig& cfg, const std::optional<SOSCertificate>& cert,
                                 const SweepSpec& sweep, const ValidationOptions& options) {
  const GeometryReport report = geometry_report(model, estimator, theta, cfg);
  const Eigen::Index d = theta.dim();
  ValidationReport out;
  out.warnings = report.meta.warnings;

  const bool empirical = options.force_empirical || !estimator.closed_form_covariance;
  if (empirical || options.samples > 0) {
    const CovarianceEstimate est =
        estimate_covariance(model, estimator, theta, options.samples, split_seed(options.seed, 0));
    out.sigma_hat = est.sigma_hat;
    out.sample_count = est.samples;
    out.standard_errors = est.standard_errors;
    out.bias = est.bias;
    out.bias_se = est.bias_se;
    for (Eigen::Index p = 0; p < d; ++p)
      if (std::abs(est.bias(p)) > kBiasSe * est.bias_se(p)) {
        out.warnings.push_back("estimator appears biased in coordinate " + std::to_string(p + 1) + ": mean error " +
                               std::to_string(est.bias(p)) + " (SE " + std::to_string(est.bias_se(p)) + ")");
      }
  }
  if (empirical) {
    out.sigma_source = "empirical";
    out.sigma = out.sigma_hat;
    out.tolerance = kSeTolFactor * out.standard_errors.maxCoeff();
  } else {
    out.sigma_source = "closed_form";
    out.sigma = *estimator.closed_form_covariance;
    if (out.sigma.rows() != d || out.sigma.cols() != d) throw DomainError("closed-form covariance has the wrong size");
    out.tolerance = kClosedFormTol;
  }

  const MatrixXd J_inv = classical_crb(report.J);
  out.classical_margin = min_eigenvalue(out.sigma - J_inv);
  out.classical_pass = out.classical_margin >= -out.tolerance;

  out.Delta = cert ? cert->Delta : MatrixXd::Zero(d, d);
  const MatrixBoundCheck mb = check_matrix_bound(out.sigma, J_inv, out.Delta, out.tolerance);
  out.matrix_margin = mb.margin;
  out.matrix_pass = mb.pass;

  const MatrixXd excess = out.sigma - J_inv;
  const std::vector<DirectionalBound> bounds = directional_sweep(report, sweep);
  SlackSummary& s = out.directional_slacks;
  s.count = bounds.size();
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const DirectionalBound& b : bounds) {
    const double slack = b.v.dot(excess * b.v) - b.R;
    s.min = std::min(s.min, slack);
    s.max = std::max(s.max, slack);
    total += slack;
  }
  s.mean = bounds.empty() ? 0.0 : total / static_cast<double>(bounds.size());
  if (bounds.empty()) s.min = s.max = 0.0;
  out.directional_pass = s.min >= -out.tolerance;

  out.passed = out.classical_pass && out.matrix_pass && out.directional_pass;
  return out;
}

}  // namespace curvcrb
