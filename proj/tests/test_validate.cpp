#include <doctest.h>

#include <cmath>

#include "curvcrb/errors.hpp"
#include "curvcrb/linalg.hpp"
#include "curvcrb/validate.hpp"
#include "oracles.hpp"

using namespace curvcrb;

namespace {
const PairingConfig kGh{GaussHermite{12}};
}

TEST_CASE("Monte Carlo covariance of the gamma estimator") {
  const double sigma = 1.0, alpha = 1.0, gamma = 1.0;
  const ParameterPoint th{0.0, 0.0};
  const ModelSpec m = builtin_curved_gaussian(sigma, alpha);
  const EstimatorSpec e = builtin_gamma_estimator(gamma, {sigma, alpha}, th);
  const CovarianceEstimate est = estimate_covariance(m, e, th, 100000, 2024);
  const MatrixXd truth = oracle::covariance(sigma, gamma);
  CHECK(est.samples == 100000);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(est.sigma_hat(i, j) - truth(i, j)) <= 4 * est.standard_errors(i, j));
  CHECK(est.bias.cwiseAbs().maxCoeff() <= 4 * est.bias_se.maxCoeff());
  CHECK(est.standard_errors(0, 0) == doctest::Approx(std::sqrt(2.0 / 1e5)).epsilon(0.05));

  const CovarianceEstimate again = estimate_covariance(m, e, th, 100000, 2024);
  CHECK(again.sigma_hat == est.sigma_hat);
  CHECK(estimate_covariance(m, e, th, 100000, 2025).sigma_hat != est.sigma_hat);
  CHECK_THROWS_AS(estimate_covariance(m, e, th, 999, 1), DomainError);
}

TEST_CASE("gamma zero gives the identity covariance") {
  const ParameterPoint th{0.4, -1.0};
  const CovarianceEstimate est = estimate_covariance(builtin_curved_gaussian(1.0, 2.0),
                                                     builtin_gamma_estimator(0.0, {1.0, 2.0}, th), th, 50000, 3);
  CHECK((est.sigma_hat - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 4 * est.standard_errors.maxCoeff());
}

TEST_CASE("matrix bound check") {
  const MatrixXd sigma = oracle::covariance(1.0, 1.0);
  const MatrixXd I = MatrixXd::Identity(2, 2);
  const MatrixBoundCheck zero = check_matrix_bound(sigma, I, MatrixXd::Zero(2, 2), 1e-8);
  CHECK(zero.margin == doctest::Approx(0.0));
  CHECK(zero.pass);
  const MatrixBoundCheck big = check_matrix_bound(sigma, I, 2 * I, 1e-8);
  CHECK(big.margin == doctest::Approx(-2.0));
  CHECK(!big.pass);
  const MatrixBoundCheck tight = check_matrix_bound(I, I, MatrixXd::Zero(2, 2), 0.0);
  CHECK(tight.margin == 0.0);
  CHECK(tight.pass);
  CHECK(check_matrix_bound(I, I, MatrixXd::Zero(2, 2), 1e-3).pass);
  CHECK(!check_matrix_bound(I, I, 0.01 * I, 1e-3).pass);
}

TEST_CASE("full validation of the worked example") {
  const ParameterPoint th{0.0, 0.0};
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  const EstimatorSpec e = builtin_gamma_estimator(1.0, {1.0, 1.0}, th);
  const GeometryReport rep = geometry_report(m, e, th, kGh);
  const PolynomialSystem sys = build_system(rep);
  const SOSCertificate cert = solve_sos_sdp(sys);
  const SweepSpec sweep{{}, 1000, 5};

  ValidationOptions opt;
  opt.samples = 20000;
  opt.seed = 9;
  const ValidationReport closed = full_validation(m, e, th, kGh, cert, sweep, opt);
  CHECK(closed.sigma_source == "closed_form");
  CHECK(closed.passed);
  CHECK(closed.classical_pass);
  CHECK(closed.matrix_pass);
  CHECK(closed.directional_pass);
  CHECK(closed.directional_slacks.count == 1000);
  CHECK(closed.directional_slacks.min >= -1e-9);
  CHECK(closed.sample_count == 20000);
  CHECK(closed.warnings.empty());

  opt.force_empirical = true;
  const ValidationReport emp = full_validation(m, e, th, kGh, cert, sweep, opt);
  CHECK(emp.sigma_source == "empirical");
  CHECK(emp.passed);
  CHECK(emp.tolerance == doctest::Approx(3 * emp.standard_errors.maxCoeff()));

  const ValidationReport no_cert = full_validation(m, e, th, kGh, std::nullopt, sweep, opt);
  CHECK(no_cert.passed);
  CHECK(no_cert.Delta.isZero());
}

TEST_CASE("biased estimator triggers a warning") {
  const ParameterPoint th{0.0, 0.0};
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  EstimatorSpec e = builtin_gamma_estimator(0.0, {1.0, 1.0}, th);
  REQUIRE(e.affine);
  AffineMap shifted = *e.affine;
  shifted.offset(0) += 0.5;
  const EstimatorSpec biased = affine_estimator("shifted", shifted, th);
  ValidationOptions opt;
  opt.samples = 20000;
  opt.seed = 4;
  const ValidationReport r = full_validation(m, biased, th, kGh, std::nullopt, SweepSpec{{}, 100, 1}, opt);
  bool found = false;
  for (const auto& w : r.warnings) found = found || w.find("biased in coordinate 1") != std::string::npos;
  CHECK(found);
  CHECK(r.bias(0) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("efficient estimator on a flat model") {
  const MatrixXd A = MatrixXd::Identity(2, 2);
  const ParameterPoint th{0.2, -0.7};
  const ModelSpec m = builtin_linear_gaussian(A, 0.8);
  const EstimatorSpec e = least_squares_estimator(A, 0.8, th);
  const GeometryReport rep = geometry_report(m, e, th, kGh);
  const SOSCertificate cert = solve_sos_sdp(build_system(rep));
  CHECK(cert.Delta.isZero());
  ValidationOptions opt;
  opt.samples = 10000;
  const ValidationReport r = full_validation(m, e, th, kGh, cert, SweepSpec{{}, 200, 2}, opt);
  CHECK(r.passed);
  CHECK(r.directional_slacks.min >= -1e-9);
  CHECK(std::abs(r.classical_margin) <= 1e-9);
}
