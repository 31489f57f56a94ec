#include "curvcrb/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <utility>

#include "curvcrb/errors.hpp"

namespace curvcrb {

ParameterPoint::ParameterPoint(VectorXd theta) : theta_(std::move(theta)) {
  if (theta_.size() < 1) throw DomainError("parameter point must have dimension >= 1");
  if (!theta_.allFinite()) throw DomainError("parameter point has nonfinite entries");
}

ParameterPoint::ParameterPoint(std::initializer_list<double> values)
    : ParameterPoint(VectorXd::Map(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

namespace {

void require_positive_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive and finite");
}

void require_nonzero_alpha(double alpha) {
  if (alpha == 0.0 || !std::isfinite(alpha)) throw DomainError("alpha must be nonzero and finite");
}

void require_dim(const VectorXd& theta, int d, const char* what) {
  if (theta.size() != d) throw DomainError(std::string(what) + ": parameter dimension mismatch");
}

}  // namespace

ModelSpec gaussian_mean_model(std::string name, int param_dim, int sample_dim, double sigma,
                              std::function<MeanDerivatives(const VectorXd&)> mean) {
  require_positive_sigma(sigma);
  if (param_dim < 1 || sample_dim < 1) throw DomainError("model dimensions must be >= 1");

  const double var = sigma * sigma;
  ModelSpec model;
  model.name = std::move(name);
  model.param_dim = param_dim;
  model.sample_dim = sample_dim;

  model.log_density = [=](SampleRef x, const VectorXd& theta) {
    const VectorXd r = x - mean(theta).value;
    return -0.5 * sample_dim * std::log(2.0 * std::numbers::pi * var) - r.squaredNorm() / (2.0 * var);
  };
  model.score = [=](SampleRef x, const VectorXd& theta) -> VectorXd {
    const MeanDerivatives mu = mean(theta);
    return mu.jacobian.transpose() * (x - mu.value) / var;
  };
  model.score_jacobian = [=](SampleRef x, const VectorXd& theta) -> MatrixXd {
    const MeanDerivatives mu = mean(theta);
    const VectorXd r = x - mu.value;
    MatrixXd k = -mu.jacobian.transpose() * mu.jacobian;
    for (int i = 0; i < param_dim; ++i)
      for (int j = 0; j < param_dim; ++j) k(i, j) += r.dot(mu.second(i, j));
    return k / var;
  };
  model.sampler = [=](const VectorXd& theta, std::size_t count, std::uint64_t seed) -> MatrixXd {
    const VectorXd mu = mean(theta).value;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd draws(static_cast<Eigen::Index>(count), sample_dim);
    for (Eigen::Index r = 0; r < draws.rows(); ++r)
      for (int c = 0; c < sample_dim; ++c) draws(r, c) = mu(c) + sigma * normal(rng);
    return draws;
  };
  model.gaussian = GaussianMeanStructure{sigma, std::move(mean)};
  return model;
}

ModelSpec builtin_curved_gaussian(double sigma, double alpha) {
  require_positive_sigma(sigma);
  require_nonzero_alpha(alpha);
  auto mean = [alpha](const VectorXd& theta) {
    require_dim(theta, 2, "curved-gaussian");
    MeanDerivatives mu;
    mu.value = VectorXd(3);
    mu.value << theta(0), theta(1), alpha * theta(0) * theta(0);
    mu.jacobian = MatrixXd::Zero(3, 2);
    mu.jacobian(0, 0) = 1.0;
    mu.jacobian(1, 1) = 1.0;
    mu.jacobian(2, 0) = 2.0 * alpha * theta(0);
    mu.hessian.assign(4, VectorXd::Zero(3));
    mu.hessian[0](2) = 2.0 * alpha;
    return mu;
  };
  return gaussian_mean_model("curved-gaussian", 2, 3, sigma, mean);
}

ModelSpec builtin_curved_gaussian_1d(double sigma, double alpha) {
  require_positive_sigma(sigma);
  require_nonzero_alpha(alpha);
  auto mean = [alpha](const VectorXd& theta) {
    require_dim(theta, 1, "curved-gaussian-1d");
    MeanDerivatives mu;
    mu.value = VectorXd(2);
    mu.value << theta(0), alpha * theta(0) * theta(0);
    mu.jacobian = MatrixXd(2, 1);
    mu.jacobian << 1.0, 2.0 * alpha * theta(0);
    mu.hessian.assign(1, VectorXd::Zero(2));
    mu.hessian[0](1) = 2.0 * alpha;
    return mu;
  };
  return gaussian_mean_model("curved-gaussian-1d", 1, 2, sigma, mean);
}

ModelSpec builtin_linear_gaussian(const MatrixXd& design, double sigma) {
  if (design.rows() < design.cols() || design.cols() < 1)
    throw DomainError("linear-gaussian design must be n x d with n >= d >= 1");
  if (Eigen::FullPivLU<MatrixXd>(design).rank() < design.cols())
    throw DomainError("linear-gaussian design must have full column rank");
  const int d = static_cast<int>(design.cols());
  const int n = static_cast<int>(design.rows());
  auto mean = [design, d, n](const VectorXd& theta) {
    require_dim(theta, d, "linear-gaussian");
    MeanDerivatives mu;
    mu.value = design * theta;
    mu.jacobian = design;
    mu.hessian.assign(static_cast<std::size_t>(d * d), VectorXd::Zero(n));
    return mu;
  };
  return gaussian_mean_model("linear-gaussian", d, n, sigma, mean);
}

MatrixXd eval_score_jacobian_fd(const ModelSpec& model, SampleRef x, const VectorXd& theta,
                                std::optional<double> step) {
  if (step && !(*step > 0.0 && std::isfinite(*step)))
    throw DomainError("finite-difference step must be positive");
  const Eigen::Index d = theta.size();
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  MatrixXd m(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = step ? *step : base * std::max(1.0, std::abs(theta(j)));
    VectorXd plus = theta, minus = theta;
    plus(j) += h;
    minus(j) -= h;
    // row j holds d_j Y_i; symmetrized below
    m.row(j) = ((model.score(x, plus) - model.score(x, minus)) / (plus(j) - minus(j))).transpose();
  }
  MatrixXd sym = 0.5 * (m + m.transpose());
  if (!sym.allFinite()) throw NumericalError("finite-difference score Jacobian is not finite");
  return sym;
}

ModelSpec with_fd_jacobian(ModelSpec model) {
  ModelSpec copy = model;
  copy.score_jacobian = [base = std::move(model)](SampleRef x, const VectorXd& theta) {
    return eval_score_jacobian_fd(base, x, theta);
  };
  copy.jacobian_by_fd = true;
  return copy;
}

ModelSpec reparameterize(const ModelSpec& model, const MatrixXd& A) {
  if (A.rows() != model.param_dim || A.cols() != model.param_dim)
    throw DomainError("reparameterization matrix must be d x d");
  Eigen::FullPivLU<MatrixXd> lu(A);
  if (!lu.isInvertible()) throw DomainError("reparameterization matrix must be invertible");
  const MatrixXd inv = lu.inverse();
  const int d = model.param_dim;

  ModelSpec out = model;
  out.name = model.name + "[reparameterized]";
  out.log_density = [base = model.log_density, inv](SampleRef x, const VectorXd& theta) {
    return base(x, inv * theta);
  };
  out.score = [base = model.score, inv](SampleRef x, const VectorXd& theta) -> VectorXd {
    return inv.transpose() * base(x, inv * theta);
  };
  out.score_jacobian = [base = model.score_jacobian, inv](SampleRef x, const VectorXd& theta) -> MatrixXd {
    return inv.transpose() * base(x, inv * theta) * inv;
  };
  out.sampler = [base = model.sampler, inv](const VectorXd& theta, std::size_t count, std::uint64_t seed) {
    return base(inv * theta, count, seed);
  };
  if (model.gaussian) {
    out.gaussian->mean = [base = model.gaussian->mean, inv, d](const VectorXd& theta) {
      MeanDerivatives mu = base(inv * theta);
      MeanDerivatives t;
      t.value = mu.value;
      t.jacobian = mu.jacobian * inv;
      t.hessian.assign(static_cast<std::size_t>(d * d), VectorXd::Zero(mu.value.size()));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l)
              t.hessian[static_cast<std::size_t>(i * d + j)] += inv(k, i) * inv(l, j) * mu.second(k, l);
      return t;
    };
  }
  return out;
}

EstimatorSpec affine_estimator(std::string name, AffineMap affine, ParameterPoint claimed,
                               std::optional<MatrixXd> covariance) {
  if (affine.linear.rows() != affine.offset.size())
    throw DomainError("affine estimator: offset length must equal output dimension");
  if (affine.linear.rows() != claimed.dim())
    throw DomainError("affine estimator: output dimension must equal parameter dimension");
  EstimatorSpec est;
  est.name = std::move(name);
  est.map = [linear = affine.linear, offset = affine.offset](SampleRef x) -> VectorXd {
    return linear * x + offset;
  };
  est.claimed_unbiased_at = std::move(claimed);
  est.closed_form_covariance = std::move(covariance);
  est.affine = std::move(affine);
  return est;
}

EstimatorSpec builtin_gamma_estimator(double gamma, const CurvedGaussianParams& model,
                                      const ParameterPoint& theta) {
  require_positive_sigma(model.sigma);
  if (theta.dim() != 2) throw DomainError("gamma estimator expects a 2-dimensional parameter");
  if (!std::isfinite(gamma)) throw DomainError("gamma must be finite");
  AffineMap affine{MatrixXd::Zero(2, 3), VectorXd::Zero(2)};
  affine.linear(0, 0) = 1.0;
  affine.linear(1, 1) = 1.0;
  affine.linear(1, 2) = gamma;
  affine.offset(1) = -gamma * model.alpha * theta[0] * theta[0];
  const double s2 = model.sigma * model.sigma;
  MatrixXd cov = MatrixXd::Zero(2, 2);
  cov(0, 0) = s2;
  cov(1, 1) = s2 * (1.0 + gamma * gamma);
  return affine_estimator("gamma", std::move(affine), theta, cov);
}

EstimatorSpec builtin_gamma_estimator_1d(double gamma, const CurvedGaussianParams& model,
                                         const ParameterPoint& theta) {
  require_positive_sigma(model.sigma);
  if (theta.dim() != 1) throw DomainError("scalar gamma estimator expects a 1-dimensional parameter");
  AffineMap affine{MatrixXd(1, 2), VectorXd(1)};
  affine.linear << 1.0, gamma;
  affine.offset << -gamma * model.alpha * theta[0] * theta[0];
  MatrixXd cov(1, 1);
  cov << model.sigma * model.sigma * (1.0 + gamma * gamma);
  return affine_estimator("gamma-1d", std::move(affine), theta, cov);
}

EstimatorSpec least_squares_estimator(const MatrixXd& design, double sigma, const ParameterPoint& theta) {
  require_positive_sigma(sigma);
  if (design.cols() != theta.dim()) throw DomainError("least squares: design/parameter mismatch");
  const MatrixXd gram = design.transpose() * design;
  const MatrixXd gram_inv = gram.ldlt().solve(MatrixXd::Identity(gram.rows(), gram.cols()));
  AffineMap affine{gram_inv * design.transpose(), VectorXd::Zero(design.cols())};
  return affine_estimator("least-squares", std::move(affine), theta, MatrixXd(sigma * sigma * gram_inv));
}

EstimatorSpec transform_estimator(const EstimatorSpec& estimator, const MatrixXd& A) {
  const Eigen::Index d = estimator.claimed_unbiased_at.dim();
  if (A.rows() != d || A.cols() != d) throw DomainError("estimator transform must be d x d");
  EstimatorSpec out;
  out.name = estimator.name + "[transformed]";
  out.map = [base = estimator.map, A](SampleRef x) -> VectorXd { return A * base(x); };
  out.claimed_unbiased_at = ParameterPoint(A * estimator.claimed_unbiased_at.theta());
  if (estimator.closed_form_covariance)
    out.closed_form_covariance = A * *estimator.closed_form_covariance * A.transpose();
  if (estimator.affine) out.affine = AffineMap{A * estimator.affine->linear, A * estimator.affine->offset};
  return out;
}

}  // namespace curvcrb
