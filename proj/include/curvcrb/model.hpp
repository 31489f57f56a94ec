#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace curvcrb {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SampleRef = Eigen::Ref<const VectorXd>;

/// A point in parameter space. Always finite, dimension >= 1.
class ParameterPoint {
 public:
  explicit ParameterPoint(VectorXd theta);
  ParameterPoint(std::initializer_list<double> values);

  const VectorXd& theta() const { return theta_; }
  Eigen::Index dim() const { return theta_.size(); }
  double operator[](Eigen::Index i) const { return theta_(i); }

 private:
  VectorXd theta_;
};

/// Mean map of a Gaussian family together with its first two derivatives.
struct MeanDerivatives {
  VectorXd value;                 // mu(theta), length n
  MatrixXd jacobian;              // n x d, column i is d mu / d theta_i
  std::vector<VectorXd> hessian;  // d*d entries, (i, j) at i*d + j

  const VectorXd& second(Eigen::Index i, Eigen::Index j) const {
    return hessian[static_cast<std::size_t>(i * jacobian.cols() + j)];
  }
};

/// Marks a model as X ~ N(mu(theta), sigma^2 I_n). Enables the Gauss-Hermite
/// and closed-form pairing backends.
struct GaussianMeanStructure {
  double sigma = 1.0;
  std::function<MeanDerivatives(const VectorXd& theta)> mean;
};

/// A smooth parametric family of densities on R^n indexed by theta in R^d.
///
/// All callables must be pure and reentrant. The sampler returns a
/// count x n matrix whose rows are independent draws; the same
/// (theta, count, seed) always produces the same matrix.
struct ModelSpec {
  std::string name;
  int param_dim = 0;
  int sample_dim = 0;
  std::function<double(SampleRef x, const VectorXd& theta)> log_density;
  std::function<VectorXd(SampleRef x, const VectorXd& theta)> score;
  std::function<MatrixXd(SampleRef x, const VectorXd& theta)> score_jacobian;
  bool jacobian_by_fd = false;
  std::function<MatrixXd(const VectorXd& theta, std::size_t count, std::uint64_t seed)> sampler;
  std::optional<GaussianMeanStructure> gaussian;
};

struct CurvedGaussianParams {
  double sigma = 1.0;
  double alpha = 1.0;
};

/// X ~ N(mu(theta), sigma^2 I_n) with analytic score and score Jacobian.
ModelSpec gaussian_mean_model(std::string name, int param_dim, int sample_dim, double sigma,
                              std::function<MeanDerivatives(const VectorXd&)> mean);

/// mu(theta) = (theta_1, theta_2, alpha theta_1^2), X ~ N(mu, sigma^2 I_3).
ModelSpec builtin_curved_gaussian(double sigma, double alpha);

/// Scalar analogue: mu(theta) = (theta, alpha theta^2), X ~ N(mu, sigma^2 I_2).
ModelSpec builtin_curved_gaussian_1d(double sigma, double alpha);

/// mu(theta) = A theta, X ~ N(mu, sigma^2 I_n). A is n x d with full column rank.
ModelSpec builtin_linear_gaussian(const MatrixXd& design, double sigma);

/// Central-difference estimate of d_i Y_j, symmetrized. Without `step` each
/// coordinate uses cbrt(eps) * max(1, |theta_i|).
MatrixXd eval_score_jacobian_fd(const ModelSpec& model, SampleRef x, const VectorXd& theta,
                                std::optional<double> step = std::nullopt);

/// Copy of `model` whose score Jacobian is computed by finite differences.
ModelSpec with_fd_jacobian(ModelSpec model);

/// The same family in coordinates theta' = A theta.
ModelSpec reparameterize(const ModelSpec& model, const MatrixXd& A);

/// T(x) = L x + offset.
struct AffineMap {
  MatrixXd linear;
  VectorXd offset;
};

struct EstimatorSpec {
  std::string name;
  std::function<VectorXd(SampleRef x)> map;
  ParameterPoint claimed_unbiased_at{0.0};
  std::optional<MatrixXd> closed_form_covariance;
  std::optional<AffineMap> affine;
};

EstimatorSpec affine_estimator(std::string name, AffineMap affine, ParameterPoint claimed,
                               std::optional<MatrixXd> covariance = std::nullopt);

/// T = (X_1, X_2 + gamma (X_3 - alpha theta_1^2)) for the curved Gaussian,
/// unbiased at `theta`. Covariance diag(sigma^2, sigma^2 (1 + gamma^2)).
EstimatorSpec builtin_gamma_estimator(double gamma, const CurvedGaussianParams& model,
                                      const ParameterPoint& theta);

/// T = X_1 + gamma (X_2 - alpha theta^2) for the scalar curved Gaussian.
EstimatorSpec builtin_gamma_estimator_1d(double gamma, const CurvedGaussianParams& model,
                                         const ParameterPoint& theta);

/// Ordinary least squares (A^T A)^{-1} A^T x for the linear Gaussian; efficient.
EstimatorSpec least_squares_estimator(const MatrixXd& design, double sigma,
                                      const ParameterPoint& theta);

/// T' = A T, claimed at A theta. Pairs with reparameterize(model, A).
EstimatorSpec transform_estimator(const EstimatorSpec& estimator, const MatrixXd& A);

}  // namespace curvcrb
