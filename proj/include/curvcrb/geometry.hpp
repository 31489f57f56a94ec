#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "curvcrb/model.hpp"
#include "curvcrb/pairing.hpp"

namespace curvcrb {

/// Unordered index pairs (i, j), i <= j, in lexicographic order. G_N and C are
/// stored over these pairs without multiplicity; off-diagonal pairs carry
/// weight 2 when a full double sum over (i, j) is collapsed onto them.
class PairIndex {
 public:
  explicit PairIndex(int d);

  int dim() const { return d_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  const std::pair<int, int>& operator[](int alpha) const { return pairs_[static_cast<std::size_t>(alpha)]; }
  double weight(int alpha) const { return pairs_[static_cast<std::size_t>(alpha)].first ==
                                                 pairs_[static_cast<std::size_t>(alpha)].second ? 1.0 : 2.0; }
  /// Position of {i, j} in either order.
  int index(int i, int j) const;

 private:
  int d_;
  std::vector<std::pair<int, int>> pairs_;
};

struct GeometryMeta {
  std::string model;
  std::string estimator;
  std::string backend;
  int gh_order = 0;
  std::uint64_t mc_samples = 0;
  std::uint64_t seed = 0;
  bool jacobian_by_fd = false;
  double condition_number = 0.0;
  bool flat = false;
  /// max |<Pi_alpha, eta_m>| as evaluated by the backend (zero by construction
  /// up to rounding / in-sample identity).
  double normality_residual = 0.0;
  std::vector<std::string> warnings;

  // Standard errors of each field; zero for deterministic backends.
  MatrixXd J_se;
  std::vector<MatrixXd> Gamma_se;
  MatrixXd b_se;
  MatrixXd G_N_se;
  MatrixXd C_se;
  MatrixXd unbias_se;
};

/// Everything the bounds need at one parameter point.
struct GeometryReport {
  VectorXd theta;
  MatrixXd J;                  // d x d Fisher information
  MatrixXd G;                  // d x d tangent Gram, J / 4
  std::vector<MatrixXd> Gamma; // Gamma[l](i, j)
  MatrixXd b;                  // m x d, <d_i d_j s, eta_m>
  MatrixXd G_N;                // m x m, <Pi_alpha, Pi_beta>
  MatrixXd C;                  // d x m, <Z~(p), Pi_alpha>; empty without estimator
  MatrixXd unbias;             // d x d, <Z~(p), eta_j>; empty without estimator
  GeometryMeta meta;

  int dim() const { return static_cast<int>(J.rows()); }
  bool has_estimator() const { return C.size() > 0; }
};

MatrixXd fisher_info(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg);

/// Gamma[l](i, j) = sum_m <d_i eta_j, eta_m> (G^-1)_{m l}.
std::vector<MatrixXd> christoffel(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg);

/// m x m Gram of the second fundamental form over PairIndex order.
MatrixXd normal_gram(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg);

struct ErrorPairings {
  MatrixXd C;
  MatrixXd unbias;
  std::vector<std::string> warnings;
};

ErrorPairings error_pairings(const ModelSpec& model, const EstimatorSpec& estimator, const ParameterPoint& theta,
                             const PairingConfig& cfg);

GeometryReport geometry_report(const ModelSpec& model, const EstimatorSpec& estimator, const ParameterPoint& theta,
                               const PairingConfig& cfg);

/// Report without estimator pairings (C and unbias left empty).
GeometryReport geometry_report(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg);

/// Report assembled from given Fisher information, normal Gram and error
/// pairings, with Gamma = 0 and unbias = I/2. Used for synthetic configurations
/// (rank-1 toys, flat normal bundles).
GeometryReport report_from_data(const MatrixXd& J, const MatrixXd& G_N, const MatrixXd& C);

/// Integrand Y_i Y_j with its closed form registered for Gaussian-mean models.
Integrand score_product_integrand(const ModelSpec& model, const ParameterPoint& theta, int i, int j);

/// Integrand h_ij = Y_i Y_j / 4 + d_i Y_j / 2, so that d_i d_j s = s h_ij.
Integrand second_derivative_integrand(const ModelSpec& model, const ParameterPoint& theta, int i, int j);

}  // namespace curvcrb
