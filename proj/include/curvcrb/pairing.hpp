#pragma once

// Expectations E_theta[g(X)] under a model. Every Hilbert-space inner product
// of square-root-lifted functions <s u, s v> reduces to E_theta[u v], so this is
// the only integration primitive the geometry needs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "curvcrb/model.hpp"

namespace curvcrb {

inline constexpr std::size_t kMonteCarloChunk = 4096;
inline constexpr std::size_t kMaxGridPoints = 10'000'000;

/// Exact values registered alongside each integrand.
struct ClosedForm {};

/// Tensor Gauss-Hermite rule in the standardized noise of a Gaussian model.
struct GaussHermite {
  int order = 12;
};

/// Seeded Monte Carlo with a fixed chunked reduction order.
struct MonteCarlo {
  std::size_t samples = 100'000;
  std::uint64_t seed = 0;
};

using Backend = std::variant<ClosedForm, GaussHermite, MonteCarlo>;

struct PairingConfig {
  Backend backend = GaussHermite{};

  void validate() const;
  std::string backend_name() const;
  bool is_monte_carlo() const { return std::holds_alternative<MonteCarlo>(backend); }
};

/// Scalar integrand g(x). `exact`, when present, is E_theta[g] for the model
/// and parameter the integrand was built for; the closed-form backend only
/// accepts integrands that carry it.
struct Integrand {
  std::function<double(SampleRef x)> eval;
  std::optional<double> exact;
};

struct ScalarExpectation {
  double value = 0.0;
  double std_error = 0.0;  // zero for deterministic backends
};

struct BatchExpectation {
  VectorXd values;
  VectorXd std_errors;
};

/// Fills `out` (preallocated, fixed length) with the integrand outputs at x.
using VectorIntegrand = std::function<void(SampleRef x, Eigen::Ref<VectorXd> out)>;

ScalarExpectation expect(const ModelSpec& model, const ParameterPoint& theta, const Integrand& g,
                         const PairingConfig& cfg);

/// All integrands see the same draws / nodes.
BatchExpectation expect_batch(const ModelSpec& model, const ParameterPoint& theta,
                              const std::vector<Integrand>& gs, const PairingConfig& cfg);

/// Vector-valued integrand over the sampled or quadrature backends. The
/// closed-form backend is rejected here.
BatchExpectation expect_vector(const ModelSpec& model, const ParameterPoint& theta, Eigen::Index outputs,
                               const VectorIntegrand& g, const PairingConfig& cfg);

/// One-dimensional Gauss-Hermite rule for the standard normal weight
/// (probabilists' convention); weights sum to one.
struct QuadratureRule {
  VectorXd nodes;
  VectorXd weights;
};

QuadratureRule gauss_hermite_rule(int order);

}  // namespace curvcrb
