#include "curvcrb/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "curvcrb/errors.hpp"
#include "curvcrb/linalg.hpp"

namespace curvcrb {

void PairingConfig::validate() const {
  if (const auto* gh = std::get_if<GaussHermite>(&backend)) {
    if (gh->order < 2 || gh->order > 64) throw DomainError("gauss-hermite order must be in [2, 64]");
  } else if (const auto* mc = std::get_if<MonteCarlo>(&backend)) {
    if (mc->samples < 1000) throw DomainError("monte-carlo samples must be >= 1000");
  }
}

std::string PairingConfig::backend_name() const {
  return std::visit(
      [](const auto& b) -> std::string {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, ClosedForm>) return "closed";
        else if constexpr (std::is_same_v<B, GaussHermite>) return "gh";
        else return "mc";
      },
      backend);
}

QuadratureRule gauss_hermite_rule(int order) {
  if (order < 2 || order > 64) throw DomainError("gauss-hermite order must be in [2, 64]");
  // Golub-Welsch on the Jacobi matrix of He_k: off-diagonal sqrt(k).
  MatrixXd jacobi = MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(jacobi);
  QuadratureRule rule{es.eigenvalues(), es.eigenvectors().row(0).transpose().array().square()};
  rule.weights /= rule.weights.sum();
  return rule;
}

namespace {

// Running (count, mean, M2) with Chan's pairwise combination.
struct Moments {
  double count = 0.0;
  VectorXd mean;
  VectorXd m2;

  explicit Moments(Eigen::Index k = 0) : mean(VectorXd::Zero(k)), m2(VectorXd::Zero(k)) {}

  void add(const VectorXd& x) {
    count += 1.0;
    const VectorXd delta = x - mean;
    mean += delta / count;
    m2.array() += delta.array() * (x - mean).array();
  }

  static Moments combine(const Moments& a, const Moments& b) {
    if (a.count == 0.0) return b;
    if (b.count == 0.0) return a;
    Moments out;
    out.count = a.count + b.count;
    const VectorXd delta = b.mean - a.mean;
    out.mean = a.mean + delta * (b.count / out.count);
    out.m2 = a.m2 + b.m2 + delta.cwiseProduct(delta) * (a.count * b.count / out.count);
    return out;
  }
};

template <typename T, typename Combine>
T pairwise_reduce(std::vector<T> parts, Combine combine) {
  while (parts.size() > 1) {
    std::vector<T> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(combine(parts[i], parts[i + 1]));
    if (parts.size() % 2 == 1) next.push_back(parts.back());
    parts = std::move(next);
  }
  return parts.front();
}

// Runs task(c) for c in [0, chunks) on a fixed worker pool; chunk results are
// stored by index so the reduction order does not depend on scheduling.
template <typename Task>
void run_chunks(std::size_t chunks, Task task) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(chunks, std::thread::hardware_concurrency()));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) task(c);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers) task(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_finite(const VectorXd& out) {
  if (!out.allFinite()) throw NumericalError("nonfinite integrand value encountered");
}

BatchExpectation monte_carlo(const ModelSpec& model, const VectorXd& theta, Eigen::Index k,
                             const VectorIntegrand& g, const MonteCarlo& mc) {
  if (!model.sampler) throw DomainError("model has no sampler; monte-carlo backend unavailable");
  const std::size_t chunks = (mc.samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<Moments> parts(chunks, Moments(k));
  run_chunks(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kMonteCarloChunk;
    const std::size_t count = std::min(kMonteCarloChunk, mc.samples - begin);
    const MatrixXd draws = model.sampler(theta, count, split_seed(mc.seed, c));
    Moments acc(k);
    VectorXd out(k);
    for (Eigen::Index r = 0; r < draws.rows(); ++r) {
      g(draws.row(r).transpose(), out);
      check_finite(out);
      acc.add(out);
    }
    parts[c] = std::move(acc);
  });
  const Moments total = pairwise_reduce(std::move(parts), Moments::combine);
  BatchExpectation res{total.mean, VectorXd::Zero(k)};
  if (total.count > 1.0)
    res.std_errors = (total.m2.array() / (total.count - 1.0) / total.count).sqrt().matrix();
  return res;
}

BatchExpectation gauss_hermite(const ModelSpec& model, const VectorXd& theta, Eigen::Index k,
                               const VectorIntegrand& g, const GaussHermite& gh) {
  if (!model.gaussian) throw DomainError("gauss-hermite backend requires a Gaussian-mean model");
  const int n = model.sample_dim;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    total *= static_cast<std::size_t>(gh.order);
    if (total > kMaxGridPoints) throw DomainError("gauss-hermite grid exceeds 1e7 nodes; lower the order");
  }
  const QuadratureRule rule = gauss_hermite_rule(gh.order);
  const VectorXd mu = model.gaussian->mean(theta).value;
  const double sigma = model.gaussian->sigma;

  const std::size_t chunks = (total + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<VectorXd> parts(chunks, VectorXd::Zero(k));
  run_chunks(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kMonteCarloChunk;
    const std::size_t end = std::min(total, begin + kMonteCarloChunk);
    VectorXd acc = VectorXd::Zero(k);
    VectorXd x(n), out(k);
    for (std::size_t flat = begin; flat < end; ++flat) {
      double w = 1.0;
      std::size_t rem = flat;
      for (int dim = n - 1; dim >= 0; --dim) {
        const auto idx = static_cast<Eigen::Index>(rem % static_cast<std::size_t>(gh.order));
        rem /= static_cast<std::size_t>(gh.order);
        x(dim) = mu(dim) + sigma * rule.nodes(idx);
        w *= rule.weights(idx);
      }
      g(x, out);
      check_finite(out);
      acc += w * out;
    }
    parts[c] = std::move(acc);
  });
  return {pairwise_reduce(std::move(parts), [](const VectorXd& a, const VectorXd& b) { return VectorXd(a + b); }),
          VectorXd::Zero(k)};
}

void check_theta(const ModelSpec& model, const ParameterPoint& theta) {
  if (theta.dim() != model.param_dim) throw DomainError("parameter dimension does not match model");
}

}  // namespace

BatchExpectation expect_vector(const ModelSpec& model, const ParameterPoint& theta, Eigen::Index outputs,
                               const VectorIntegrand& g, const PairingConfig& cfg) {
  cfg.validate();
  check_theta(model, theta);
  if (const auto* mc = std::get_if<MonteCarlo>(&cfg.backend)) return monte_carlo(model, theta.theta(), outputs, g, *mc);
  if (const auto* gh = std::get_if<GaussHermite>(&cfg.backend))
    return gauss_hermite(model, theta.theta(), outputs, g, *gh);
  throw DomainError("closed-form backend needs registered integrands");
}

BatchExpectation expect_batch(const ModelSpec& model, const ParameterPoint& theta,
                              const std::vector<Integrand>& gs, const PairingConfig& cfg) {
  cfg.validate();
  check_theta(model, theta);
  const auto k = static_cast<Eigen::Index>(gs.size());
  if (std::holds_alternative<ClosedForm>(cfg.backend)) {
    BatchExpectation res{VectorXd(k), VectorXd::Zero(k)};
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& exact = gs[static_cast<std::size_t>(i)].exact;
      if (!exact) throw DomainError("no closed form registered for integrand " + std::to_string(i));
      if (!std::isfinite(*exact)) throw NumericalError("nonfinite closed-form value");
      res.values(i) = *exact;
    }
    return res;
  }
  return expect_vector(
      model, theta, k,
      [&gs](SampleRef x, Eigen::Ref<VectorXd> out) {
        for (std::size_t i = 0; i < gs.size(); ++i) out(static_cast<Eigen::Index>(i)) = gs[i].eval(x);
      },
      cfg);
}

ScalarExpectation expect(const ModelSpec& model, const ParameterPoint& theta, const Integrand& g,
                         const PairingConfig& cfg) {
  const BatchExpectation res = expect_batch(model, theta, {g}, cfg);
  return {res.values(0), res.std_errors(0)};
}

}  // namespace curvcrb
