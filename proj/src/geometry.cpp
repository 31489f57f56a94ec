#include "curvcrb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvcrb/errors.hpp"
#include "curvcrb/linalg.hpp"

namespace curvcrb {

PairIndex::PairIndex(int d) : d_(d) {
  if (d < 1) throw DomainError("pair index needs d >= 1");
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) pairs_.emplace_back(i, j);
}

int PairIndex::index(int i, int j) const {
  if (i > j) std::swap(i, j);
  // row-major upper triangle
  return i * d_ - i * (i - 1) / 2 + (j - i);
}

namespace {

constexpr double kSingularRatio = 1e-10;
constexpr double kFlatRatio = 1e-12;
constexpr double kDeterministicUnbiasTol = 1e-8;

// Symmetric d x d matrices used throughout a single evaluation.
struct Tangent {
  MatrixXd J;
  MatrixXd G_inv;
  double condition = 0.0;
};

Tangent check_fisher(const MatrixXd& J_raw) {
  Tangent t;
  t.J = symmetrize(J_raw);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(t.J);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= kSingularRatio * hi) {
    std::ostringstream os;
    os << "Fisher information is singular or ill-conditioned (eigenvalues " << lo << ", " << hi << ")";
    throw NumericalError(os.str());
  }
  t.condition = hi / lo;
  t.G_inv = 4.0 * es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  t.G_inv = symmetrize(t.G_inv);
  return t;
}

std::vector<MatrixXd> unpack_gamma(const MatrixXd& gam, const PairIndex& idx) {
  const int d = idx.dim();
  std::vector<MatrixXd> out(static_cast<std::size_t>(d), MatrixXd::Zero(d, d));
  for (int a = 0; a < idx.size(); ++a) {
    const auto [i, j] = idx[a];
    for (int l = 0; l < d; ++l) out[static_cast<std::size_t>(l)](i, j) = out[static_cast<std::size_t>(l)](j, i) = gam(a, l);
  }
  return out;
}

MatrixXd unpack_sym(const VectorXd& packed, int m) {
  MatrixXd out(m, m);
  int k = 0;
  for (int a = 0; a < m; ++a)
    for (int c = a; c < m; ++c, ++k) out(a, c) = out(c, a) = packed(k);
  return out;
}

void fill_meta_backend(GeometryMeta& meta, const ModelSpec& model, const PairingConfig& cfg) {
  meta.model = model.name;
  meta.backend = cfg.backend_name();
  meta.jacobian_by_fd = model.jacobian_by_fd;
  if (const auto* gh = std::get_if<GaussHermite>(&cfg.backend)) meta.gh_order = gh->order;
  if (const auto* mc = std::get_if<MonteCarlo>(&cfg.backend)) {
    meta.mc_samples = mc->samples;
    meta.seed = mc->seed;
  }
}

void finish_report(GeometryReport& rep, const PairingConfig& cfg) {
  const double g_norm = rep.G.norm();
  rep.meta.flat = rep.G_N.norm() < kFlatRatio * g_norm * g_norm;
  if (!rep.has_estimator()) return;
  const int d = rep.dim();
  const MatrixXd dev = rep.unbias - 0.5 * MatrixXd::Identity(d, d);
  bool violated = false;
  for (int p = 0; p < d; ++p)
    for (int j = 0; j < d; ++j) {
      const double tol = cfg.is_monte_carlo() ? 5.0 * rep.meta.unbias_se(p, j) + 1e-12 : kDeterministicUnbiasTol;
      if (std::abs(dev(p, j)) > tol) violated = true;
    }
  if (violated) {
    std::ostringstream os;
    os << "unbiasedness violated: max |<Z~, eta> - I/2| = " << dev.cwiseAbs().maxCoeff();
    rep.meta.warnings.push_back(os.str());
  }
}

// Per-sample quantities shared by both passes.
struct PointEval {
  VectorXd Y;
  VectorXd h;  // over pairs
  VectorXd Z;  // centered error, empty without estimator
};

PointEval evaluate_point(const ModelSpec& model, const EstimatorSpec* est, const PairIndex& idx, SampleRef x,
                         const VectorXd& theta) {
  PointEval e;
  e.Y = model.score(x, theta);
  const MatrixXd K = model.score_jacobian(x, theta);
  e.h.resize(idx.size());
  for (int a = 0; a < idx.size(); ++a) {
    const auto [i, j] = idx[a];
    e.h(a) = 0.25 * e.Y(i) * e.Y(j) + 0.25 * (K(i, j) + K(j, i));
  }
  if (est) e.Z = est->map(x) - theta;
  return e;
}

GeometryReport sampled_geometry(const ModelSpec& model, const EstimatorSpec* est, const ParameterPoint& point,
                                const PairingConfig& cfg) {
  const int d = model.param_dim;
  const PairIndex idx(d);
  const int m = idx.size();
  const VectorXd& theta = point.theta();
  const bool with_est = est != nullptr;

  // Pass 1: J, b, unbias pairings.
  const Eigen::Index n1 = d * d + m * d + (with_est ? d * d : 0);
  const BatchExpectation p1 = expect_vector(
      model, point, n1,
      [&](SampleRef x, Eigen::Ref<VectorXd> out) {
        const PointEval e = evaluate_point(model, est, idx, x, theta);
        Eigen::Index k = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) out(k++) = e.Y(i) * e.Y(j);
        for (int a = 0; a < m; ++a)
          for (int l = 0; l < d; ++l) out(k++) = 0.5 * e.h(a) * e.Y(l);
        if (with_est)
          for (int p = 0; p < d; ++p)
            for (int j = 0; j < d; ++j) out(k++) = 0.5 * e.Z(p) * e.Y(j);
      },
      cfg);

  GeometryReport rep;
  rep.theta = theta;
  fill_meta_backend(rep.meta, model, cfg);
  if (est) rep.meta.estimator = est->name;

  Eigen::Index k = 0;
  const MatrixXd J_raw = Eigen::Map<const MatrixXd>(p1.values.data() + k, d, d).transpose();
  rep.meta.J_se = Eigen::Map<const MatrixXd>(p1.std_errors.data() + k, d, d).transpose();
  k += d * d;
  const Tangent tan = check_fisher(J_raw);
  rep.J = tan.J;
  rep.G = 0.25 * tan.J;
  rep.meta.condition_number = tan.condition;
  rep.b = Eigen::Map<const MatrixXd>(p1.values.data() + k, d, m).transpose();
  rep.meta.b_se = Eigen::Map<const MatrixXd>(p1.std_errors.data() + k, d, m).transpose();
  k += m * d;
  MatrixXd U;
  if (with_est) {
    U = Eigen::Map<const MatrixXd>(p1.values.data() + k, d, d).transpose();
    rep.unbias = U;
    rep.meta.unbias_se = Eigen::Map<const MatrixXd>(p1.std_errors.data() + k, d, d).transpose();
  }

  const MatrixXd gam = rep.b * tan.G_inv;  // m x d, gam(alpha, l) = Gamma^l_alpha
  rep.Gamma = unpack_gamma(gam, idx);

  // Pass 2 on the same draws: Pi-coordinates pi_alpha = h_alpha - sum_l Gamma^l_alpha Y_l / 2.
  const Eigen::Index ngn = m * (m + 1) / 2;
  const Eigen::Index n2 = ngn + 2 * m * d + (with_est ? d * m : 0);
  const BatchExpectation p2 = expect_vector(
      model, point, n2,
      [&](SampleRef x, Eigen::Ref<VectorXd> out) {
        const PointEval e = evaluate_point(model, est, idx, x, theta);
        const VectorXd half_y = 0.5 * e.Y;
        const VectorXd pi = e.h - gam * half_y;
        const VectorXd ginv_half_y = tan.G_inv * half_y;
        Eigen::Index q = 0;
        for (int a = 0; a < m; ++a)
          for (int c = a; c < m; ++c) out(q++) = pi(a) * pi(c);
        for (int a = 0; a < m; ++a)
          for (int l = 0; l < d; ++l) out(q++) = pi(a) * half_y(l);
        // First-order influence of this draw on Gamma^l_alpha.
        for (int a = 0; a < m; ++a)
          for (int l = 0; l < d; ++l) out(q++) = pi(a) * ginv_half_y(l);
        if (with_est)
          for (int p = 0; p < d; ++p)
            for (int a = 0; a < m; ++a) out(q++) = e.Z(p) * pi(a) - U.row(p).dot(pi(a) * ginv_half_y);
      },
      cfg);

  Eigen::Index q = 0;
  rep.G_N = unpack_sym(p2.values.segment(q, ngn), m);
  rep.meta.G_N_se = unpack_sym(p2.std_errors.segment(q, ngn), m);
  q += ngn;
  rep.meta.normality_residual = p2.values.segment(q, m * d).cwiseAbs().maxCoeff();
  q += m * d;
  rep.meta.Gamma_se = unpack_gamma(Eigen::Map<const MatrixXd>(p2.std_errors.data() + q, d, m).transpose(), idx);
  q += m * d;
  if (with_est) {
    rep.C = Eigen::Map<const MatrixXd>(p2.values.data() + q, m, d).transpose();
    rep.meta.C_se = Eigen::Map<const MatrixXd>(p2.std_errors.data() + q, m, d).transpose();
  }
  return rep;
}

// Exact Gaussian moments. With X = mu + sigma eps, Y_i = a_i . eps and
// d_i Y_j = -a_i . a_j + c_ij . eps where a_i = mu_,i / sigma, c_ij = mu_,ij / sigma.
// Isserlis: E[h_ij h_kl] = [(ij)(kl) + (ik)(jl) + (il)(jk)] / 16 + c_ij . c_kl / 4.
GeometryReport closed_form_geometry(const ModelSpec& model, const EstimatorSpec* est, const ParameterPoint& point,
                                    const PairingConfig& cfg) {
  if (!model.gaussian) throw DomainError("closed-form backend requires a Gaussian-mean model");
  if (est && !est->affine) throw DomainError("closed-form backend requires an affine estimator");
  const int d = model.param_dim;
  const PairIndex idx(d);
  const int m = idx.size();
  const VectorXd& theta = point.theta();
  const double sigma = model.gaussian->sigma;
  const MeanDerivatives mu = model.gaussian->mean(theta);

  const MatrixXd a = mu.jacobian / sigma;  // n x d
  const MatrixXd dots = a.transpose() * a;
  std::vector<VectorXd> c(static_cast<std::size_t>(m));
  for (int al = 0; al < m; ++al) c[static_cast<std::size_t>(al)] = mu.second(idx[al].first, idx[al].second) / sigma;

  GeometryReport rep;
  rep.theta = theta;
  fill_meta_backend(rep.meta, model, cfg);
  if (est) rep.meta.estimator = est->name;

  const Tangent tan = check_fisher(dots);
  rep.J = tan.J;
  rep.G = 0.25 * tan.J;
  rep.meta.condition_number = tan.condition;
  rep.b.resize(m, d);
  for (int al = 0; al < m; ++al)
    for (int l = 0; l < d; ++l) rep.b(al, l) = 0.25 * c[static_cast<std::size_t>(al)].dot(a.col(l));
  const MatrixXd gam = rep.b * tan.G_inv;
  rep.Gamma = unpack_gamma(gam, idx);

  MatrixXd hh(m, m);
  for (int al = 0; al < m; ++al)
    for (int be = 0; be < m; ++be) {
      const auto [i, j] = idx[al];
      const auto [k, l] = idx[be];
      hh(al, be) = (dots(i, j) * dots(k, l) + dots(i, k) * dots(j, l) + dots(i, l) * dots(j, k)) / 16.0 +
                   0.25 * c[static_cast<std::size_t>(al)].dot(c[static_cast<std::size_t>(be)]);
    }
  rep.G_N = symmetrize(hh - rep.b * tan.G_inv * rep.b.transpose());
  rep.meta.normality_residual = (rep.b - gam * rep.G).cwiseAbs().maxCoeff();

  if (est) {
    const MatrixXd& L = est->affine->linear;  // d x n
    const VectorXd bias = L * mu.value + est->affine->offset - theta;
    rep.unbias = 0.5 * sigma * L * a;
    MatrixXd zh(d, m);
    for (int p = 0; p < d; ++p)
      for (int al = 0; al < m; ++al) {
        const auto [i, j] = idx[al];
        zh(p, al) = -0.25 * bias(p) * dots(i, j) + 0.5 * sigma * L.row(p).dot(c[static_cast<std::size_t>(al)]);
      }
    rep.C = zh - rep.unbias * gam.transpose();
  }

  rep.meta.J_se = MatrixXd::Zero(d, d);
  rep.meta.Gamma_se.assign(static_cast<std::size_t>(d), MatrixXd::Zero(d, d));
  rep.meta.b_se = MatrixXd::Zero(m, d);
  rep.meta.G_N_se = MatrixXd::Zero(m, m);
  if (est) {
    rep.meta.C_se = MatrixXd::Zero(d, m);
    rep.meta.unbias_se = MatrixXd::Zero(d, d);
  }
  return rep;
}

GeometryReport compute(const ModelSpec& model, const EstimatorSpec* est, const ParameterPoint& theta,
                       const PairingConfig& cfg) {
  cfg.validate();
  if (theta.dim() != model.param_dim) throw DomainError("parameter dimension does not match model");
  if (est && est->claimed_unbiased_at.dim() != model.param_dim)
    throw DomainError("estimator dimension does not match model");
  const bool closed = std::holds_alternative<ClosedForm>(cfg.backend);
  if (!closed && (!model.score || !model.score_jacobian)) throw DomainError("model has no score or score Jacobian");
  GeometryReport rep = closed ? closed_form_geometry(model, est, theta, cfg) : sampled_geometry(model, est, theta, cfg);
  finish_report(rep, cfg);
  return rep;
}

}  // namespace

MatrixXd fisher_info(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg) {
  return compute(model, nullptr, theta, cfg).J;
}

std::vector<MatrixXd> christoffel(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg) {
  return compute(model, nullptr, theta, cfg).Gamma;
}

MatrixXd normal_gram(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg) {
  return compute(model, nullptr, theta, cfg).G_N;
}

ErrorPairings error_pairings(const ModelSpec& model, const EstimatorSpec& estimator, const ParameterPoint& theta,
                             const PairingConfig& cfg) {
  GeometryReport rep = compute(model, &estimator, theta, cfg);
  return {std::move(rep.C), std::move(rep.unbias), std::move(rep.meta.warnings)};
}

GeometryReport geometry_report(const ModelSpec& model, const EstimatorSpec& estimator, const ParameterPoint& theta,
                               const PairingConfig& cfg) {
  return compute(model, &estimator, theta, cfg);
}

GeometryReport geometry_report(const ModelSpec& model, const ParameterPoint& theta, const PairingConfig& cfg) {
  return compute(model, nullptr, theta, cfg);
}

GeometryReport report_from_data(const MatrixXd& J, const MatrixXd& G_N, const MatrixXd& C) {
  const auto d = static_cast<int>(J.rows());
  const PairIndex idx(d);
  const int m = idx.size();
  if (J.cols() != d || G_N.rows() != m || G_N.cols() != m || C.rows() != d || C.cols() != m)
    throw DomainError("report_from_data: inconsistent dimensions");
  GeometryReport rep;
  rep.theta = VectorXd::Zero(d);
  const Tangent tan = check_fisher(J);
  rep.J = tan.J;
  rep.G = 0.25 * tan.J;
  rep.Gamma.assign(static_cast<std::size_t>(d), MatrixXd::Zero(d, d));
  rep.b = MatrixXd::Zero(m, d);
  rep.G_N = symmetrize(G_N);
  rep.C = C;
  rep.unbias = 0.5 * MatrixXd::Identity(d, d);
  rep.meta.model = "synthetic";
  rep.meta.estimator = "synthetic";
  rep.meta.backend = "closed";
  rep.meta.condition_number = tan.condition;
  rep.meta.J_se = MatrixXd::Zero(d, d);
  rep.meta.Gamma_se.assign(static_cast<std::size_t>(d), MatrixXd::Zero(d, d));
  rep.meta.b_se = MatrixXd::Zero(m, d);
  rep.meta.G_N_se = MatrixXd::Zero(m, m);
  rep.meta.C_se = MatrixXd::Zero(d, m);
  rep.meta.unbias_se = MatrixXd::Zero(d, d);
  finish_report(rep, PairingConfig{ClosedForm{}});
  return rep;
}

Integrand score_product_integrand(const ModelSpec& model, const ParameterPoint& theta, int i, int j) {
  Integrand g;
  g.eval = [score = model.score, t = theta.theta(), i, j](SampleRef x) {
    const VectorXd y = score(x, t);
    return y(i) * y(j);
  };
  if (model.gaussian) {
    const MeanDerivatives mu = model.gaussian->mean(theta.theta());
    const double s2 = model.gaussian->sigma * model.gaussian->sigma;
    g.exact = mu.jacobian.col(i).dot(mu.jacobian.col(j)) / s2;
  }
  return g;
}

Integrand second_derivative_integrand(const ModelSpec& model, const ParameterPoint& theta, int i, int j) {
  Integrand g;
  g.eval = [score = model.score, jac = model.score_jacobian, t = theta.theta(), i, j](SampleRef x) {
    const VectorXd y = score(x, t);
    const MatrixXd k = jac(x, t);
    return 0.25 * y(i) * y(j) + 0.25 * (k(i, j) + k(j, i));
  };
  if (model.gaussian) {
    const MeanDerivatives mu = model.gaussian->mean(theta.theta());
    const double s2 = model.gaussian->sigma * model.gaussian->sigma;
    g.exact = -0.25 * mu.jacobian.col(i).dot(mu.jacobian.col(j)) / s2;
  }
  return g;
}

}  // namespace curvcrb
