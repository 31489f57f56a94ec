#include "curvcrb/soscert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "curvcrb/bounds.hpp"
#include "curvcrb/errors.hpp"
#include "curvcrb/linalg.hpp"
#include "curvcrb/sdp_barrier.hpp"

namespace curvcrb {

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::infeasible_numerics: return "infeasible_numerics";
  }
  return "unknown";
}

VectorXd PolynomialSystem::residual(const MatrixXd& Delta, const MatrixXd& S) const {
  return nsq_coeffs - d_quad_map * pack_block(Delta) - sos_map * pack_block(S);
}

PolynomialSystem build_system(const GeometryReport& report) {
  if (!report.has_estimator()) throw DomainError("build_system needs estimator pairings");
  const int d = report.dim();
  const PairIndex idx(d);
  const int m = idx.size();

  Eigen::LDLT<MatrixXd> ldlt(report.G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericalError("build_system: G is singular");
  const MatrixXd G_inv = ldlt.solve(MatrixXd::Identity(d, d));

  std::vector<HomogeneousPolynomial> v_tilde;
  for (int i = 0; i < d; ++i) v_tilde.push_back(linear_form(G_inv.row(i).transpose()));
  std::vector<HomogeneousPolynomial> s;
  for (int a = 0; a < m; ++a) {
    HomogeneousPolynomial q = multiply(v_tilde[static_cast<std::size_t>(idx[a].first)],
                                       v_tilde[static_cast<std::size_t>(idx[a].second)]);
    q.coeffs *= idx.weight(a);
    s.push_back(std::move(q));
  }

  PolynomialSystem sys;
  sys.d = d;
  sys.cubic = MonomialBasis(d, 3);
  sys.sextic = MonomialBasis(d, 6);
  sys.numerator = {sys.cubic, VectorXd::Zero(sys.cubic.size())};
  for (int a = 0; a < m; ++a)
    sys.numerator.coeffs += multiply(linear_form(report.C.col(a)), s[static_cast<std::size_t>(a)]).coeffs;

  const MonomialBasis quartic(d, 4);
  sys.denominator = {quartic, VectorXd::Zero(quartic.size())};
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      if (report.G_N(a, b) == 0.0) continue;
      sys.denominator.coeffs +=
          report.G_N(a, b) * multiply(s[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(b)]).coeffs;
    }

  sys.nsq_coeffs = multiply(sys.numerator, sys.numerator).coeffs;

  const int K = sys.sextic.size();
  const MonomialBasis quadratic(d, 2);
  sys.d_quad_map = MatrixXd::Zero(K, packed_size(d));
  int col = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++col) {
      Exponent e(static_cast<std::size_t>(d), 0);
      ++e[static_cast<std::size_t>(i)];
      ++e[static_cast<std::size_t>(j)];
      HomogeneousPolynomial q{quadratic, VectorXd::Zero(quadratic.size())};
      q.coeffs(quadratic.index_of(e)) = (i == j) ? 1.0 : 2.0;
      sys.d_quad_map.col(col) = multiply(q, sys.denominator).coeffs;
    }

  const int M = sys.cubic.size();
  sys.sos_map = MatrixXd::Zero(K, packed_size(M));
  col = 0;
  Exponent sum(static_cast<std::size_t>(d));
  for (int a = 0; a < M; ++a)
    for (int b = a; b < M; ++b, ++col) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = sys.cubic[a][i] + sys.cubic[b][i];
      sys.sos_map(sys.sextic.index_of(sum), col) = (a == b) ? 1.0 : 2.0;
    }

  sys.Delta0 = MatrixXd::Zero(d, d);
  sys.S0 = sys.numerator.coeffs * sys.numerator.coeffs.transpose();
  return sys;
}

namespace {

constexpr double kResidualFail = 1e-6;
constexpr double kFaceTol = 1e-6;
constexpr double kFaceResidual = 1e-11;
constexpr double kFaceObjectiveLoss = 1e-6;
constexpr double kSoundPsd = 1e-10;

double inf_norm(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool psd_within(const MatrixXd& m, double rel) {
  if (m.size() == 0) return true;
  return min_eigenvalue(m) >= -rel * std::max(1.0, m.norm());
}

MatrixXd clip_psd(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  return symmetrize(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose());
}

void finalize(SOSCertificate& cert, const PolynomialSystem& sys) {
  cert.objective = cert.Delta.trace();
  const double nsq_norm = inf_norm(sys.nsq_coeffs);
  cert.max_coeff_residual = inf_norm(sys.residual(cert.Delta, cert.S));
  cert.min_eig_delta = min_eigenvalue(cert.Delta);
  cert.min_eig_s = min_eigenvalue(cert.S);
  if (cert.max_coeff_residual > kResidualFail * (1.0 + nsq_norm) || !cert.Delta.allFinite() || !cert.S.allFinite())
    cert.status = SolverStatus::infeasible_numerics;
}


// Columns of `m`'s eigenvectors whose eigenvalues are clearly nonzero.
MatrixXd range_basis(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (es.eigenvalues()(i) > kFaceTol * top) keep.push_back(i);
  MatrixXd U(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) U.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
  return U;
}

// The barrier iterate approaches an optimum on the cone boundary only up to
// the shift. Restrict one or both blocks to the ranges detected at the iterate
// and re-solve there, which places the zero eigenvalues exactly. Returns
// nothing when the restricted problem is not exactly feasible.
std::optional<std::pair<MatrixXd, MatrixXd>> polish_on_face(const BlockSdpProblem& prob, const MatrixXd& Delta,
                                                            const MatrixXd& S, const BarrierOptions& bo,
                                                            bool restrict_delta, bool restrict_s) {
  const int d = static_cast<int>(Delta.rows());
  const int nd = packed_size(d);
  const MatrixXd U = restrict_delta ? range_basis(Delta) : MatrixXd::Identity(d, d);
  const MatrixXd V = restrict_s ? range_basis(S) : MatrixXd::Identity(S.rows(), S.rows());
  const int rd = static_cast<int>(U.cols());
  const int rs = static_cast<int>(V.cols());
  const int nx = packed_size(rd);
  const int ny = packed_size(rs);

  auto lift = [](const MatrixXd& basis, int i, int j) -> VectorXd {
    return pack_block(basis.col(i) * basis.col(j).transpose() + basis.col(j) * basis.col(i).transpose()) /
           (i == j ? 2.0 : 1.0);
  };
  MatrixXd A(prob.A.rows(), nx + ny);
  VectorXd c = VectorXd::Zero(nx + ny);
  int col = 0;
  for (int i = 0; i < rd; ++i)
    for (int j = i; j < rd; ++j, ++col) {
      A.col(col) = prob.A.leftCols(nd) * lift(U, i, j);
      if (i == j) c(col) = 1.0;
    }
  for (int i = 0; i < rs; ++i)
    for (int j = i; j < rs; ++j, ++col) A.col(col) = prob.A.rightCols(prob.A.cols() - nd) * lift(V, i, j);

  VectorXd x0(nx + ny);
  x0 << pack_block(U.transpose() * Delta * U), pack_block(V.transpose() * S * V);
  if (nx + ny > 0) {
    const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    x0 += cod.solve(prob.b - A * x0);
  }
  const double tol = kFaceResidual * (1.0 + prob.b.cwiseAbs().maxCoeff());
  if ((nx + ny == 0 ? prob.b : VectorXd(A * x0 - prob.b)).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  if (nx + ny == 0) return std::make_pair(MatrixXd::Zero(d, d), MatrixXd::Zero(S.rows(), S.rows()));

  BlockSdpProblem reduced{{rd, rs}, A, prob.b, c, x0};
  BarrierResult res;
  try {
    res = solve_block_sdp(reduced, bo);
  } catch (const NumericalError&) {
    return std::nullopt;  // start left the cone after the equality fix
  }
  if ((A * res.x - prob.b).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  return std::make_pair(MatrixXd(U * unpack_block(res.x, 0, rd) * U.transpose()),
                        MatrixXd(V * unpack_block(res.x, nx, rs) * V.transpose()));
}

}  // namespace

SOSCertificate solve_sos_sdp(const PolynomialSystem& sys, const SosSolverOptions& options) {
  const int d = sys.d;
  const int M = sys.cubic.size();
  SOSCertificate cert;

  // D vanishes identically: every direction is degenerate, R = 0 everywhere,
  // and the equalities leave Delta unconstrained. Only Delta = 0 is sound.
  if (options.objective == SosObjective::zero || inf_norm(sys.d_quad_map) == 0.0) {
    cert.Delta = sys.Delta0;
    cert.S = sys.S0;
    cert.objective_history.push_back(0.0);
    finalize(cert, sys);
    return cert;
  }

  // Scale so that coefficients, Delta and S are all O(1) in the solver.
  const double nsq_norm = inf_norm(sys.nsq_coeffs);
  const double s_scale = nsq_norm > 0.0 ? nsq_norm : 1.0;
  const double dq_norm = inf_norm(sys.d_quad_map);
  const double delta_scale = s_scale / dq_norm;

  const int nd = packed_size(d);
  const int ns = packed_size(M);
  BlockSdpProblem prob;
  prob.block_sizes = {d, M};
  prob.A.resize(sys.nsq_coeffs.size(), nd + ns);
  prob.A << sys.d_quad_map * (delta_scale / s_scale), sys.sos_map;
  prob.b = sys.nsq_coeffs / s_scale;
  prob.c = VectorXd::Zero(nd + ns);
  for (int i = 0, k = 0; i < d; k += d - i, ++i) prob.c(k) = 1.0;
  prob.x0 = VectorXd::Zero(nd + ns);
  prob.x0.tail(ns) = pack_block(sys.S0) / s_scale;

  BarrierOptions bo;
  bo.shift = options.shift;
  bo.gap_tol = options.gap_tol;
  bo.max_newton = options.max_iter;
  const BarrierResult res = solve_block_sdp(prob, bo);

  cert.iterations = res.newton_iterations;
  for (double obj : res.objective_history) cert.objective_history.push_back(obj * delta_scale);
  cert.status = res.hit_iteration_cap ? SolverStatus::max_iter : SolverStatus::optimal;

  MatrixXd Delta_s = unpack_block(res.x, 0, d);
  MatrixXd S_s = unpack_block(res.x, nd, M);
  const double obj_raw = Delta_s.trace();
  for (const auto& [restrict_delta, restrict_s] : {std::pair{true, true}, {false, true}, {true, false}}) {
    const auto polished = polish_on_face(prob, Delta_s, S_s, bo, restrict_delta, restrict_s);
    if (polished && polished->first.trace() >= obj_raw - kFaceObjectiveLoss * (1.0 + std::abs(obj_raw))) {
      Delta_s = polished->first;
      S_s = polished->second;
      break;
    }
  }

  // Final projection: Delta onto the PSD cone, then the minimum-norm change
  // of S that restores every coefficient equality.
  cert.Delta = clip_psd(Delta_s * delta_scale);
  VectorXd s_packed = pack_block(S_s) * s_scale;
  const VectorXd r = sys.nsq_coeffs - sys.d_quad_map * pack_block(cert.Delta) - sys.sos_map * s_packed;
  const VectorXd row_norms = sys.sos_map.rowwise().squaredNorm();
  s_packed += sys.sos_map.transpose() * r.cwiseQuotient(row_norms);
  cert.S = unpack_block(s_packed, 0, M);

  if (!psd_within(cert.Delta, kSoundPsd) || !psd_within(cert.S, kSoundPsd)) {
    cert.Delta = sys.Delta0;
    cert.S = sys.S0;
    cert.fallback = true;
  }
  finalize(cert, sys);
  return cert;
}

VerificationReport verify_certificate(const SOSCertificate& cert, const PolynomialSystem& system,
                                      const GeometryReport& report, std::size_t nsamples, std::uint64_t seed) {
  constexpr double kNonnegTol = 1e-8;
  constexpr double kMatchTol = 1e-7;
  constexpr double kBoundTol = 1e-8;
  constexpr double kPsdTol = 1e-8;

  VerificationReport out;
  out.samples = nsamples;
  out.passed = psd_within(cert.Delta, kPsdTol) && psd_within(cert.S, kPsdTol);
  out.worst_nonnegativity = std::numeric_limits<double>::infinity();
  out.worst_bound_excess = -std::numeric_limits<double>::infinity();
  // Coefficient magnitude of P_Delta; rounding in either evaluation route is
  // relative to this rather than to |P_Delta(v)|, which vanishes on the zeros of N.
  const double coeff_scale = std::max(inf_norm(system.nsq_coeffs) + cert.Delta.norm() * inf_norm(system.denominator.coeffs),
                                      std::numeric_limits<double>::min());
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < nsamples; ++k) {
    const VectorXd v = random_unit_vector(report.dim(), rng);
    const DirectionalBound db = directional_bound(report, v);
    const double quad = v.dot(cert.Delta * v);
    const double p = db.N * db.N - quad * db.D;
    const VectorXd z = system.cubic.evaluate(v);
    const double sos = z.dot(cert.S * z);
    const double scale = std::pow(v.squaredNorm(), 3) * coeff_scale;
    out.scale = std::max(out.scale, scale);
    const double nonneg = p / scale;
    const double mismatch = std::abs(p - sos) / scale;
    out.worst_nonnegativity = std::min(out.worst_nonnegativity, nonneg);
    out.worst_sos_mismatch = std::max(out.worst_sos_mismatch, mismatch);
    bool bad = nonneg < -kNonnegTol || mismatch > kMatchTol;
    if (db.degenerate) {
      ++out.degenerate_count;
      if (quad > kBoundTol) {
        ++out.degenerate_excess_count;
        out.worst_degenerate_excess = std::max(out.worst_degenerate_excess, quad);
      }
    } else {
      const double excess = quad - db.R;
      out.worst_bound_excess = std::max(out.worst_bound_excess, excess);
      if (excess > kBoundTol * (1.0 + db.R)) bad = true;
    }
    if (bad) {
      out.passed = false;
      if (out.offending.size() < 16) out.offending.push_back(v);
    }
  }
  if (nsamples == 0) out.worst_nonnegativity = 0.0;
  if (out.degenerate_count == nsamples) out.worst_bound_excess = 0.0;
  return out;
}

}  // namespace curvcrb
