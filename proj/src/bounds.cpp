#include "curvcrb/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "curvcrb/errors.hpp"
#include "curvcrb/linalg.hpp"

namespace curvcrb {

namespace {

constexpr double kDegenerateRatio = 1e-12;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

MatrixXd classical_crb(const MatrixXd& J) {
  if (J.rows() != J.cols() || J.rows() == 0) throw DomainError("classical_crb: J must be square");
  if (max_abs_asymmetry(J) > 1e-10 * std::max(1.0, J.cwiseAbs().maxCoeff()))
    throw DomainError("classical_crb: J must be symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(J));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= 1e-10 * hi) throw NumericalError("classical_crb: J is singular");
  return symmetrize(es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose());
}

VectorXd quadratic_coordinates(const PairIndex& idx, const VectorXd& v_tilde) {
  VectorXd s(idx.size());
  for (int a = 0; a < idx.size(); ++a) {
    const auto [i, j] = idx[a];
    s(a) = idx.weight(a) * v_tilde(i) * v_tilde(j);
  }
  return s;
}

DirectionalBound directional_bound(const GeometryReport& report, const VectorXd& v) {
  const int d = report.dim();
  if (v.size() != d) throw DomainError("direction has wrong dimension");
  if (!v.allFinite()) throw DomainError("direction must be finite");
  if (v.cwiseAbs().maxCoeff() == 0.0) throw DomainError("direction must be nonzero");
  if (!report.has_estimator()) throw DomainError("directional bound needs estimator pairings");

  const PairIndex idx(d);
  DirectionalBound out;
  out.v = v;
  out.v_tilde = report.G.ldlt().solve(v);
  const VectorXd s = quadratic_coordinates(idx, out.v_tilde);
  out.N = v.dot(report.C * s);
  const double D = s.dot(report.G_N * s);
  const double threshold = kDegenerateRatio * report.G_N.norm() * s.squaredNorm();
  if (D <= threshold) {
    out.degenerate = true;
    out.D = std::max(D, 0.0);
    out.R = 0.0;
  } else {
    out.D = D;
    out.R = out.N * out.N / D;
  }
  return out;
}

ExactCorrection exact_matrix_correction(const GeometryReport& report, double tol) {
  const int d = report.dim();
  ExactCorrection out;
  out.Delta = MatrixXd::Zero(d, d);
  out.a = VectorXd::Zero(d);
  if (!report.has_estimator()) throw DomainError("exact correction needs estimator pairings");

  const Eigen::Index m = report.G_N.rows();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(report.G_N));
  const double top = es.eigenvalues()(m - 1);
  out.u = es.eigenvectors().col(m - 1);
  out.c = top;
  if (!(top > 0.0)) {
    out.rank_ratio = 0.0;
    return out;
  }
  out.rank_ratio = m > 1 ? std::max(0.0, es.eigenvalues()(m - 2)) / top : 0.0;
  out.a = report.C * out.u;
  const double c_norm = report.C.norm();
  out.alignment_residual =
      c_norm > 0.0 ? (report.C - out.a * out.u.transpose()).norm() / c_norm : 0.0;
  out.applies = out.rank_ratio <= tol && out.alignment_residual <= tol;
  if (out.applies) out.Delta = out.a * out.a.transpose() / top;
  return out;
}

std::vector<DirectionalBound> directional_sweep(const GeometryReport& report, const SweepSpec& spec) {
  std::vector<DirectionalBound> out;
  if (!spec.directions.empty()) {
    for (const auto& v : spec.directions) out.push_back(directional_bound(report, v));
    return out;
  }
  if (spec.count == 0) throw DomainError("sweep needs at least one direction");
  std::mt19937_64 rng(spec.seed);
  out.reserve(spec.count);
  for (std::size_t k = 0; k < spec.count; ++k) out.push_back(directional_bound(report, random_unit_vector(report.dim(), rng)));
  return out;
}

std::string sweep_csv(const std::vector<DirectionalBound>& sweep, const std::optional<MatrixXd>& excess) {
  std::ostringstream os;
  if (sweep.empty()) return {};
  const Eigen::Index d = sweep.front().v.size();
  for (Eigen::Index i = 0; i < d; ++i) os << 'v' << (i + 1) << ',';
  os << "N,D,R,degenerate";
  if (excess) os << ",gap";
  os << '\n';
  for (const auto& b : sweep) {
    for (Eigen::Index i = 0; i < d; ++i) os << format_double(b.v(i)) << ',';
    os << format_double(b.N) << ',' << format_double(b.D) << ',' << format_double(b.R) << ','
       << (b.degenerate ? 1 : 0);
    if (excess) os << ',' << format_double(b.v.dot(*excess * b.v));
    os << '\n';
  }
  return os.str();
}

}  // namespace curvcrb
