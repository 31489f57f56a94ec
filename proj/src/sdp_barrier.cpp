#include "curvcrb/sdp_barrier.hpp"

#include <cmath>
#include <limits>

#include "curvcrb/errors.hpp"

namespace curvcrb {

namespace {

// Newton systems get cond ~ shift^-2; extended precision keeps the steps usable.
using Real = long double;
using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using VecR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

struct BlockLayout {
  int n;
  int offset;
};

MatR unpack_real(const VecR& x, int offset, int n) {
  MatR m(n, n);
  int k = offset;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k) m(i, j) = m(j, i) = x(k);
  return m;
}

class Barrier {
 public:
  Barrier(const BlockSdpProblem& p, const BarrierOptions& opt) : opt_(opt), c_(p.c.cast<Real>()) {
    int offset = 0;
    for (int n : p.block_sizes) {
      blocks_.push_back({n, offset});
      offset += packed_size(n);
      nu_ += n;
    }
    nvar_ = offset;
  }

  int nvar() const { return nvar_; }
  double nu() const { return nu_; }

  // +inf outside the shifted cone.
  Real value(const VecR& x, Real t) const {
    Real phi = -t * c_.dot(x);
    for (const auto& blk : blocks_) {
      MatR X = unpack_real(x, blk.offset, blk.n);
      X.diagonal().array() += static_cast<Real>(opt_.shift);
      Eigen::LLT<MatR> llt(X);
      if (llt.info() != Eigen::Success) return std::numeric_limits<Real>::infinity();
      const MatR& L = llt.matrixL();
      for (int i = 0; i < blk.n; ++i) {
        if (!(L(i, i) > 0)) return std::numeric_limits<Real>::infinity();
        phi -= 2 * std::log(L(i, i));
      }
    }
    return phi;
  }

  void derivatives(const VecR& x, Real t, VecR& grad, MatR& hess) const {
    grad = -t * c_;
    hess = MatR::Zero(nvar_, nvar_);
    for (const auto& blk : blocks_) {
      MatR X = unpack_real(x, blk.offset, blk.n);
      X.diagonal().array() += static_cast<Real>(opt_.shift);
      const MatR W = X.llt().solve(MatR::Identity(blk.n, blk.n));
      std::vector<std::pair<int, int>> entries;
      for (int i = 0; i < blk.n; ++i)
        for (int j = i; j < blk.n; ++j) entries.emplace_back(i, j);
      const int ne = static_cast<int>(entries.size());
      for (int e = 0; e < ne; ++e) {
        const auto [i, j] = entries[static_cast<std::size_t>(e)];
        grad(blk.offset + e) -= (i == j) ? W(i, i) : 2 * W(i, j);
      }
      // d^2(-logdet)/dx_e dx_f = tr(W E_e W E_f), E_e the symmetric unit matrix of entry e.
      for (int e = 0; e < ne; ++e) {
        const auto [i, j] = entries[static_cast<std::size_t>(e)];
        for (int f = e; f < ne; ++f) {
          const auto [k, l] = entries[static_cast<std::size_t>(f)];
          Real h;
          if (i == j && k == l) h = W(k, i) * W(i, k);
          else if (i == j) h = 2 * W(i, k) * W(i, l);
          else if (k == l) h = 2 * W(k, i) * W(j, k);
          else h = 2 * (W(l, i) * W(j, k) + W(k, i) * W(j, l));
          hess(blk.offset + e, blk.offset + f) = hess(blk.offset + f, blk.offset + e) = h;
        }
      }
    }
  }

  Real objective(const VecR& x) const { return c_.dot(x); }

 private:
  BarrierOptions opt_;
  VecR c_;
  std::vector<BlockLayout> blocks_;
  int nvar_ = 0;
  double nu_ = 0.0;
};

MatR null_space(const Eigen::MatrixXd& A, int nvar) {
  if (A.rows() == 0) return MatR::Identity(nvar, nvar);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * top) ++rank;
  return svd.matrixV().rightCols(nvar - rank).cast<Real>();
}

}  // namespace

Eigen::MatrixXd unpack_block(const Eigen::VectorXd& x, int offset, int n) {
  return unpack_real(x.cast<Real>(), offset, n).cast<double>();
}

Eigen::VectorXd pack_block(const Eigen::MatrixXd& m) {
  const auto n = static_cast<int>(m.rows());
  Eigen::VectorXd x(packed_size(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k) x(k) = 0.5 * (m(i, j) + m(j, i));
  return x;
}

BarrierResult solve_block_sdp(const BlockSdpProblem& problem, const BarrierOptions& options) {
  Barrier barrier(problem, options);
  const int nvar = barrier.nvar();
  if (problem.A.cols() != nvar || problem.c.size() != nvar || problem.x0.size() != nvar ||
      problem.b.size() != problem.A.rows())
    throw DomainError("block SDP: inconsistent problem dimensions");

  const MatR B = null_space(problem.A, nvar);
  VecR x = problem.x0.cast<Real>();
  BarrierResult res;
  Real t = options.t_initial;
  if (!std::isfinite(static_cast<double>(barrier.value(x, t))))
    throw NumericalError("block SDP: starting point is outside the shifted cone");

  if (B.cols() == 0) {
    res.x = x.cast<double>();
    res.converged = true;
    res.objective_history.push_back(static_cast<double>(barrier.objective(x)));
    return res;
  }

  VecR grad;
  MatR hess;
  while (true) {
    ++res.outer_iterations;
    // Centering by damped Newton on y.
    while (true) {
      if (res.newton_iterations >= options.max_newton) {
        res.hit_iteration_cap = true;
        break;
      }
      barrier.derivatives(x, t, grad, hess);
      const VecR gy = B.transpose() * grad;
      const MatR hy = B.transpose() * hess * B;
      const VecR dy = hy.ldlt().solve(-gy);
      const Real decrement = -gy.dot(dy);
      if (!(decrement > 0) || decrement / 2 <= options.centering_tol) break;
      const VecR dx = B * dy;
      const Real phi0 = barrier.value(x, t);
      Real step = 1;
      bool accepted = false;
      while (step > 1e-14L) {
        const VecR xn = x + step * dx;
        const Real phi = barrier.value(xn, t);
        if (phi <= phi0 - 0.25L * step * decrement) {
          x = xn;
          accepted = true;
          break;
        }
        step /= 2;
      }
      ++res.newton_iterations;
      if (!accepted) break;  // no further progress at working precision
    }
    res.objective_history.push_back(static_cast<double>(barrier.objective(x)));
    res.gap_bound = barrier.nu() / static_cast<double>(t);
    if (res.hit_iteration_cap) break;
    if (res.gap_bound <= options.gap_tol) {
      res.converged = true;
      break;
    }
    t *= options.t_growth;
  }
  res.x = x.cast<double>();
  return res;
}

}  // namespace curvcrb
