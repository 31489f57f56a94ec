#include "curvcrb/monomials.hpp"

#include <cmath>

#include "curvcrb/errors.hpp"

namespace curvcrb {

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

namespace {

void enumerate(int var, int remaining, Exponent& current, std::vector<Exponent>& out) {
  const int d = static_cast<int>(current.size());
  if (var == d - 1) {
    current[static_cast<std::size_t>(var)] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[static_cast<std::size_t>(var)] = e;
    enumerate(var + 1, remaining - e, current, out);
  }
}

}  // namespace

MonomialBasis::MonomialBasis(int d, int degree) : d_(d), degree_(degree) {
  if (d < 1) throw DomainError("monomial basis needs d >= 1");
  if (degree < 0) throw DomainError("monomial degree must be >= 0");
  Exponent current(static_cast<std::size_t>(d), 0);
  enumerate(0, degree, current, monomials_);
  for (std::size_t k = 0; k < monomials_.size(); ++k) lookup_.emplace(monomials_[k], static_cast<int>(k));
}

int MonomialBasis::index_of(const Exponent& e) const {
  const auto it = lookup_.find(e);
  return it == lookup_.end() ? -1 : it->second;
}

Eigen::VectorXd MonomialBasis::evaluate(const Eigen::VectorXd& v) const {
  if (v.size() != d_) throw DomainError("monomial evaluation: wrong dimension");
  Eigen::VectorXd z(size());
  for (int k = 0; k < size(); ++k) {
    double val = 1.0;
    for (int i = 0; i < d_; ++i)
      for (int p = 0; p < monomials_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]; ++p) val *= v(i);
    z(k) = val;
  }
  return z;
}

MonomialBasis enumerate_monomials(int d, int degree) { return MonomialBasis(d, degree); }

HomogeneousPolynomial multiply(const HomogeneousPolynomial& p, const HomogeneousPolynomial& q) {
  if (p.basis.dim() != q.basis.dim()) throw DomainError("polynomial product: dimension mismatch");
  HomogeneousPolynomial out{MonomialBasis(p.basis.dim(), p.basis.degree() + q.basis.degree()), {}};
  out.coeffs = Eigen::VectorXd::Zero(out.basis.size());
  Exponent sum(static_cast<std::size_t>(p.basis.dim()));
  for (int a = 0; a < p.basis.size(); ++a) {
    if (p.coeffs(a) == 0.0) continue;
    for (int b = 0; b < q.basis.size(); ++b) {
      if (q.coeffs(b) == 0.0) continue;
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = p.basis[a][i] + q.basis[b][i];
      out.coeffs(out.basis.index_of(sum)) += p.coeffs(a) * q.coeffs(b);
    }
  }
  return out;
}

HomogeneousPolynomial linear_form(const Eigen::VectorXd& coeffs) {
  const auto d = static_cast<int>(coeffs.size());
  HomogeneousPolynomial out{MonomialBasis(d, 1), Eigen::VectorXd::Zero(d)};
  // degree-1 basis is v1, ..., vd in order
  out.coeffs = coeffs;
  return out;
}

}  // namespace curvcrb
