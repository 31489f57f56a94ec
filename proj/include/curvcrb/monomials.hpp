#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace curvcrb {

using Exponent = std::vector<int>;

std::size_t binomial(int n, int k);

/// All monomials v^e with |e| = degree in d variables, graded-lex order
/// (v1^k first, vd^k last).
class MonomialBasis {
 public:
  MonomialBasis() = default;
  MonomialBasis(int d, int degree);

  int dim() const { return d_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(monomials_.size()); }
  const Exponent& operator[](int k) const { return monomials_[static_cast<std::size_t>(k)]; }
  const std::vector<Exponent>& monomials() const { return monomials_; }

  /// Position of `e`, or -1 when it is not in the basis.
  int index_of(const Exponent& e) const;

  /// z(v): all monomials evaluated at v.
  Eigen::VectorXd evaluate(const Eigen::VectorXd& v) const;

 private:
  int d_ = 0;
  int degree_ = 0;
  std::vector<Exponent> monomials_;
  std::map<Exponent, int> lookup_;
};

MonomialBasis enumerate_monomials(int d, int degree);

/// Homogeneous polynomial as a coefficient vector over a MonomialBasis.
struct HomogeneousPolynomial {
  MonomialBasis basis;
  Eigen::VectorXd coeffs;

  double evaluate(const Eigen::VectorXd& v) const { return coeffs.dot(basis.evaluate(v)); }
};

/// Product by exponent-vector convolution.
HomogeneousPolynomial multiply(const HomogeneousPolynomial& p, const HomogeneousPolynomial& q);

HomogeneousPolynomial linear_form(const Eigen::VectorXd& coeffs);

}  // namespace curvcrb
