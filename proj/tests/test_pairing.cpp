#include <doctest.h>

#include <cmath>

#include "curvcrb/errors.hpp"
#include "curvcrb/geometry.hpp"
#include "curvcrb/pairing.hpp"

using namespace curvcrb;

namespace {

Integrand constant_one() {
  return {[](SampleRef) { return 1.0; }, 1.0};
}

Integrand score_product(const ModelSpec& m, const ParameterPoint& th, int i, int j) {
  return {[&m, th, i, j](SampleRef x) {
            const VectorXd y = m.score(x, th.theta());
            return y(i) * y(j);
          },
          std::nullopt};
}

const PairingConfig kGh{GaussHermite{12}};
const PairingConfig kMc{MonteCarlo{100000, 123}};

}  // namespace

TEST_CASE("constant integrand") {
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  const ParameterPoint th{0.0, 0.0};
  CHECK(expect(m, th, constant_one(), kGh).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(expect(m, th, constant_one(), PairingConfig{ClosedForm{}}).value == 1.0);
  const ScalarExpectation mc = expect(m, th, constant_one(), kMc);
  CHECK(mc.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mc.std_error == doctest::Approx(0.0));
}

TEST_CASE("fisher entries by quadrature") {
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  SUBCASE("origin") {
    const ParameterPoint th{0.0, 0.0};
    CHECK(expect(m, th, score_product(m, th, 0, 0), kGh).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("theta = (0.3, 0)") {
    const ParameterPoint th{0.3, 0.0};
    CHECK(expect(m, th, score_product(m, th, 0, 0), kGh).value == doctest::Approx(1.36).epsilon(1e-12));
    const ScalarExpectation mc = expect(m, th, score_product(m, th, 0, 0), kMc);
    CHECK(std::abs(mc.value - 1.36) <= 5 * mc.std_error);
  }
}

TEST_CASE("batch expectations share draws") {
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  const ParameterPoint th{0.0, 0.0};
  const BatchExpectation ones = expect_batch(m, th, {constant_one(), constant_one()}, kMc);
  CHECK(ones.values(0) == doctest::Approx(1.0));
  CHECK(ones.values(1) == doctest::Approx(1.0));

  const std::vector<Integrand> gs = {score_product(m, th, 0, 0), score_product(m, th, 0, 1),
                                     score_product(m, th, 1, 1)};
  const BatchExpectation gh = expect_batch(m, th, gs, kGh);
  CHECK(gh.values(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(gh.values(1)) <= 1e-12);
  CHECK(gh.values(2) == doctest::Approx(1.0).epsilon(1e-12));

  const BatchExpectation a = expect_batch(m, th, gs, kMc);
  const BatchExpectation b = expect_batch(m, th, gs, kMc);
  CHECK(a.values == b.values);
  CHECK(a.std_errors == b.std_errors);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(a.values(k) - gh.values(k)) <= 5 * a.std_errors(k));

  const BatchExpectation c = expect_batch(m, th, gs, PairingConfig{MonteCarlo{100000, 124}});
  CHECK(a.values != c.values);
}

TEST_CASE("closed form needs registered values") {
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  const ParameterPoint th{0.0, 0.0};
  CHECK_THROWS_AS(expect(m, th, score_product(m, th, 0, 0), PairingConfig{ClosedForm{}}), DomainError);
  CHECK(expect(m, th, score_product_integrand(m, th, 0, 0), PairingConfig{ClosedForm{}}).value ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(expect_vector(
                      m, th, 1, [](SampleRef, Eigen::Ref<VectorXd> out) { out(0) = 1.0; },
                      PairingConfig{ClosedForm{}}),
                  DomainError);
}

TEST_CASE("backend configuration limits") {
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  const ParameterPoint th{0.0, 0.0};
  CHECK_THROWS_AS(expect(m, th, constant_one(), PairingConfig{GaussHermite{1}}), DomainError);
  CHECK_THROWS_AS(expect(m, th, constant_one(), PairingConfig{GaussHermite{65}}), DomainError);
  CHECK_THROWS_AS(expect(m, th, constant_one(), PairingConfig{MonteCarlo{999, 0}}), DomainError);
  CHECK_NOTHROW(expect(m, th, constant_one(), PairingConfig{GaussHermite{64}}));

  // 64^5 nodes exceed the grid budget
  const ModelSpec wide = builtin_linear_gaussian(MatrixXd::Identity(5, 2), 1.0);
  CHECK_THROWS_AS(expect(wide, th, constant_one(), PairingConfig{GaussHermite{64}}), DomainError);
  CHECK_NOTHROW(expect(wide, th, constant_one(), PairingConfig{GaussHermite{20}}));
}

TEST_CASE("nonfinite integrand values are reported") {
  const ModelSpec m = builtin_curved_gaussian(1.0, 1.0);
  const ParameterPoint th{0.0, 0.0};
  const Integrand bad{[](SampleRef) { return std::nan(""); }, std::nullopt};
  CHECK_THROWS_AS(expect(m, th, bad, kGh), NumericalError);
  CHECK_THROWS_AS(expect(m, th, bad, kMc), NumericalError);
}

TEST_CASE("quadrature rule moments") {
  for (int order : {2, 5, 12, 40}) {
    const QuadratureRule r = gauss_hermite_rule(order);
    CHECK(r.nodes.size() == order);
    CHECK(r.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(r.weights.dot(r.nodes)) <= 1e-13);
    CHECK(r.weights.dot(r.nodes.cwiseAbs2()) == doctest::Approx(1.0).epsilon(1e-12));
    if (order >= 3) CHECK(r.weights.dot(r.nodes.array().pow(4).matrix()) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("quadrature is linear") {
  const ModelSpec m = builtin_curved_gaussian(0.8, 1.4);
  const ParameterPoint th{0.2, -0.5};
  const Integrand g = second_derivative_integrand(m, th, 0, 0);
  const Integrand h = score_product(m, th, 0, 1);
  const double a = 2.5, b = -0.75;
  const Integrand combo{[&](SampleRef x) { return a * g.eval(x) + b * h.eval(x); }, std::nullopt};
  const double lhs = expect(m, th, combo, kGh).value;
  const double rhs = a * expect(m, th, g, kGh).value + b * expect(m, th, h, kGh).value;
  CHECK(std::abs(lhs - rhs) <= 1e-12);
}

TEST_CASE("quadrature matches registered closed forms") {
  for (const auto& [sigma, alpha] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.6, -1.5}}) {
    const ModelSpec m = builtin_curved_gaussian(sigma, alpha);
    for (const ParameterPoint& th : {ParameterPoint{0.0, 0.0}, ParameterPoint{0.3, 1.0}}) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          for (const Integrand& g : {score_product_integrand(m, th, i, j), second_derivative_integrand(m, th, i, j)}) {
            REQUIRE(g.exact);
            CHECK(std::abs(expect(m, th, g, PairingConfig{GaussHermite{10}}).value - *g.exact) <= 1e-8);
            const ScalarExpectation mc = expect(m, th, g, kMc);
            CHECK(std::abs(mc.value - *g.exact) <= 5 * mc.std_error + 1e-12);
          }
        }
    }
  }
}
