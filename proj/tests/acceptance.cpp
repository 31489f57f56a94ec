#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "curvcrb/bounds.hpp"
#include "curvcrb/cli.hpp"
#include "curvcrb/linalg.hpp"
#include "curvcrb/soscert.hpp"
#include "curvcrb/validate.hpp"
#include "oracles.hpp"

using namespace curvcrb;

namespace {

const PairingConfig kGh{GaussHermite{12}};

struct Outcome {
  bool pass;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

GeometryReport worked_report(double sigma, double alpha, double gamma, const PairingConfig& cfg = kGh) {
  const ParameterPoint th{0.0, 0.0};
  return geometry_report(builtin_curved_gaussian(sigma, alpha), builtin_gamma_estimator(gamma, {sigma, alpha}, th), th,
                         cfg);
}

Outcome ac1() {
  const GeometryReport r = worked_report(1, 1, 1);
  double dev = max_abs(r.J - MatrixXd::Identity(2, 2));
  for (const auto& g : r.Gamma) dev = std::max(dev, max_abs(g));
  dev = std::max(dev, max_abs(r.G_N - oracle::normal_gram(1, 1)));
  dev = std::max(dev, max_abs(r.C - oracle::error_pairings(1, 1)));
  dev = std::max(dev, max_abs(r.unbias - 0.5 * MatrixXd::Identity(2, 2)));
  return {dev <= 1e-8, "max deviation " + num(dev)};
}

Outcome ac2() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const double sigma = oracle::uniform(0.3, 2.5, rng), alpha = oracle::uniform(0.2, 2.5, rng);
    const double gamma = oracle::uniform(-3.0, 3.0, rng);
    const GeometryReport r = worked_report(sigma, alpha, gamma);
    for (int k = 0; k < 1000; ++k) {
      const VectorXd v = oracle::gaussian_vector(2, rng);
      const double expect = oracle::directional(sigma, alpha, gamma, v(0), v(1));
      worst = std::max(worst, std::abs(directional_bound(r, v).R - expect) / std::max(expect, 1e-300));
    }
  }
  const double r11 = directional_bound(worked_report(1, 1, 1), Eigen::Vector2d(1, 1)).R;
  const double dev11 = std::abs(r11 - 4.0 / 7.0) / (4.0 / 7.0);
  return {worst <= 1e-8 && dev11 <= 1e-8, "worst relative error " + num(worst) + ", R(1,1) = " + num(r11)};
}

Outcome ac3() {
  std::mt19937_64 rng(103);
  double worst = INFINITY;
  for (int t = 0; t < 5; ++t) {
    const double sigma = t == 0 ? 1.0 : oracle::uniform(0.3, 2.0, rng);
    const double alpha = t == 0 ? 1.0 : oracle::uniform(0.3, 2.0, rng);
    const double gamma = t == 0 ? 1.0 : oracle::uniform(-2.0, 2.0, rng);
    const GeometryReport r = worked_report(sigma, alpha, gamma);
    const MatrixXd gap = oracle::covariance(sigma, gamma) - classical_crb(r.J);
    for (int k = 0; k < 1000; ++k) {
      const VectorXd v = oracle::gaussian_vector(2, rng).normalized();
      worst = std::min(worst, v.dot(gap * v) - directional_bound(r, v).R);
    }
  }
  return {worst >= -1e-9, "min slack " + num(worst)};
}

Outcome ac4() {
  const double sigma = 1.0, alpha = 1.0, gamma = 1.0;
  const ParameterPoint th{0.0};
  const ModelSpec m = builtin_curved_gaussian_1d(sigma, alpha);
  const EstimatorSpec e = builtin_gamma_estimator_1d(gamma, {sigma, alpha}, th);
  const GeometryReport r = geometry_report(m, e, th, kGh);

  auto y = [&](SampleRef x) { return m.score(x, th.theta())(0); };
  auto h = [&](SampleRef x) { return 0.25 * y(x) * y(x) + 0.5 * m.score_jacobian(x, th.theta())(0, 0); };
  auto z = [&](SampleRef x) { return e.map(x)(0) - th[0]; };
  const BatchExpectation base = expect_batch(
      m, th, {{[&](SampleRef x) { return y(x) * y(x); }, {}}, {[&](SampleRef x) { return h(x) * 0.5 * y(x); }, {}}}, kGh);
  const double gam = base.values(1) / (0.25 * base.values(0));
  auto pi = [&](SampleRef x) { return h(x) - gam * 0.5 * y(x); };
  const BatchExpectation pairs = expect_batch(
      m, th, {{[&](SampleRef x) { return z(x) * pi(x); }, {}}, {[&](SampleRef x) { return pi(x) * pi(x); }, {}}}, kGh);
  const double direct = pairs.values(0) * pairs.values(0) / pairs.values(1);

  const double r1 = directional_bound(r, VectorXd::Constant(1, 1.0)).R;
  double spread = 0.0;
  for (double v : {-5.0, -1.3, 0.01, 0.7, 2.0, 40.0})
    spread = std::max(spread, std::abs(directional_bound(r, VectorXd::Constant(1, v)).R / (v * v) - r1) / r1);
  const double dev = std::abs(r1 - direct) / direct;
  return {spread <= 1e-10 && dev <= 1e-10, "R(v)/v^2 spread " + num(spread) + ", vs direct " + num(dev)};
}

Outcome ac5() {
  MatrixXd G_N = MatrixXd::Zero(3, 3);
  G_N(0, 0) = 4.0;
  MatrixXd C = MatrixXd::Zero(2, 3);
  C(0, 0) = 1;
  C(1, 0) = 2;
  const GeometryReport r = report_from_data(4.0 * MatrixXd::Identity(2, 2), G_N, C);
  const SOSCertificate cert = solve_sos_sdp(build_system(r));
  MatrixXd expect(2, 2);
  expect << 0.25, 0.5, 0.5, 1.0;
  const double dev = max_abs(cert.Delta - expect);
  const double s_norm = cert.S.norm();
  const ExactCorrection ex = exact_matrix_correction(r);
  const double ex_dev = max_abs(ex.Delta - expect);
  return {dev <= 1e-6 && s_norm <= 1e-6 && ex.applies && ex_dev <= 1e-6,
          "Delta deviation " + num(dev) + ", |S| " + num(s_norm) + ", exact correction applies " +
              (ex.applies ? "yes" : "no") + " dev " + num(ex_dev)};
}

Outcome ac6() {
  const GeometryReport r = worked_report(1, 1, 1);
  const PolynomialSystem sys = build_system(r);
  const SOSCertificate cert = solve_sos_sdp(sys);
  const VerificationReport v = verify_certificate(cert, sys, r, 10000, 6);
  return {v.passed && cert.status == SolverStatus::optimal,
          "status " + to_string(cert.status) + ", worst nonnegativity " + num(v.worst_nonnegativity) +
              ", worst bound excess " + num(v.worst_bound_excess)};
}

Outcome ac7() {
  const auto start = std::chrono::steady_clock::now();
  const double sigma = 1.0, gamma = 1.0;
  const ParameterPoint th{0.0, 0.0};
  const ModelSpec m = builtin_curved_gaussian(sigma, 1.0);
  const EstimatorSpec e = builtin_gamma_estimator(gamma, {sigma, 1.0}, th);
  const CovarianceEstimate est = estimate_covariance(m, e, th, 100000, 7);
  const MatrixXd truth = oracle::covariance(sigma, gamma);
  double worst_z = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      worst_z = std::max(worst_z, std::abs(est.sigma_hat(i, j) - truth(i, j)) / est.standard_errors(i, j));

  const GeometryReport r = geometry_report(m, e, th, kGh);
  const SOSCertificate cert = solve_sos_sdp(build_system(r));
  ValidationOptions opt;
  opt.samples = 100000;
  opt.seed = 7;
  opt.force_empirical = true;
  const ValidationReport v = full_validation(m, e, th, kGh, cert, SweepSpec{{}, 1000, 7}, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst_z <= 4.0 && v.passed && secs <= 120.0,
          "max |z| " + num(worst_z) + ", validation " + (v.passed ? "passed" : "failed") + ", " + num(secs) + " s"};
}

Outcome ac8() {
  std::mt19937_64 rng(108);
  const double sigma = 0.9, alpha = 1.3, gamma = 0.7;
  const ParameterPoint th{0.3, -0.2};
  const ModelSpec m = builtin_curved_gaussian(sigma, alpha);
  const EstimatorSpec e = builtin_gamma_estimator(gamma, {sigma, alpha}, th);
  const GeometryReport base = geometry_report(m, e, th, kGh);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const MatrixXd A = oracle::random_invertible(2, oracle::uniform(1.0, 10.0, rng), rng);
    const GeometryReport rep =
        geometry_report(reparameterize(m, A), transform_estimator(e, A), ParameterPoint(A * th.theta()), kGh);
    const VectorXd v = oracle::gaussian_vector(2, rng);
    const double lhs = directional_bound(rep, v).R;
    const double rhs = directional_bound(base, A.transpose() * v).R;
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return {worst <= 1e-8, "worst relative error " + num(worst)};
}

Outcome ac9() {
  const GeometryReport gh = worked_report(1, 1, 1);
  const GeometryReport mc = worked_report(1, 1, 1, PairingConfig{MonteCarlo{100000, 9}});
  double worst = 0.0;
  auto compare = [&](const MatrixXd& a, const MatrixXd& b, const MatrixXd& se) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double diff = std::abs(a(i, j) - b(i, j));
        if (diff <= 1e-12) continue;
        worst = std::max(worst, se(i, j) > 0 ? diff / se(i, j) : INFINITY);
      }
  };
  compare(gh.J, mc.J, mc.meta.J_se);
  for (std::size_t l = 0; l < gh.Gamma.size(); ++l) compare(gh.Gamma[l], mc.Gamma[l], mc.meta.Gamma_se[l]);
  compare(gh.b, mc.b, mc.meta.b_se);
  compare(gh.G_N, mc.G_N, mc.meta.G_N_se);
  compare(gh.C, mc.C, mc.meta.C_se);
  compare(gh.unbias, mc.unbias, mc.meta.unbias_se);
  return {worst <= 5.0, "max |deviation| / SE " + num(worst)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ac10() {
  const std::vector<std::vector<std::string>> cases = {
      {"geometry", "--sigma", "1", "--alpha", "1"},
      {"geometry", "--sigma", "1", "--alpha", "1", "--backend", "mc", "--mc-samples", "20000", "--seed", "5"},
      {"bound", "--sigma", "1", "--alpha", "1", "--v", "1,1"},
      {"sweep", "--sigma", "1", "--alpha", "1", "--count", "200", "--seed", "5"},
      {"sdp", "--sigma", "1", "--alpha", "1", "--seed", "5"},
      {"sdp", "--toy", "remark3", "--a", "1,2", "--c", "4"},
      {"validate", "--sigma", "1", "--alpha", "1", "--samples", "20000", "--seed", "5"},
      {"paper-example"},
  };
  int identical = 0;
  std::string failures;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    std::string contents[2];
    bool ok = true;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string path = "/tmp/curvcrb_acceptance_" + std::to_string(k) + "_" + std::to_string(rep);
      auto args = cases[k];
      args.insert(args.end(), {"--out", path});
      std::ostringstream out, err;
      ok = ok && cli::run(args, out, err) == cli::kExitOk;
      contents[rep] = slurp(path);
      std::remove(path.c_str());
    }
    if (ok && !contents[0].empty() && contents[0] == contents[1])
      ++identical;
    else
      failures += " " + cases[k][0];
  }
  return {identical == static_cast<int>(cases.size()),
          std::to_string(identical) + "/" + std::to_string(cases.size()) + " identical" + failures};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 worked example geometry", ac1},   {"AC2 directional closed form", ac2},
      {"AC3 covariance sandwich", ac3},       {"AC4 scalar reduction", ac4},
      {"AC5 rank-one toy certificate", ac5},  {"AC6 certificate soundness", ac6},
      {"AC7 Monte Carlo consistency", ac7},   {"AC8 reparameterization equivariance", ac8},
      {"AC9 backend cross-validation", ac9},  {"AC10 CLI determinism", ac10},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
