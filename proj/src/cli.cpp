#include "curvcrb/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "curvcrb/bounds.hpp"
#include "curvcrb/errors.hpp"
#include "curvcrb/geometry.hpp"
#include "curvcrb/linalg.hpp"
#include "curvcrb/model.hpp"
#include "curvcrb/serialize.hpp"
#include "curvcrb/soscert.hpp"
#include "curvcrb/validate.hpp"

namespace curvcrb::cli {

namespace {

// Streams derived from the top-level seed.
enum SeedStream : std::uint64_t { kStreamBackend = 1, kStreamSweep = 2, kStreamValidate = 3, kStreamVerify = 4 };

struct RunConfig {
  std::string model = "curved-gaussian";
  std::optional<double> sigma;
  std::optional<double> alpha;
  double gamma = 1.0;
  std::optional<VectorXd> theta;
  std::optional<VectorXd> v;
  std::string backend = "gh";
  int gh_order = 12;
  std::uint64_t mc_samples = 100000;
  std::uint64_t seed = 0;
  std::size_t count = 1000;
  std::size_t samples = 100000;
  bool empirical = false;
  std::string objective = "trace";
  std::string out;
  std::string toy;
  std::optional<VectorXd> a;
  std::optional<double> c;
  std::optional<MatrixXd> design;
};

// Raw flag values; only the ones given on the command line override the config.
struct Flags {
  std::string config;
  std::optional<std::string> model, theta, v, backend, out, toy, a, objective;
  std::optional<double> sigma, alpha, gamma, c;
  std::optional<int> gh_order;
  std::optional<std::uint64_t> mc_samples, seed;
  std::optional<std::size_t> count, samples;
  bool empirical = false;
};

VectorXd parse_vector(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      throw DomainError("--" + what + ": cannot parse '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(x)) throw DomainError("--" + what + ": cannot parse '" + item + "'");
    vals.push_back(x);
  }
  if (vals.empty()) throw DomainError("--" + what + " is empty");
  return Eigen::Map<VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

VectorXd json_vector(const Json& j, const std::string& key) {
  if (j.is_string()) return parse_vector(j.get<std::string>(), key);
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  return vector_from_json(j);
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("config file: " + std::string(e.what()));
  }
  if (!j.is_object()) throw DomainError("config file must hold a JSON object");
  static const std::set<std::string> known = {"model", "sigma", "alpha", "gamma", "theta", "v", "backend", "gh_order",
                                              "mc_samples", "seed", "count", "samples", "empirical", "objective",
                                              "out", "toy", "a", "c", "design"};
  try {
    for (const auto& [key, val] : j.items()) {
      if (!known.count(key)) throw DomainError("unknown config key '" + key + "'");
      if (key == "model") cfg.model = val.get<std::string>();
      else if (key == "sigma") cfg.sigma = val.get<double>();
      else if (key == "alpha") cfg.alpha = val.get<double>();
      else if (key == "gamma") cfg.gamma = val.get<double>();
      else if (key == "theta") cfg.theta = json_vector(val, key);
      else if (key == "v") cfg.v = json_vector(val, key);
      else if (key == "backend") cfg.backend = val.get<std::string>();
      else if (key == "gh_order") cfg.gh_order = val.get<int>();
      else if (key == "mc_samples") cfg.mc_samples = val.get<std::uint64_t>();
      else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
      else if (key == "count") cfg.count = val.get<std::size_t>();
      else if (key == "samples") cfg.samples = val.get<std::size_t>();
      else if (key == "empirical") cfg.empirical = val.get<bool>();
      else if (key == "objective") cfg.objective = val.get<std::string>();
      else if (key == "out") cfg.out = val.get<std::string>();
      else if (key == "toy") cfg.toy = val.get<std::string>();
      else if (key == "a") cfg.a = json_vector(val, key);
      else if (key == "c") cfg.c = val.get<double>();
      else if (key == "design") cfg.design = matrix_from_json(val);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("config file: " + std::string(e.what()));
  }
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  if (!f.config.empty()) apply_config_file(f.config, cfg);
  if (f.model) cfg.model = *f.model;
  if (f.sigma) cfg.sigma = *f.sigma;
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.gamma) cfg.gamma = *f.gamma;
  if (f.theta) cfg.theta = parse_vector(*f.theta, "theta");
  if (f.v) cfg.v = parse_vector(*f.v, "v");
  if (f.backend) cfg.backend = *f.backend;
  if (f.gh_order) cfg.gh_order = *f.gh_order;
  if (f.mc_samples) cfg.mc_samples = *f.mc_samples;
  if (f.seed) cfg.seed = *f.seed;
  if (f.count) cfg.count = *f.count;
  if (f.samples) cfg.samples = *f.samples;
  if (f.empirical) cfg.empirical = true;
  if (f.objective) cfg.objective = *f.objective;
  if (f.out) cfg.out = *f.out;
  if (f.toy) cfg.toy = *f.toy;
  if (f.a) cfg.a = parse_vector(*f.a, "a");
  if (f.c) cfg.c = *f.c;
  return cfg;
}

PairingConfig pairing_config(const RunConfig& cfg) {
  PairingConfig p;
  if (cfg.backend == "gh") p.backend = GaussHermite{cfg.gh_order};
  else if (cfg.backend == "closed") p.backend = ClosedForm{};
  else if (cfg.backend == "mc") p.backend = MonteCarlo{cfg.mc_samples, split_seed(cfg.seed, kStreamBackend)};
  else throw DomainError("--backend must be one of closed, gh, mc");
  p.validate();
  return p;
}

double require_positive(const std::optional<double>& x, const std::string& name) {
  if (!x) throw DomainError("--" + name + " is required for this model");
  if (!(*x > 0.0) || !std::isfinite(*x)) throw DomainError("--" + name + " must be positive and finite");
  return *x;
}

double require_finite(const std::optional<double>& x, const std::string& name) {
  if (!x) throw DomainError("--" + name + " is required for this model");
  if (!std::isfinite(*x)) throw DomainError("--" + name + " must be finite");
  return *x;
}

/// A model with its estimator, or a synthetic report (toys).
struct Setup {
  std::optional<ModelSpec> model;
  std::optional<EstimatorSpec> estimator;
  std::optional<ParameterPoint> theta;
  PairingConfig pairing;
  std::optional<GeometryReport> synthetic;

  GeometryReport report() const {
    if (synthetic) return *synthetic;
    return geometry_report(*model, *estimator, *theta, pairing);
  }
};

ParameterPoint theta_or_zero(const RunConfig& cfg, int d) {
  const VectorXd th = cfg.theta.value_or(VectorXd::Zero(d));
  if (th.size() != d) throw DomainError("--theta must have " + std::to_string(d) + " entries for this model");
  return ParameterPoint(th);
}

Setup build_setup(const RunConfig& cfg) {
  Setup s;
  if (!cfg.toy.empty()) {
    if (cfg.toy == "remark3") {
      if (!cfg.a) throw DomainError("--toy remark3 needs --a");
      const double c = require_positive(cfg.c, "c");
      const VectorXd& a = *cfg.a;
      const auto d = static_cast<int>(a.size());
      const int m = PairIndex(d).size();
      // Rank-1 normal bundle along the (1,1) pair with G = I.
      MatrixXd G_N = MatrixXd::Zero(m, m);
      G_N(0, 0) = c;
      MatrixXd C = MatrixXd::Zero(d, m);
      C.col(0) = a;
      s.synthetic = report_from_data(4.0 * MatrixXd::Identity(d, d), G_N, C);
    } else if (cfg.toy == "flat") {
      const int d = cfg.theta ? static_cast<int>(cfg.theta->size()) : 2;
      const int m = PairIndex(d).size();
      s.synthetic = report_from_data(4.0 * MatrixXd::Identity(d, d), MatrixXd::Zero(m, m), MatrixXd::Zero(d, m));
    } else {
      throw DomainError("--toy must be remark3 or flat");
    }
    return s;
  }

  s.pairing = pairing_config(cfg);
  if (cfg.model == "curved-gaussian" || cfg.model == "curved-gaussian-1d") {
    const CurvedGaussianParams params{require_positive(cfg.sigma, "sigma"), require_finite(cfg.alpha, "alpha")};
    if (!std::isfinite(cfg.gamma)) throw DomainError("--gamma must be finite");
    const bool scalar = cfg.model == "curved-gaussian-1d";
    s.theta = theta_or_zero(cfg, scalar ? 1 : 2);
    s.model = scalar ? builtin_curved_gaussian_1d(params.sigma, params.alpha)
                     : builtin_curved_gaussian(params.sigma, params.alpha);
    s.estimator = scalar ? builtin_gamma_estimator_1d(cfg.gamma, params, *s.theta)
                         : builtin_gamma_estimator(cfg.gamma, params, *s.theta);
  } else if (cfg.model == "linear-gaussian") {
    const double sigma = require_positive(cfg.sigma, "sigma");
    const int d = cfg.design ? static_cast<int>(cfg.design->cols()) : (cfg.theta ? static_cast<int>(cfg.theta->size()) : 2);
    const MatrixXd design = cfg.design.value_or(MatrixXd::Identity(d, d));
    s.theta = theta_or_zero(cfg, d);
    s.model = builtin_linear_gaussian(design, sigma);
    s.estimator = least_squares_estimator(design, sigma, *s.theta);
  } else {
    throw DomainError("unknown --model '" + cfg.model + "' (curved-gaussian, curved-gaussian-1d, linear-gaussian)");
  }
  return s;
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary | std::ios::trunc);
  if (!f) throw DomainError("cannot write " + cfg.out);
  f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int cmd_geometry(const RunConfig& cfg, std::ostream& out) {
  emit(cfg, dump(to_json(build_setup(cfg).report())), out);
  return kExitOk;
}

int cmd_bound(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.v) throw DomainError("--v is required");
  const GeometryReport report = build_setup(cfg).report();
  emit(cfg, dump(to_json(directional_bound(report, *cfg.v))), out);
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const Setup setup = build_setup(cfg);
  const GeometryReport report = setup.report();
  SweepSpec spec;
  if (cfg.v) spec.directions.push_back(*cfg.v);
  else spec = {{}, cfg.count, split_seed(cfg.seed, kStreamSweep)};
  std::optional<MatrixXd> excess;
  if (setup.estimator && setup.estimator->closed_form_covariance)
    excess = *setup.estimator->closed_form_covariance - classical_crb(report.J);
  emit(cfg, sweep_csv(directional_sweep(report, spec), excess), out);
  return kExitOk;
}

SOSCertificate solve_for(const RunConfig& cfg, const PolynomialSystem& sys) {
  SosSolverOptions opt;
  if (cfg.objective == "trace") opt.objective = SosObjective::trace;
  else if (cfg.objective == "zero") opt.objective = SosObjective::zero;
  else throw DomainError("--objective must be trace or zero");
  return solve_sos_sdp(sys, opt);
}

int cmd_sdp(const RunConfig& cfg, std::ostream& out) {
  const GeometryReport report = build_setup(cfg).report();
  const PolynomialSystem sys = build_system(report);
  const SOSCertificate cert = solve_for(cfg, sys);
  const VerificationReport ver = verify_certificate(cert, sys, report, cfg.count, split_seed(cfg.seed, kStreamVerify));
  Json j = to_json(cert);
  j["verification"] = to_json(ver);
  emit(cfg, dump(j), out);
  if (cert.status == SolverStatus::infeasible_numerics) return kExitNumerical;
  return ver.passed ? kExitOk : kExitVerification;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const Setup setup = build_setup(cfg);
  if (!setup.model) throw DomainError("validate needs a sampling model, not a --toy");
  const GeometryReport report = setup.report();
  const SOSCertificate cert = solve_for(cfg, build_system(report));
  if (cert.status == SolverStatus::infeasible_numerics) throw NumericalError("SOS solve failed");
  const SweepSpec sweep{{}, cfg.count, split_seed(cfg.seed, kStreamSweep)};
  ValidationOptions opt;
  opt.samples = cfg.samples;
  opt.seed = split_seed(cfg.seed, kStreamValidate);
  opt.force_empirical = cfg.empirical;
  const ValidationReport rep =
      full_validation(*setup.model, *setup.estimator, *setup.theta, setup.pairing, cert, sweep, opt);
  emit(cfg, dump(to_json(rep)), out);
  return rep.passed ? kExitOk : kExitVerification;
}

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

int cmd_paper_example(RunConfig cfg, std::ostream& out) {
  if (!cfg.sigma) cfg.sigma = 1.0;
  if (!cfg.alpha) cfg.alpha = 1.0;
  cfg.model = "curved-gaussian";
  cfg.toy.clear();
  cfg.theta = VectorXd::Zero(2);
  const double sg = require_positive(cfg.sigma, "sigma");
  const double al = require_finite(cfg.alpha, "alpha");
  const double ga = cfg.gamma;
  const GeometryReport r = build_setup(cfg).report();

  const double s2 = sg * sg;
  const double s4 = s2 * s2;
  struct Row {
    std::string name;
    double computed;
    double closed;
  };
  std::vector<Row> rows;
  const char* jn[2] = {"1", "2"};
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      rows.push_back({std::string("J") + jn[i] + jn[j], r.J(i, j), i == j ? 1.0 / s2 : 0.0});
  double gamma_max = 0.0;
  for (const auto& g : r.Gamma) gamma_max = std::max(gamma_max, g.cwiseAbs().maxCoeff());
  rows.push_back({"max|Gamma|", gamma_max, 0.0});
  MatrixXd gn(3, 3);
  gn << 3.0 / (16 * s4) + al * al / s2, 0, 1.0 / (16 * s4), 0, 1.0 / (16 * s4), 0, 1.0 / (16 * s4), 0, 3.0 / (16 * s4);
  const char* pn[3] = {"11", "12", "22"};
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b)
      rows.push_back({std::string("G_N[") + pn[a] + "," + pn[b] + "]", r.G_N(a, b), gn(a, b)});
  for (int p = 0; p < 2; ++p)
    for (int a = 0; a < 3; ++a)
      rows.push_back({std::string("C[") + jn[p] + "," + pn[a] + "]", r.C(p, a), (p == 1 && a == 0) ? ga * al : 0.0});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      rows.push_back({std::string("unbias") + jn[i] + jn[j], r.unbias(i, j), i == j ? 0.5 : 0.0});
  for (const auto& v : {Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0), Eigen::Vector2d(0.6, -0.8), Eigen::Vector2d(2, 1)}) {
    const double v1 = v(0), v2 = v(1);
    const double n2 = v1 * v1 + v2 * v2;
    const double closed = 16 * s4 * v2 * v2 * std::pow(v1, 4) * ga * ga * al * al /
                          (3 * n2 * n2 + 16 * s2 * al * al * std::pow(v1, 4));
    rows.push_back({"R(" + fmt("%g", v1) + "," + fmt("%g", v2) + ")", directional_bound(r, v).R, closed});
  }

  constexpr double kTol = 1e-8;
  std::ostringstream os;
  os << "curved Gaussian at theta = 0: sigma = " << fmt("%g", sg) << ", alpha = " << fmt("%g", al)
     << ", gamma = " << fmt("%g", ga) << ", backend = " << r.meta.backend << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %22s %22s %12s\n", "quantity", "computed", "closed form", "|dev|");
  os << line;
  bool ok = true;
  for (const Row& row : rows) {
    const double dev = std::abs(row.computed - row.closed);
    ok = ok && dev <= kTol;
    std::snprintf(line, sizeof line, "%-14s %22.15g %22.15g %12.3e\n", row.name.c_str(), row.computed, row.closed, dev);
    os << line;
  }
  os << (ok ? "all deviations <= 1e-8\n" : "DEVIATION ABOVE 1e-8\n");
  emit(cfg, os.str(), out);
  return ok ? kExitOk : kExitVerification;
}

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file; flags override its keys");
  sub->add_option("--model", f.model, "curved-gaussian | curved-gaussian-1d | linear-gaussian");
  sub->add_option("--sigma", f.sigma, "noise standard deviation");
  sub->add_option("--alpha", f.alpha, "curvature of the mean map");
  sub->add_option("--gamma", f.gamma, "estimator mixing coefficient (default 1)");
  sub->add_option("--theta", f.theta, "parameter point, comma separated (default 0)");
  sub->add_option("--v", f.v, "direction, comma separated");
  sub->add_option("--backend", f.backend, "closed | gh | mc (default gh)");
  sub->add_option("--gh-order", f.gh_order, "Gauss-Hermite nodes per axis (default 12)");
  sub->add_option("--mc-samples", f.mc_samples, "Monte Carlo samples for pairings (default 1e5)");
  sub->add_option("--seed", f.seed, "top-level seed (default 0)");
  sub->add_option("--count", f.count, "random directions for sweeps and verification (default 1000)");
  sub->add_option("--samples", f.samples, "estimator draws for validate (default 1e5)");
  sub->add_flag("--empirical", f.empirical, "validate against the sampled covariance only");
  sub->add_option("--objective", f.objective, "trace | zero (default trace)");
  sub->add_option("--out", f.out, "write the report here instead of stdout");
  sub->add_option("--toy", f.toy, "remark3 | flat: synthetic geometry instead of a model");
  sub->add_option("--a", f.a, "remark3 toy: vector a");
  sub->add_option("--c", f.c, "remark3 toy: normal norm c > 0");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curvature-corrected Cramer-Rao bounds"};
  app.require_subcommand(1, 1);
  Flags flags;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, std::ostream&);
  };
  const std::vector<Command> commands = {
      {"geometry", "geometry report (JSON)", cmd_geometry},
      {"bound", "directional bound along --v (JSON)", cmd_bound},
      {"sweep", "directional bounds over random directions (CSV)", cmd_sweep},
      {"sdp", "SOS certificate for a matrix correction (JSON)", cmd_sdp},
      {"validate", "Monte Carlo end-to-end validation (JSON)", cmd_validate},
      {"paper-example", "worked curved-Gaussian example, computed vs closed form",
       [](const RunConfig& c, std::ostream& o) { return cmd_paper_example(c, o); }},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_flags(subs.back(), flags);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const RunConfig cfg = resolve(flags);
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (subs[i]->parsed()) return commands[i].fn(cfg, out);
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace curvcrb::cli
