#include "curvcrb/serialize.hpp"

#include <cmath>

#include "curvcrb/errors.hpp"

namespace curvcrb {

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw DomainError("expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw DomainError("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

Json vector_to_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw DomainError("expected a vector");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

namespace {

Json matrices_to_json(const std::vector<MatrixXd>& ms) {
  Json a = Json::array();
  for (const auto& m : ms) a.push_back(matrix_to_json(m));
  return a;
}

std::vector<MatrixXd> matrices_from_json(const Json& j) {
  std::vector<MatrixXd> out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}

Json meta_to_json(const GeometryMeta& m) {
  Json j;
  j["model"] = m.model;
  j["estimator"] = m.estimator;
  j["backend"] = m.backend;
  j["gh_order"] = m.gh_order;
  j["mc_samples"] = m.mc_samples;
  j["seed"] = m.seed;
  j["jacobian_by_fd"] = m.jacobian_by_fd;
  j["condition_number"] = m.condition_number;
  j["flat"] = m.flat;
  j["normality_residual"] = m.normality_residual;
  j["warnings"] = m.warnings;
  Json se;
  se["J"] = matrix_to_json(m.J_se);
  se["Gamma"] = matrices_to_json(m.Gamma_se);
  se["b"] = matrix_to_json(m.b_se);
  se["G_N"] = matrix_to_json(m.G_N_se);
  se["C"] = matrix_to_json(m.C_se);
  se["unbias"] = matrix_to_json(m.unbias_se);
  j["standard_errors"] = std::move(se);
  return j;
}

GeometryMeta meta_from_json(const Json& j) {
  GeometryMeta m;
  m.model = j.at("model").get<std::string>();
  m.estimator = j.at("estimator").get<std::string>();
  m.backend = j.at("backend").get<std::string>();
  m.gh_order = j.at("gh_order").get<int>();
  m.mc_samples = j.at("mc_samples").get<std::uint64_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.jacobian_by_fd = j.at("jacobian_by_fd").get<bool>();
  m.condition_number = j.at("condition_number").get<double>();
  m.flat = j.at("flat").get<bool>();
  m.normality_residual = j.at("normality_residual").get<double>();
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  const Json& se = j.at("standard_errors");
  m.J_se = matrix_from_json(se.at("J"));
  m.Gamma_se = matrices_from_json(se.at("Gamma"));
  m.b_se = matrix_from_json(se.at("b"));
  m.G_N_se = matrix_from_json(se.at("G_N"));
  m.C_se = matrix_from_json(se.at("C"));
  m.unbias_se = matrix_from_json(se.at("unbias"));
  return m;
}

void check_version(const Json& j) {
  if (!j.contains("spec_version") || j["spec_version"] != kSchemaVersion)
    throw DomainError("unsupported or missing spec_version");
}

}  // namespace

Json to_json(const GeometryReport& r) {
  Json j;
  j["spec_version"] = kSchemaVersion;
  j["theta"] = vector_to_json(r.theta);
  j["J"] = matrix_to_json(r.J);
  j["G"] = matrix_to_json(r.G);
  j["Gamma"] = matrices_to_json(r.Gamma);
  j["b"] = matrix_to_json(r.b);
  j["G_N"] = matrix_to_json(r.G_N);
  j["C"] = matrix_to_json(r.C);
  j["unbias"] = matrix_to_json(r.unbias);
  j["meta"] = meta_to_json(r.meta);
  return j;
}

GeometryReport geometry_report_from_json(const Json& j) {
  check_version(j);
  GeometryReport r;
  r.theta = vector_from_json(j.at("theta"));
  r.J = matrix_from_json(j.at("J"));
  r.G = matrix_from_json(j.at("G"));
  r.Gamma = matrices_from_json(j.at("Gamma"));
  r.b = matrix_from_json(j.at("b"));
  r.G_N = matrix_from_json(j.at("G_N"));
  r.C = matrix_from_json(j.at("C"));
  r.unbias = matrix_from_json(j.at("unbias"));
  r.meta = meta_from_json(j.at("meta"));
  return r;
}

Json to_json(const DirectionalBound& b) {
  Json j;
  j["spec_version"] = kSchemaVersion;
  j["v"] = vector_to_json(b.v);
  j["v_tilde"] = vector_to_json(b.v_tilde);
  j["N"] = b.N;
  j["D"] = b.D;
  j["R"] = b.R;
  j["degenerate"] = b.degenerate;
  return j;
}

Json to_json(const SOSCertificate& c) {
  Json j;
  j["spec_version"] = kSchemaVersion;
  j["Delta"] = matrix_to_json(c.Delta);
  j["S"] = matrix_to_json(c.S);
  j["objective"] = c.objective;
  j["residual"] = c.max_coeff_residual;
  j["status"] = to_string(c.status);
  j["iterations"] = c.iterations;
  j["min_eig_delta"] = c.min_eig_delta;
  j["min_eig_S"] = c.min_eig_s;
  j["fallback"] = c.fallback;
  j["objective_history"] = c.objective_history;
  return j;
}

Json to_json(const VerificationReport& r) {
  Json j;
  j["passed"] = r.passed;
  j["samples"] = r.samples;
  j["scale"] = r.scale;
  j["worst_nonnegativity"] = r.worst_nonnegativity;
  j["worst_sos_mismatch"] = r.worst_sos_mismatch;
  j["worst_bound_excess"] = r.worst_bound_excess;
  j["degenerate_count"] = r.degenerate_count;
  j["degenerate_excess_count"] = r.degenerate_excess_count;
  j["worst_degenerate_excess"] = r.worst_degenerate_excess;
  Json off = Json::array();
  for (const auto& v : r.offending) off.push_back(vector_to_json(v));
  j["offending"] = std::move(off);
  return j;
}

Json to_json(const ValidationReport& r) {
  Json j;
  j["spec_version"] = kSchemaVersion;
  j["passed"] = r.passed;
  j["sigma_source"] = r.sigma_source;
  j["sigma"] = matrix_to_json(r.sigma);
  j["sigma_hat"] = matrix_to_json(r.sigma_hat);
  j["sample_count"] = r.sample_count;
  j["standard_errors"] = matrix_to_json(r.standard_errors);
  j["bias"] = vector_to_json(r.bias);
  j["bias_se"] = vector_to_json(r.bias_se);
  j["tolerance"] = r.tolerance;
  j["classical_margin"] = r.classical_margin;
  j["classical_pass"] = r.classical_pass;
  j["Delta"] = matrix_to_json(r.Delta);
  j["matrix_margin"] = r.matrix_margin;
  j["matrix_pass"] = r.matrix_pass;
  const SlackSummary& s = r.directional_slacks;
  j["directional_slacks"] = {{"count", s.count}, {"min", s.min}, {"mean", s.mean}, {"max", s.max}};
  j["directional_pass"] = r.directional_pass;
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace curvcrb
