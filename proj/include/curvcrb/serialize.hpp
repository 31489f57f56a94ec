#pragma once

#include <json.hpp>

#include "curvcrb/bounds.hpp"
#include "curvcrb/geometry.hpp"
#include "curvcrb/soscert.hpp"
#include "curvcrb/validate.hpp"

namespace curvcrb {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j);

Json to_json(const GeometryReport& report);
GeometryReport geometry_report_from_json(const Json& j);

Json to_json(const DirectionalBound& bound);
Json to_json(const SOSCertificate& cert);
Json to_json(const VerificationReport& report);
Json to_json(const ValidationReport& report);

}  // namespace curvcrb
