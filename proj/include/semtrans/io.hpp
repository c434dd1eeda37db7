#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "semtrans/constructors.hpp"
#include "semtrans/exactness.hpp"
#include "semtrans/sem.hpp"

namespace semtrans {

using Json = nlohmann::json;

/// Document codecs. Parsers validate as they go and raise ValidationError
/// with a "<context>: <path>: ..." prefix; serializers emit documents that
/// re-parse to an equal value, with deterministic key order and number
/// formatting (reports are reproducible byte for byte).

Sem model_from_json(const Json& doc, const std::string& context = "model");
Json model_to_json(const Sem& sem);

Transformation tau_from_json(const Json& doc,
                             const std::string& context = "tau");
Json tau_to_json(const Transformation& tau);

InterventionMap omega_from_json(const Json& doc,
                                const std::string& context = "omega");
Json omega_to_json(const InterventionMap& omega);

Intervention intervention_from_json(const Json& doc,
                                    const std::string& context =
                                        "intervention");
Json intervention_to_json(const Intervention& i);

DynamicalSpec dynamics_from_json(const Json& doc,
                                 const std::string& context = "dynamics");
Json dynamics_to_json(const DynamicalSpec& spec);

/// Report document: the full exactness report plus config echo and tool
/// version. `provenance` and `collapsed` annotate constructor outputs.
Json report_to_json(const ExactnessReport& report,
                    const std::string& provenance = std::string(),
                    const std::vector<std::string>& collapsed = {});

/// Exogenous assignment file: an object of exogenous id -> value.
std::map<std::string, double> exo_values_from_json(
    const Json& doc, const std::string& context = "noise values");

/// CSV with a header row of labels and one row per draw, full-precision
/// decimal text.
void write_csv(std::ostream& out, const std::vector<std::string>& labels,
               const Eigen::MatrixXd& rows);

Json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& doc);
void write_triple_directory(const std::string& dir,
                            const CertifiedTriple& triple);

}  // namespace semtrans
