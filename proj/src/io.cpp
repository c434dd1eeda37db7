#include "semtrans/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "semtrans/errors.hpp"
#include "semtrans/version.hpp"

namespace semtrans {

namespace {

[[noreturn]] void fail(const std::string& context, const std::string& what) {
  throw ValidationError(context + ": " + what);
}

const Json& field(const Json& doc, const char* key,
                  const std::string& context) {
  if (!doc.is_object()) fail(context, "expected an object");
  auto it = doc.find(key);
  if (it == doc.end())
    fail(context, std::string("missing field '") + key + "'");
  return *it;
}

double number_at(const Json& doc, const std::string& context) {
  if (!doc.is_number()) fail(context, "expected a number");
  return doc.get<double>();
}

std::string string_at(const Json& doc, const std::string& context) {
  if (!doc.is_string()) fail(context, "expected a string");
  return doc.get<std::string>();
}

std::vector<std::string> string_list(const Json& doc,
                                     const std::string& context) {
  if (!doc.is_array()) fail(context, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& item : doc) out.push_back(string_at(item, context));
  return out;
}

BaseNoise base_noise_from_json(const Json& doc, const std::string& context) {
  const std::string type = string_at(field(doc, "type", context), context);
  if (type == "bernoulli")
    return BaseNoise::bernoulli(
        number_at(field(doc, "p", context), context + ".p"));
  if (type == "normal")
    return BaseNoise::normal(
        number_at(field(doc, "mean", context), context + ".mean"),
        number_at(field(doc, "variance", context), context + ".variance"));
  if (type == "uniform")
    return BaseNoise::uniform(
        number_at(field(doc, "lo", context), context + ".lo"),
        number_at(field(doc, "hi", context), context + ".hi"));
  if (type == "point_mass")
    return BaseNoise::point_mass(
        number_at(field(doc, "value", context), context + ".value"));
  fail(context, "unknown noise type '" + type + "'");
}

Json base_noise_to_json(const BaseNoise& noise) {
  switch (noise.kind) {
    case NoiseKind::kBernoulli:
      return {{"type", "bernoulli"}, {"p", noise.a}};
    case NoiseKind::kNormal:
      return {{"type", "normal"}, {"mean", noise.a}, {"variance", noise.b}};
    case NoiseKind::kUniform:
      return {{"type", "uniform"}, {"lo", noise.a}, {"hi", noise.b}};
    case NoiseKind::kPointMass:
      return {{"type", "point_mass"}, {"value", noise.a}};
  }
  throw InternalConsistencyError("unhandled noise kind");
}

ValueDomain domain_from_json(const Json& doc, const std::string& context) {
  if (doc.contains("values")) {
    const auto& values = doc["values"];
    if (!values.is_array()) fail(context, "'values' must be an array");
    std::vector<double> out;
    for (const auto& v : values) out.push_back(number_at(v, context));
    return ValueDomain::finite(std::move(out));
  }
  if (doc.contains("interval")) {
    const auto& iv = doc["interval"];
    if (!iv.is_array() || iv.size() != 2)
      fail(context, "'interval' must be [lo, hi] (null = unbounded)");
    const double lo = iv[0].is_null()
                          ? -std::numeric_limits<double>::infinity()
                          : number_at(iv[0], context);
    const double hi = iv[1].is_null()
                          ? std::numeric_limits<double>::infinity()
                          : number_at(iv[1], context);
    return ValueDomain::interval(lo, hi);
  }
  fail(context, "domain needs 'values' or 'interval'");
}

Json domain_to_json(const ValueDomain& d) {
  if (d.is_finite()) return {{"values", *d.finite_values}};
  Json iv = Json::array();
  iv.push_back(std::isfinite(d.lo) ? Json(d.lo) : Json(nullptr));
  iv.push_back(std::isfinite(d.hi) ? Json(d.hi) : Json(nullptr));
  return {{"interval", iv}};
}

std::vector<InterventionFamily> families_from_json(
    const Json& doc, const std::string& context) {
  if (!doc.is_array()) fail(context, "expected an array of families");
  std::vector<InterventionFamily> out;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const std::string fctx = context + "[" + std::to_string(k) + "]";
    const auto& fdoc = doc[k];
    InterventionFamily f;
    f.label = string_at(field(fdoc, "label", fctx), fctx + ".label");
    f.targets =
        string_list(field(fdoc, "targets", fctx), fctx + ".targets");
    if (fdoc.contains("domains")) {
      const auto& domains = fdoc["domains"];
      if (!domains.is_array()) fail(fctx, "'domains' must be an array");
      for (std::size_t d = 0; d < domains.size(); ++d)
        f.domains.push_back(domain_from_json(
            domains[d], fctx + ".domains[" + std::to_string(d) + "]"));
    }
    if (f.domains.empty() && !f.targets.empty()) {
      f.domains.assign(f.targets.size(), ValueDomain::all_reals());
    }
    out.push_back(std::move(f));
  }
  return out;
}

Json families_to_json(const std::vector<InterventionFamily>& families) {
  Json out = Json::array();
  for (const auto& f : families) {
    Json fdoc;
    fdoc["label"] = f.label;
    fdoc["targets"] = f.targets;
    Json domains = Json::array();
    for (const auto& d : f.domains) domains.push_back(domain_to_json(d));
    fdoc["domains"] = std::move(domains);
    out.push_back(std::move(fdoc));
  }
  return out;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& doc, const std::string& context) {
  if (!doc.is_array() || doc.empty())
    fail(context, "expected a nonempty array of rows");
  const std::size_t cols = doc[0].is_array() ? doc[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(doc.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < doc.size(); ++r) {
    if (!doc[r].is_array() || doc[r].size() != cols)
      fail(context, "rows must be arrays of equal length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number_at(doc[r][c], context);
  }
  return m;
}

Eigen::VectorXd vector_from_json(const Json& doc, const std::string& context) {
  if (!doc.is_array()) fail(context, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t k = 0; k < doc.size(); ++k)
    v(static_cast<Eigen::Index>(k)) = number_at(doc[k], context);
  return v;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

NoiseModel noise_from_json(const Json& doc, const std::string& context) {
  NoiseModel noise;
  const auto& base = field(doc, "base", context);
  if (!base.is_array())
    fail(context + ".base", "expected an array (order matters for seeding)");
  for (std::size_t k = 0; k < base.size(); ++k) {
    const std::string bctx = context + ".base[" + std::to_string(k) + "]";
    const std::string name =
        string_at(field(base[k], "name", bctx), bctx + ".name");
    noise.base.emplace_back(name, base_noise_from_json(base[k], bctx));
  }
  const auto& exo = field(doc, "exogenous", context);
  if (!exo.is_array()) fail(context + ".exogenous", "expected an array");
  const IdentResolver resolve_base = [&](const std::string& ident,
                                         std::size_t) {
    for (const auto& [n, s] : noise.base) {
      if (n == ident) return IdentClass::kExo;
    }
    throw ValidationError(context + ": exogenous map references undeclared "
                          "base noise '" + ident + "'");
  };
  for (std::size_t k = 0; k < exo.size(); ++k) {
    const std::string ectx = context + ".exogenous[" + std::to_string(k) + "]";
    const std::string name =
        string_at(field(exo[k], "name", ectx), ectx + ".name");
    const std::string text =
        string_at(field(exo[k], "expr", ectx), ectx + ".expr");
    try {
      noise.exogenous.emplace_back(name,
                                   parse_expression(text, resolve_base));
    } catch (const ValidationError& e) {
      fail(ectx, e.what());
    }
  }
  return noise;
}

Json noise_to_json(const NoiseModel& noise) {
  Json base = Json::array();
  for (const auto& [name, spec] : noise.base) {
    Json b = base_noise_to_json(spec);
    b["name"] = name;
    base.push_back(std::move(b));
  }
  Json exo = Json::array();
  for (const auto& [name, expr] : noise.exogenous)
    exo.push_back({{"name", name}, {"expr", expr.to_string()}});
  return {{"base", std::move(base)}, {"exogenous", std::move(exo)}};
}

}  // namespace

Sem model_from_json(const Json& doc, const std::string& context) {
  if (!doc.is_object()) fail(context, "expected an object");
  if (doc.contains("format_version") &&
      doc["format_version"].get<int>() != kDocumentFormatVersion)
    fail(context, "unsupported format_version");

  Sem sem;
  sem.variables =
      string_list(field(doc, "variables", context), context + ".variables");
  sem.noise = noise_from_json(field(doc, "noise", context), context + ".noise");

  if (doc.contains("boolean_variables")) {
    for (const auto& b : string_list(doc["boolean_variables"],
                                     context + ".boolean_variables"))
      sem.boolean_variables.insert(b);
  }

  // Identifier resolution inside equations: variables, then exogenous ids.
  // Global name disjointness is enforced by Sem::validate afterwards.
  const IdentResolver resolve = [&](const std::string& ident, std::size_t) {
    if (std::find(sem.variables.begin(), sem.variables.end(), ident) !=
        sem.variables.end())
      return IdentClass::kVar;
    if (sem.noise.has_exo(ident)) return IdentClass::kExo;
    throw ValidationError("undeclared identifier '" + ident + "'");
  };
  const auto& equations = field(doc, "equations", context);
  if (!equations.is_object())
    fail(context + ".equations", "expected an object keyed by variable");
  for (const auto& v : sem.variables) {
    auto it = equations.find(v);
    if (it == equations.end())
      fail(context + ".equations", "missing equation for '" + v + "'");
    const std::string ectx = context + ".equations." + v;
    try {
      sem.equations.push_back(
          parse_expression(string_at(*it, ectx), resolve));
    } catch (const ValidationError& e) {
      fail(ectx, e.what());
    }
  }
  for (const auto& [key, value] : equations.items()) {
    if (!sem.has_variable(key))
      fail(context + ".equations",
           "equation for undeclared variable '" + key + "'");
  }

  sem.catalog.families = families_from_json(
      field(doc, "interventions", context), context + ".interventions");

  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    if (s.contains("tolerance"))
      sem.solver.tolerance = number_at(s["tolerance"], context + ".solver");
    if (s.contains("max_iterations"))
      sem.solver.max_iterations = s["max_iterations"].get<int>();
    if (s.contains("damping"))
      sem.solver.damping = number_at(s["damping"], context + ".solver");
  }

  try {
    sem.validate();
  } catch (const ValidationError& e) {
    fail(context, e.what());
  }
  return sem;
}

Json model_to_json(const Sem& sem) {
  Json doc;
  doc["format_version"] = kDocumentFormatVersion;
  doc["variables"] = sem.variables;
  if (!sem.boolean_variables.empty())
    doc["boolean_variables"] = sem.boolean_variables;
  Json equations;
  for (std::size_t k = 0; k < sem.variables.size(); ++k)
    equations[sem.variables[k]] = sem.equations[k].to_string();
  doc["equations"] = std::move(equations);
  doc["noise"] = noise_to_json(sem.noise);
  doc["interventions"] = families_to_json(sem.catalog.families);
  doc["solver"] = {{"tolerance", sem.solver.tolerance},
                   {"max_iterations", sem.solver.max_iterations},
                   {"damping", sem.solver.damping}};
  return doc;
}

Transformation tau_from_json(const Json& doc, const std::string& context) {
  const std::string kind =
      string_at(field(doc, "kind", context), context + ".kind");
  auto source =
      string_list(field(doc, "source", context), context + ".source");
  auto target =
      string_list(field(doc, "target", context), context + ".target");
  try {
    if (kind == "projection") {
      auto coordinates = string_list(field(doc, "coordinates", context),
                                     context + ".coordinates");
      return Transformation::projection(std::move(source),
                                        std::move(coordinates),
                                        std::move(target));
    }
    if (kind == "affine") {
      return Transformation::affine(
          std::move(source), std::move(target),
          matrix_from_json(field(doc, "matrix", context),
                           context + ".matrix"),
          vector_from_json(field(doc, "offset", context),
                           context + ".offset"));
    }
    if (kind == "expressions") {
      const auto& outputs = field(doc, "outputs", context);
      if (!outputs.is_object())
        fail(context + ".outputs", "expected an object keyed by target");
      const IdentResolver resolve = [&](const std::string& ident,
                                        std::size_t) {
        if (std::find(source.begin(), source.end(), ident) != source.end())
          return IdentClass::kVar;
        throw ValidationError("unknown coordinate '" + ident + "'");
      };
      std::vector<Expr> exprs;
      for (const auto& t : target) {
        auto it = outputs.find(t);
        if (it == outputs.end())
          fail(context + ".outputs", "missing output for '" + t + "'");
        exprs.push_back(parse_expression(
            string_at(*it, context + ".outputs." + t), resolve));
      }
      return Transformation::expressions(std::move(source), std::move(target),
                                         std::move(exprs));
    }
  } catch (const ValidationError& e) {
    fail(context, e.what());
  }
  fail(context, "unknown transformation kind '" + kind + "'");
}

Json tau_to_json(const Transformation& tau) {
  Json doc;
  doc["source"] = tau.source_labels();
  doc["target"] = tau.target_labels();
  switch (tau.kind()) {
    case Transformation::Kind::kProjection:
      doc["kind"] = "projection";
      doc["coordinates"] = tau.projected_coordinates();
      break;
    case Transformation::Kind::kAffine: {
      doc["kind"] = "affine";
      const auto view = *tau.affine_view();
      doc["matrix"] = matrix_to_json(view.first);
      doc["offset"] = vector_to_json(view.second);
      break;
    }
    case Transformation::Kind::kExpressions: {
      doc["kind"] = "expressions";
      Json outputs;
      for (std::size_t k = 0; k < tau.target_labels().size(); ++k)
        outputs[tau.target_labels()[k]] =
            tau.output_expressions()[k].to_string();
      doc["outputs"] = std::move(outputs);
      break;
    }
  }
  return doc;
}

Intervention intervention_from_json(const Json& doc,
                                    const std::string& context) {
  const Json* targets = &doc;
  if (doc.is_object() && doc.contains("targets")) targets = &doc["targets"];
  if (!targets->is_object())
    fail(context, "expected an object of variable -> value");
  Intervention i;
  for (const auto& [key, value] : targets->items())
    i.targets[key] = number_at(value, context + "." + key);
  return i;
}

Json intervention_to_json(const Intervention& i) {
  Json targets = Json::object();
  for (const auto& [name, value] : i.targets) targets[name] = value;
  return {{"targets", std::move(targets)}};
}

InterventionMap omega_from_json(const Json& doc, const std::string& context) {
  InterventionMap omega;
  const auto& rules = field(doc, "rules", context);
  if (!rules.is_array()) fail(context + ".rules", "expected an array");
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const std::string rctx = context + ".rules[" + std::to_string(k) + "]";
    OmegaRule rule;
    rule.from_family = string_at(field(rules[k], "from", rctx), rctx);
    rule.to_family = string_at(field(rules[k], "to", rctx), rctx);
    // Value-transform shapes are explicit: rules to or from the null
    // family have zero rows or columns, which bare nested arrays cannot
    // express.
    const int rows = field(rules[k], "rows", rctx).get<int>();
    const int cols = field(rules[k], "cols", rctx).get<int>();
    if (rows < 0 || cols < 0) fail(rctx, "negative shape");
    rule.matrix = Eigen::MatrixXd::Zero(rows, cols);
    if (rows > 0 && cols > 0)
      rule.matrix = matrix_from_json(field(rules[k], "matrix", rctx),
                                     rctx + ".matrix");
    if (rule.matrix.rows() != rows || rule.matrix.cols() != cols)
      fail(rctx, "matrix does not match the declared shape");
    rule.offset = Eigen::VectorXd::Zero(rows);
    if (rows > 0)
      rule.offset = vector_from_json(field(rules[k], "offset", rctx),
                                     rctx + ".offset");
    if (rule.offset.size() != rows)
      fail(rctx, "offset does not match the declared shape");
    omega.rules.push_back(std::move(rule));
  }
  if (doc.contains("pairs")) {
    const auto& pairs = doc["pairs"];
    if (!pairs.is_array()) fail(context + ".pairs", "expected an array");
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const std::string pctx = context + ".pairs[" + std::to_string(k) + "]";
      omega.explicit_pairs.emplace_back(
          intervention_from_json(field(pairs[k], "from", pctx),
                                 pctx + ".from"),
          intervention_from_json(field(pairs[k], "to", pctx), pctx + ".to"));
    }
  }
  return omega;
}

Json omega_to_json(const InterventionMap& omega) {
  Json rules = Json::array();
  for (const auto& r : omega.rules) {
    Json rule = {{"from", r.from_family},
                 {"to", r.to_family},
                 {"rows", static_cast<int>(r.matrix.rows())},
                 {"cols", static_cast<int>(r.matrix.cols())}};
    if (r.matrix.rows() > 0 && r.matrix.cols() > 0)
      rule["matrix"] = matrix_to_json(r.matrix);
    if (r.matrix.rows() > 0) rule["offset"] = vector_to_json(r.offset);
    rules.push_back(std::move(rule));
  }
  Json doc;
  doc["rules"] = std::move(rules);
  if (!omega.explicit_pairs.empty()) {
    Json pairs = Json::array();
    for (const auto& [from, to] : omega.explicit_pairs)
      pairs.push_back({{"from", intervention_to_json(from)},
                       {"to", intervention_to_json(to)}});
    doc["pairs"] = std::move(pairs);
  }
  return doc;
}

DynamicalSpec dynamics_from_json(const Json& doc, const std::string& context) {
  DynamicalSpec spec;
  spec.transition = matrix_from_json(field(doc, "transition", context),
                                     context + ".transition");
  spec.noise =
      noise_from_json(field(doc, "noise", context), context + ".noise");
  if (doc.contains("clamps"))
    spec.clamp_families =
        families_from_json(doc["clamps"], context + ".clamps");
  if (doc.contains("horizon")) spec.horizon = doc["horizon"].get<int>();
  if (doc.contains("tolerance"))
    spec.tolerance = number_at(doc["tolerance"], context + ".tolerance");
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    fail(context, e.what());
  }
  return spec;
}

Json dynamics_to_json(const DynamicalSpec& spec) {
  Json doc;
  doc["transition"] = matrix_to_json(spec.transition);
  doc["noise"] = noise_to_json(spec.noise);
  doc["clamps"] = families_to_json(spec.clamp_families);
  doc["horizon"] = spec.horizon;
  doc["tolerance"] = spec.tolerance;
  return doc;
}

namespace {

Json verdict_to_json(const EqualityVerdict& v) {
  return {{"method", v.method == EqualityVerdict::Method::kClosedForm
                         ? "closed-form"
                         : "energy-test"},
          {"equal", v.equal},
          {"statistic", v.statistic},
          {"threshold", v.threshold},
          {"detail", v.detail}};
}

}  // namespace

Json report_to_json(const ExactnessReport& report,
                    const std::string& provenance,
                    const std::vector<std::string>& collapsed) {
  Json doc;
  doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  doc["exact"] = report.exact;
  doc["comparison"] = report.comparison;
  doc["probe_certified_only"] = report.probe_certified_only;
  doc["config"] = {{"grid", report.config.probes.grid_points},
                   {"random", report.config.probes.random_points},
                   {"samples", report.config.samples},
                   {"tol", report.config.compare.tol},
                   {"alpha", report.config.compare.alpha},
                   {"permutations", report.config.compare.permutations},
                   {"max_points_per_side",
                    report.config.compare.max_points_per_side},
                   {"seed", report.config.seed}};

  Json omega;
  omega["surjective"] = report.omega.surjective;
  omega["surjectivity_mode"] = report.omega.surjectivity_mode;
  if (!report.omega.surjective)
    omega["uncovered_family"] = report.omega.uncovered_family;
  omega["order_preserving"] = report.omega.order_preserving;
  if (report.omega.counterexample) {
    const auto& ce = *report.omega.counterexample;
    omega["counterexample"] = {{"i", intervention_to_json(ce[0])},
                               {"j", intervention_to_json(ce[1])},
                               {"omega_i", intervention_to_json(ce[2])},
                               {"omega_j", intervention_to_json(ce[3])}};
  }
  omega["omega_of_null"] = intervention_to_json(report.omega.omega_of_null);
  doc["omega"] = std::move(omega);

  Json probes = Json::array();
  for (const auto& p : report.probe_verdicts) {
    Json entry;
    entry["intervention"] = intervention_to_json(p.intervention);
    entry["family"] = p.family_label;
    entry["image"] = intervention_to_json(p.image);
    entry["verdict"] = verdict_to_json(p.verdict);
    probes.push_back(std::move(entry));
  }
  doc["probes"] = std::move(probes);

  if (!provenance.empty()) doc["provenance"] = provenance;
  if (!collapsed.empty()) doc["collapsed_families"] = collapsed;
  return doc;
}

std::map<std::string, double> exo_values_from_json(
    const Json& doc, const std::string& context) {
  if (!doc.is_object())
    fail(context, "expected an object of exogenous id -> value");
  std::map<std::string, double> out;
  for (const auto& [key, value] : doc.items())
    out[key] = number_at(value, context + "." + key);
  return out;
}

void write_csv(std::ostream& out, const std::vector<std::string>& labels,
               const Eigen::MatrixXd& rows) {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k) out << ",";
    out << labels[k];
  }
  out << "\n";
  char buf[32];
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (c) out << ",";
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), rows(r, c));
      out.write(buf, end - buf);
    }
    out << "\n";
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

void write_triple_directory(const std::string& dir,
                            const CertifiedTriple& triple) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_json_file((base / "model.json").string(),
                  model_to_json(triple.model));
  write_json_file((base / "tau.json").string(), tau_to_json(triple.tau));
  write_json_file((base / "omega.json").string(),
                  omega_to_json(triple.omega));
  write_json_file(
      (base / "report.json").string(),
      report_to_json(triple.certification, triple.provenance,
                     triple.collapsed_families));
}

}  // namespace semtrans
