#include "semtrans/io.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "semtrans/demos.hpp"
#include "semtrans/errors.hpp"

namespace semtrans {
namespace {

TEST(ModelDocument, SerializeParseIsLossless) {
  for (const Sem& sem :
       {demos::lightbulbs(), demos::wrong1().source, demos::wrong2().source,
        demos::micro_macro(), demos::fig3()}) {
    const Json once = model_to_json(sem);
    const Sem parsed = model_from_json(once);
    const Json twice = model_to_json(parsed);
    EXPECT_EQ(once.dump(2), twice.dump(2));
    EXPECT_EQ(parsed.variables, sem.variables);
    EXPECT_EQ(parsed.catalog, sem.catalog);
    EXPECT_EQ(parsed.noise.base, sem.noise.base);
  }
}

TEST(ModelDocument, PreservesNoiseOrder) {
  const Sem sem = demos::wrong1().source;  // E2 = -U1 shares a base noise
  const Sem parsed = model_from_json(model_to_json(sem));
  std::vector<std::string> names;
  for (const auto& [n, e] : parsed.noise.exogenous) names.push_back(n);
  EXPECT_EQ(names, (std::vector<std::string>{"E1", "E2", "E3"}));
  // Dependence survives the round trip.
  std::set<std::string> refs;
  parsed.noise.exogenous[1].second.collect_exos(refs);
  EXPECT_TRUE(refs.count("U1"));
}

TEST(ModelDocument, DiagnosticsCarryLocation) {
  Json doc = model_to_json(demos::lightbulbs());
  doc["equations"]["L"] = "or(B1, B9, E3)";
  try {
    model_from_json(doc, "bad.json");
    FAIL() << "expected validation error";
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("bad.json"), std::string::npos);
    EXPECT_NE(what.find("equations.L"), std::string::npos);
    EXPECT_NE(what.find("B9"), std::string::npos);
  }
}

TEST(ModelDocument, MissingEquationRejected) {
  Json doc = model_to_json(demos::lightbulbs());
  doc["equations"].erase("B2");
  EXPECT_THROW(model_from_json(doc), ValidationError);
}

TEST(TauDocument, RoundTripsAllKinds) {
  const auto scenario = demos::wrong1();
  for (const Transformation& tau :
       {scenario.tau,
        Transformation::projection({"A", "B", "C"}, {"C", "A"}),
        Transformation::affine({"A", "B"}, {"S"},
                               (Eigen::MatrixXd(1, 2) << 1, 1).finished(),
                               (Eigen::VectorXd(1) << -0.5).finished())}) {
    const Json once = tau_to_json(tau);
    const Transformation parsed = tau_from_json(once);
    EXPECT_EQ(once.dump(), tau_to_json(parsed).dump());
    Eigen::VectorXd x(tau.source_arity());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = 0.5 * (k + 1);
    EXPECT_EQ(tau.apply(x), parsed.apply(x));
  }
}

TEST(OmegaDocument, RoundTrips) {
  const auto scenario = demos::wrong2();
  const Json once = omega_to_json(scenario.omega);
  const InterventionMap parsed = omega_from_json(once);
  EXPECT_EQ(once.dump(), omega_to_json(parsed).dump());
  Intervention i;
  i.targets["X2"] = 0.0;
  EXPECT_EQ(parsed.apply(i, scenario.source.catalog, scenario.target.catalog),
            scenario.omega.apply(i, scenario.source.catalog,
                                 scenario.target.catalog));
}

TEST(DynamicsDocument, RoundTrips) {
  const DynamicalSpec spec = demos::dynamics();
  const Json once = dynamics_to_json(spec);
  const DynamicalSpec parsed = dynamics_from_json(once);
  EXPECT_EQ(once.dump(2), dynamics_to_json(parsed).dump(2));
  EXPECT_EQ(parsed.transition, spec.transition);
  EXPECT_EQ(parsed.clamp_families.size(), spec.clamp_families.size());
}

TEST(InterventionDocument, AcceptsBareAndWrappedForms) {
  const Json wrapped = {{"targets", {{"X1", 0.5}}}};
  const Json bare = {{"X1", 0.5}};
  EXPECT_EQ(intervention_from_json(wrapped),
            intervention_from_json(bare));
}

TEST(Csv, HeaderAndFullPrecisionRows) {
  Eigen::MatrixXd rows(2, 2);
  rows << 0.1, 1.0, -2.5, 1.0 / 3.0;
  std::ostringstream out;
  write_csv(out, {"a", "b"}, rows);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, 4), "a,b\n");
  EXPECT_NE(text.find("0.3333333333333333"), std::string::npos);
}

TEST(ReportDocument, DeterministicBytes) {
  const auto scenario = demos::wrong1();
  CheckConfig config;
  config.with_seed(77);
  const auto report1 = check_exact(scenario.source, scenario.target,
                                   scenario.tau, scenario.omega, config);
  const auto report2 = check_exact(scenario.source, scenario.target,
                                   scenario.tau, scenario.omega, config);
  EXPECT_EQ(report_to_json(report1).dump(2), report_to_json(report2).dump(2));
}

}  // namespace
}  // namespace semtrans
