#include "semtrans/demos.hpp"

#include <filesystem>
#include <ostream>

#include "semtrans/errors.hpp"
#include "semtrans/io.hpp"

namespace semtrans::demos {

namespace {

constexpr std::uint64_t kDemoSeed = 7;

CheckConfig demo_config() {
  CheckConfig config;
  config.with_seed(kDemoSeed);
  return config;
}

InterventionFamily family(std::string label, std::vector<std::string> targets,
                          std::vector<ValueDomain> domains) {
  InterventionFamily f;
  f.label = std::move(label);
  f.targets = std::move(targets);
  f.domains = std::move(domains);
  return f;
}

void print_verdict(std::ostream& out, const ExactnessReport& report) {
  out << (report.exact ? "exact" : "NOT exact") << " ("
      << report.comparison << " comparison";
  if (report.probe_certified_only) out << ", probe-certified";
  out << ")\n";
  out << "  probe equalities: "
      << (report.all_probe_equalities_hold() ? "all hold" : "some fail")
      << " over " << report.probe_verdicts.size() << " probes\n";
  out << "  omega surjective: " << (report.omega.surjective ? "yes" : "no")
      << ", order-preserving: "
      << (report.omega.order_preserving ? "yes" : "no") << "\n";
  if (report.omega.counterexample) {
    const auto& ce = *report.omega.counterexample;
    out << "  order counterexample: " << ce[0].to_string() << " <= "
        << ce[1].to_string() << " but " << ce[2].to_string() << " !<= "
        << ce[3].to_string() << "\n";
  }
}

int finish(const std::string& out_dir, std::ostream& out,
           const CheckScenario& scenario, const ExactnessReport& report,
           const std::string& provenance = std::string(),
           const std::vector<std::string>& collapsed = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  write_json_file((base / "source.json").string(),
                  model_to_json(scenario.source));
  write_json_file((base / "target.json").string(),
                  model_to_json(scenario.target));
  write_json_file((base / "tau.json").string(), tau_to_json(scenario.tau));
  write_json_file((base / "omega.json").string(),
                  omega_to_json(scenario.omega));
  write_json_file((base / "report.json").string(),
                  report_to_json(report, provenance, collapsed));
  print_verdict(out, report);
  out << "  files in " << base.string() << "\n";
  return report.exact ? 0 : 1;
}

}  // namespace

Sem lightbulbs() {
  Sem sem;
  sem.variables = {"B1", "B2", "L"};
  sem.boolean_variables = {"B1", "B2", "L"};
  for (const auto* base : {"U1", "U2", "U3"})
    sem.noise.base.emplace_back(base, BaseNoise::bernoulli(0.5));
  sem.noise.exogenous.emplace_back("E1", Expr::exo("U1"));
  sem.noise.exogenous.emplace_back("E2", Expr::exo("U2"));
  sem.noise.exogenous.emplace_back("E3", Expr::exo("U3"));
  sem.equations = {
      Expr::exo("E1"), Expr::exo("E2"),
      Expr::logical_or({Expr::var("B1"), Expr::var("B2"), Expr::exo("E3")})};
  sem.catalog.families = {
      InterventionFamily::null_family(),
      family("b1-off", {"B1"}, {ValueDomain::single(0.0)}),
      family("b2-off", {"B2"}, {ValueDomain::single(0.0)}),
      family("both-off", {"B1", "B2"},
             {ValueDomain::single(0.0), ValueDomain::single(0.0)})};
  sem.validate();
  return sem;
}

CheckScenario wrong1() {
  CheckScenario s;
  Sem& x = s.source;
  x.variables = {"X1", "X2", "X3"};
  x.noise.base.emplace_back("U1", BaseNoise::normal(0.0, 1.0));
  x.noise.base.emplace_back("U3", BaseNoise::normal(0.0, 1.0));
  x.noise.exogenous.emplace_back("E1", Expr::exo("U1"));
  x.noise.exogenous.emplace_back("E2", Expr::neg(Expr::exo("U1")));
  x.noise.exogenous.emplace_back("E3", Expr::exo("U3"));
  x.equations = {Expr::exo("E1"), Expr::exo("E2"),
                 Expr::sum({Expr::var("X1"), Expr::var("X2"),
                            Expr::exo("E3")})};
  x.catalog.families = {
      InterventionFamily::null_family(),
      family("x2-0", {"X2"}, {ValueDomain::single(0.0)}),
      family("x1x2-0", {"X1", "X2"},
             {ValueDomain::single(0.0), ValueDomain::single(0.0)})};
  x.validate();

  Sem& y = s.target;
  y.variables = {"Y1", "Y2"};
  y.noise.base.emplace_back("V1", BaseNoise::normal(0.0, 1.0));
  y.noise.base.emplace_back("V2", BaseNoise::normal(0.0, 1.0));
  y.noise.exogenous.emplace_back("F1", Expr::exo("V1"));
  y.noise.exogenous.emplace_back("F2", Expr::exo("V2"));
  y.equations = {Expr::exo("F1"),
                 Expr::sum({Expr::var("Y1"), Expr::exo("F2")})};
  y.catalog.families = {InterventionFamily::null_family(),
                        family("y1-0", {"Y1"}, {ValueDomain::single(0.0)})};
  y.validate();

  s.tau = Transformation::expressions(
      x.variables, y.variables,
      {Expr::sum({Expr::var("X1"), Expr::var("X2")}), Expr::var("X3")});

  // The defective map: the null intervention lands on do(Y1=0).
  s.omega.rules.push_back({"null", "y1-0", Eigen::MatrixXd::Zero(1, 0),
                           Eigen::VectorXd::Zero(1)});
  s.omega.rules.push_back({"x2-0", "null", Eigen::MatrixXd::Zero(0, 1),
                           Eigen::VectorXd::Zero(0)});
  s.omega.rules.push_back({"x1x2-0", "y1-0", Eigen::MatrixXd::Zero(1, 2),
                           Eigen::VectorXd::Zero(1)});
  return s;
}

CheckScenario wrong2() {
  CheckScenario s;
  Sem& x = s.source;
  x.variables = {"X1", "X2", "X3"};
  x.noise.base.emplace_back("U1", BaseNoise::point_mass(1.0));
  x.noise.base.emplace_back("U2", BaseNoise::normal(0.0, 1.0));
  x.noise.base.emplace_back("U3", BaseNoise::normal(0.0, 1.0));
  x.noise.exogenous.emplace_back("E1", Expr::exo("U1"));
  x.noise.exogenous.emplace_back("E2", Expr::exo("U2"));
  x.noise.exogenous.emplace_back("E3", Expr::exo("U3"));
  x.equations = {Expr::exo("E1"), Expr::exo("E2"),
                 Expr::sum({Expr::var("X1"), Expr::var("X2"),
                            Expr::exo("E3")})};
  x.catalog.families = {
      InterventionFamily::null_family(),
      family("x2-0", {"X2"}, {ValueDomain::single(0.0)}),
      family("x1x2-0", {"X1", "X2"},
             {ValueDomain::single(0.0), ValueDomain::single(0.0)})};
  x.validate();

  Sem& y = s.target;
  y.variables = {"Y1", "Y2"};
  y.noise.base.emplace_back("V1", BaseNoise::normal(0.0, 1.0));
  y.noise.base.emplace_back("V2", BaseNoise::normal(0.0, 1.0));
  y.noise.exogenous.emplace_back("F1", Expr::exo("V1"));
  y.noise.exogenous.emplace_back("F2", Expr::exo("V2"));
  y.equations = {Expr::sum({Expr::constant(1.0), Expr::exo("F1")}),
                 Expr::sum({Expr::var("Y1"), Expr::exo("F2")})};
  y.catalog.families = {InterventionFamily::null_family(),
                        family("y1-0", {"Y1"}, {ValueDomain::single(0.0)}),
                        family("y1-1", {"Y1"}, {ValueDomain::single(1.0)})};
  y.validate();

  s.tau = Transformation::expressions(
      x.variables, y.variables,
      {Expr::sum({Expr::var("X1"), Expr::var("X2")}), Expr::var("X3")});

  // omega(null) = null, yet do(X2=0) <= do(X1=0,X2=0) maps to the
  // incomparable pair do(Y1=1), do(Y1=0).
  s.omega.rules.push_back({"null", "null", Eigen::MatrixXd::Zero(0, 0),
                           Eigen::VectorXd::Zero(0)});
  s.omega.rules.push_back({"x2-0", "y1-1", Eigen::MatrixXd::Zero(1, 1),
                           Eigen::VectorXd::Ones(1)});
  s.omega.rules.push_back({"x1x2-0", "y1-0", Eigen::MatrixXd::Zero(1, 2),
                           Eigen::VectorXd::Zero(1)});
  return s;
}

Sem micro_macro() {
  Sem sem;
  sem.variables = {"W1", "W2", "Z1", "Z2"};
  for (const auto* base : {"UE1", "UE2", "UF1", "UF2"})
    sem.noise.base.emplace_back(base, BaseNoise::normal(0.0, 1.0));
  sem.noise.exogenous.emplace_back("E1", Expr::exo("UE1"));
  sem.noise.exogenous.emplace_back("E2", Expr::exo("UE2"));
  sem.noise.exogenous.emplace_back("F1", Expr::exo("UF1"));
  sem.noise.exogenous.emplace_back("F2", Expr::exo("UF2"));
  sem.equations = {
      Expr::exo("E1"), Expr::exo("E2"),
      Expr::sum({Expr::var("W1"), Expr::scaled(3.0, Expr::var("W2")),
                 Expr::exo("F1")}),
      Expr::sum({Expr::scaled(3.0, Expr::var("W1")), Expr::var("W2"),
                 Expr::exo("F2")})};
  sem.catalog.families = {
      InterventionFamily::null_family(),
      family("do-w", {"W1", "W2"},
             {ValueDomain::all_reals(), ValueDomain::all_reals()}),
      family("do-z", {"Z1", "Z2"},
             {ValueDomain::all_reals(), ValueDomain::all_reals()}),
      family("do-wz", {"W1", "W2", "Z1", "Z2"},
             {ValueDomain::all_reals(), ValueDomain::all_reals(),
              ValueDomain::all_reals(), ValueDomain::all_reals()})};
  sem.validate();
  return sem;
}

DynamicalSpec dynamics() {
  DynamicalSpec spec;
  spec.transition.resize(2, 2);
  spec.transition << 0.5, 0.2, 0.1, 0.3;
  spec.noise.base.emplace_back("N1", BaseNoise::normal(0.0, 1.0));
  spec.noise.base.emplace_back("N2", BaseNoise::normal(0.0, 1.0));
  spec.noise.exogenous.emplace_back("E1", Expr::exo("N1"));
  spec.noise.exogenous.emplace_back("E2", Expr::exo("N2"));
  spec.clamp_families = {
      family("clamp-1", {"Y1"}, {ValueDomain::all_reals()}),
      family("clamp-12", {"Y1", "Y2"},
             {ValueDomain::all_reals(), ValueDomain::all_reals()})};
  spec.validate();
  return spec;
}

Sem fig3() {
  Sem sem;
  sem.variables = {"X1", "X2", "X3", "D1", "D2", "D3"};
  for (int k = 1; k <= 6; ++k)
    sem.noise.base.emplace_back("U" + std::to_string(k),
                                BaseNoise::normal(0.0, 1.0));
  for (int k = 1; k <= 6; ++k)
    sem.noise.exogenous.emplace_back("E" + std::to_string(k),
                                     Expr::exo("U" + std::to_string(k)));
  sem.equations = {
      Expr::exo("E1"),
      Expr::sum({Expr::scaled(0.8, Expr::var("X1")), Expr::exo("E2")}),
      Expr::sum({Expr::scaled(0.5, Expr::var("X1")),
                 Expr::scaled(0.6, Expr::var("X2")), Expr::exo("E3")}),
      Expr::sum({Expr::scaled(0.7, Expr::var("X3")),
                 Expr::scaled(0.2, Expr::var("D2")), Expr::exo("E4")}),
      Expr::sum({Expr::scaled(0.9, Expr::var("X2")), Expr::exo("E5")}),
      Expr::sum({Expr::scaled(0.4, Expr::var("D1")),
                 Expr::scaled(0.3, Expr::var("D2")), Expr::exo("E6")})};
  sem.catalog.families = {
      InterventionFamily::null_family(),
      family("x1", {"X1"}, {ValueDomain::finite({0.0, 1.0})}),
      family("x2x3", {"X2", "X3"},
             {ValueDomain::finite({0.0, 1.0}),
              ValueDomain::finite({0.0, 1.0})})};
  sem.validate();
  return sem;
}

std::vector<std::string> names() {
  return {"lightbulbs", "wrong1",   "wrong2",
          "micro-macro", "dynamics", "fig3-marginalize"};
}

int run(const std::string& name, const std::string& out_dir,
        std::ostream& out) {
  const CheckConfig config = demo_config();
  out << "demo " << name << " (seed " << kDemoSeed << "): ";

  if (name == "lightbulbs") {
    const Sem sem = lightbulbs();
    out << "marginalizing the childless light variable L\n";
    const auto triple = marginalize_childless(sem, {"L"}, config);
    CheckScenario scenario{sem, triple.model, triple.tau, triple.omega};
    return finish(out_dir, out, scenario, triple.certification,
                  triple.provenance, triple.collapsed_families);
  }
  if (name == "wrong1" || name == "wrong2") {
    auto scenario = name == "wrong1" ? wrong1() : wrong2();
    out << "checking a deliberately order-breaking intervention map\n";
    const auto report = check_exact(scenario.source, scenario.target,
                                    scenario.tau, scenario.omega, config);
    return finish(out_dir, out, scenario, report);
  }
  if (name == "micro-macro") {
    const Sem sem = micro_macro();
    out << "aggregating the two-layer micro model by averaging\n";
    const auto triple = aggregate_micro_macro(sem, config);
    CheckScenario scenario{sem, triple.model, triple.tau, triple.omega};
    return finish(out_dir, out, scenario, triple.certification,
                  triple.provenance);
  }
  if (name == "dynamics") {
    const DynamicalSpec spec = dynamics();
    out << "equilibrating the two-coordinate linear process\n";
    const auto triple = equilibrate(spec, config);
    // The check-exact source model is the coupled equilibrium system
    // x = A x + e over the same clamp catalog.
    Sem source = process_equilibrium_model(spec);
    source.catalog = triple.model.catalog;
    CheckScenario scenario{source, triple.model, triple.tau, triple.omega};
    const int code = finish(out_dir, out, scenario, triple.certification,
                            triple.provenance);
    write_json_file(
        (std::filesystem::path(out_dir) / "dynamics.json").string(),
        dynamics_to_json(spec));
    return code;
  }
  if (name == "fig3-marginalize") {
    const Sem sem = fig3();
    out << "dropping the downstream block D1,D2,D3\n";
    const auto triple = marginalize_childless(sem, {"D1", "D2", "D3"},
                                              config);
    CheckScenario scenario{sem, triple.model, triple.tau, triple.omega};
    return finish(out_dir, out, scenario, triple.certification,
                  triple.provenance, triple.collapsed_families);
  }
  throw ValidationError("unknown demo '" + name + "'; available: " +
                        [] {
                          std::string all;
                          for (const auto& n : names()) {
                            if (!all.empty()) all += ", ";
                            all += n;
                          }
                          return all;
                        }());
}

}  // namespace semtrans::demos
