#include "semtrans/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "semtrans/demos.hpp"
#include "semtrans/errors.hpp"
#include "semtrans/io.hpp"
#include "semtrans/version.hpp"

namespace semtrans {

namespace {

Json load_document(const std::string& path_or_inline) {
  if (!path_or_inline.empty() && path_or_inline.front() == '{') {
    try {
      return Json::parse(path_or_inline);
    } catch (const Json::parse_error& e) {
      throw ValidationError(std::string("inline JSON: ") + e.what());
    }
  }
  return load_json_file(path_or_inline);
}

Intervention load_intervention(const std::string& spec) {
  if (spec.empty()) return Intervention::null();
  return intervention_from_json(load_document(spec));
}

std::set<std::string> split_names(const std::string& csv) {
  std::set<std::string> out;
  std::stringstream stream(csv);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

void print_report_summary(std::ostream& out, const ExactnessReport& report) {
  out << (report.exact ? "exact" : "NOT exact") << " ("
      << report.comparison;
  if (report.probe_certified_only) out << ", probe-certified";
  out << ")\n";
  for (const auto& p : report.probe_verdicts) {
    out << "  " << p.intervention.to_string() << " -> "
        << p.image.to_string() << ": "
        << (p.verdict.equal ? "equal" : "DIFFER") << " (" << p.verdict.detail
        << ")\n";
  }
  out << "  omega: surjective=" << (report.omega.surjective ? "yes" : "no")
      << " (" << report.omega.surjectivity_mode << "), order-preserving="
      << (report.omega.order_preserving ? "yes" : "no") << ", omega(null)="
      << report.omega.omega_of_null.to_string() << "\n";
  if (report.omega.counterexample) {
    const auto& ce = *report.omega.counterexample;
    out << "  counterexample: " << ce[0].to_string() << " <= "
        << ce[1].to_string() << " but " << ce[2].to_string() << " !<= "
        << ce[3].to_string() << "\n";
  }
}

struct CheckExactArgs {
  std::string source, target, tau, omega, out_path;
  CheckConfig config;
  std::uint64_t seed = 0;
};

int run_check_exact(const CheckExactArgs& args, std::ostream& out) {
  const Sem m_x = model_from_json(load_json_file(args.source), args.source);
  const Sem m_y = model_from_json(load_json_file(args.target), args.target);
  const Transformation tau =
      tau_from_json(load_json_file(args.tau), args.tau);
  const InterventionMap omega =
      omega_from_json(load_json_file(args.omega), args.omega);
  CheckConfig config = args.config;
  config.with_seed(args.seed);
  const ExactnessReport report = check_exact(m_x, m_y, tau, omega, config);
  if (!args.out_path.empty())
    write_json_file(args.out_path, report_to_json(report));
  print_report_summary(out, report);
  return report.exact ? 0 : 1;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{std::string(kToolName) +
               " - structural equation models, interventions, and exact "
               "transformations"};
  app.set_version_flag("--version",
                       std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  // validate
  std::string validate_path;
  auto* validate_cmd =
      app.add_subcommand("validate", "check a model document");
  validate_cmd->add_option("model", validate_path, "model.json")->required();

  // solve
  std::string solve_model, solve_intervention, solve_noise;
  auto* solve_cmd = app.add_subcommand(
      "solve", "solve the intervened equations for one exogenous draw");
  solve_cmd->add_option("--model", solve_model, "model.json")->required();
  solve_cmd->add_option("--intervention", solve_intervention,
                        "intervention.json or inline JSON (default: null)");
  solve_cmd->add_option("--noise", solve_noise,
                        "exogenous values, JSON object")->required();

  // sample
  std::string sample_model, sample_intervention, sample_out;
  int sample_n = 0;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd =
      app.add_subcommand("sample", "draw i.i.d. rows under an intervention");
  sample_cmd->add_option("--model", sample_model, "model.json")->required();
  sample_cmd->add_option("--intervention", sample_intervention,
                         "intervention.json or inline JSON (default: null)");
  sample_cmd->add_option("--n", sample_n, "number of rows")->required();
  sample_cmd->add_option("--seed", sample_seed, "sampling seed")->required();
  sample_cmd->add_option("--out", sample_out, "output CSV path")->required();

  // check-exact
  CheckExactArgs check_args;
  auto* check_cmd = app.add_subcommand(
      "check-exact",
      "decide whether the target model is an exact transformation of the "
      "source");
  check_cmd->add_option("--source", check_args.source, "source model")
      ->required();
  check_cmd->add_option("--target", check_args.target, "target model")
      ->required();
  check_cmd->add_option("--tau", check_args.tau, "tau.json")->required();
  check_cmd->add_option("--omega", check_args.omega, "omega.json")
      ->required();
  check_cmd->add_option("--grid", check_args.config.probes.grid_points,
                        "grid points per bounded axis");
  check_cmd->add_option("--random", check_args.config.probes.random_points,
                        "random probes per family");
  check_cmd->add_option("--samples", check_args.config.samples,
                        "Monte Carlo samples per side");
  check_cmd->add_option("--alpha", check_args.config.compare.alpha,
                        "energy test level");
  check_cmd->add_option("--tol", check_args.config.compare.tol,
                        "closed-form moment tolerance");
  check_cmd->add_option("--permutations",
                        check_args.config.compare.permutations,
                        "energy test permutations");
  check_cmd->add_option("--seed", check_args.seed, "master seed")->required();
  check_cmd->add_option("--out", check_args.out_path, "report.json path");

  // marginalize
  std::string marg_model, marg_drop, marg_mode = "childless", marg_out;
  std::uint64_t marg_seed = 11;
  auto* marg_cmd = app.add_subcommand(
      "marginalize", "drop variables and emit the certified triple");
  marg_cmd->add_option("--model", marg_model, "model.json")->required();
  marg_cmd->add_option("--drop", marg_drop, "comma-separated variables")
      ->required();
  marg_cmd->add_option("--mode", marg_mode, "childless | nonintervened")
      ->check(CLI::IsMember({"childless", "nonintervened"}));
  marg_cmd->add_option("--seed", marg_seed, "certification seed");
  marg_cmd->add_option("--out", marg_out, "output directory")->required();

  // aggregate
  std::string agg_model, agg_out;
  std::uint64_t agg_seed = 11;
  auto* agg_cmd = app.add_subcommand(
      "aggregate", "average a two-layer micro model into a macro model");
  agg_cmd->add_option("--model", agg_model, "model.json")->required();
  agg_cmd->add_option("--seed", agg_seed, "certification seed");
  agg_cmd->add_option("--out", agg_out, "output directory")->required();

  // equilibrate
  std::string eq_spec, eq_out;
  std::uint64_t eq_seed = 11;
  auto* eq_cmd = app.add_subcommand(
      "equilibrate",
      "build the equilibrium model of a linear dynamical process");
  eq_cmd->add_option("--spec", eq_spec, "dynamics.json")->required();
  eq_cmd->add_option("--seed", eq_seed, "certification seed");
  eq_cmd->add_option("--out", eq_out, "output directory")->required();

  // demo
  std::string demo_name, demo_out;
  auto* demo_cmd = app.add_subcommand("demo", "run a bundled scenario");
  demo_cmd->add_option("name", demo_name, "scenario name")->required();
  demo_cmd->add_option("--out", demo_out, "output directory");

  std::vector<const char*> argv;
  argv.push_back(kToolName);
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (validate_cmd->parsed()) {
      model_from_json(load_json_file(validate_path), validate_path);
      out << validate_path << ": OK\n";
      return 0;
    }
    if (solve_cmd->parsed()) {
      const Sem sem =
          model_from_json(load_json_file(solve_model), solve_model);
      const Intervention i = load_intervention(solve_intervention);
      const auto exo = exo_values_from_json(load_document(solve_noise));
      const Eigen::VectorXd x = solve_given_noise(sem, i, exo);
      Json solution;
      for (std::size_t k = 0; k < sem.variables.size(); ++k)
        solution[sem.variables[k]] = x(static_cast<Eigen::Index>(k));
      out << solution.dump(2) << "\n";
      return 0;
    }
    if (sample_cmd->parsed()) {
      const Sem sem =
          model_from_json(load_json_file(sample_model), sample_model);
      const Intervention i = load_intervention(sample_intervention);
      const Eigen::MatrixXd rows = sample(sem, i, sample_n, sample_seed);
      std::ofstream csv(sample_out);
      if (!csv) throw ValidationError("cannot write '" + sample_out + "'");
      write_csv(csv, sem.variables, rows);
      out << "wrote " << sample_n << " rows to " << sample_out << "\n";
      return 0;
    }
    if (check_cmd->parsed()) {
      return run_check_exact(check_args, out);
    }
    if (marg_cmd->parsed()) {
      const Sem sem =
          model_from_json(load_json_file(marg_model), marg_model);
      CheckConfig config = default_certify_config();
      config.with_seed(marg_seed);
      const auto drop = split_names(marg_drop);
      const CertifiedTriple triple =
          marg_mode == "childless"
              ? marginalize_childless(sem, drop, config)
              : marginalize_nonintervened(sem, drop, config);
      write_triple_directory(marg_out, triple);
      out << triple.provenance << ": certified exact; files in " << marg_out
          << "\n";
      return 0;
    }
    if (agg_cmd->parsed()) {
      const Sem sem = model_from_json(load_json_file(agg_model), agg_model);
      CheckConfig config = default_certify_config();
      config.with_seed(agg_seed);
      const CertifiedTriple triple = aggregate_micro_macro(sem, config);
      write_triple_directory(agg_out, triple);
      out << triple.provenance << ": certified exact; files in " << agg_out
          << "\n";
      return 0;
    }
    if (eq_cmd->parsed()) {
      const DynamicalSpec spec =
          dynamics_from_json(load_json_file(eq_spec), eq_spec);
      CheckConfig config = default_certify_config();
      config.with_seed(eq_seed);
      const CertifiedTriple triple = equilibrate(spec, config);
      write_triple_directory(eq_out, triple);
      out << triple.provenance << ": certified exact; files in " << eq_out
          << "\n";
      return 0;
    }
    if (demo_cmd->parsed()) {
      const std::string dir =
          demo_out.empty() ? "demo-" + demo_name : demo_out;
      return demos::run(demo_name, dir, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  err << "no subcommand\n";
  return 2;
}

}  // namespace semtrans
