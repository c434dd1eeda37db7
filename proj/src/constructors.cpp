#include "semtrans/constructors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "semtrans/errors.hpp"

namespace semtrans {

CheckConfig default_certify_config() {
  CheckConfig config;
  config.samples = 20000;
  config.with_seed(0x5EEDED5EEDED5EEDull);
  return config;
}

namespace {

std::string join(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ",";
    out += n;
  }
  return out;
}

ExactnessReport certify(const Sem& m_x, const CertifiedTriple& triple,
                        const CheckConfig& config, const char* what) {
  ExactnessReport report =
      check_exact(m_x, triple.model, triple.tau, triple.omega, config);
  if (!report.exact) {
    std::string why;
    if (!report.omega.surjective)
      why = "omega is not surjective onto '" + report.omega.uncovered_family +
            "'";
    else if (!report.omega.order_preserving)
      why = "omega is not order-preserving";
    else
      for (const auto& v : report.probe_verdicts) {
        if (!v.verdict.equal) {
          why = "law mismatch at " + v.intervention.to_string() + " (" +
                v.verdict.detail + ")";
          break;
        }
      }
    throw InternalConsistencyError(std::string(what) +
                                   " failed its own exactness check: " + why);
  }
  return report;
}

/// Selection matrix picking the kept coordinates of a family's target list.
OmegaRule dropping_rule(const InterventionFamily& family,
                        const std::string& to_label,
                        const std::set<std::string>& drop) {
  std::vector<Eigen::Index> kept_positions;
  for (std::size_t k = 0; k < family.targets.size(); ++k) {
    if (!drop.count(family.targets[k]))
      kept_positions.push_back(static_cast<Eigen::Index>(k));
  }
  const auto rows = static_cast<Eigen::Index>(kept_positions.size());
  const auto cols = static_cast<Eigen::Index>(family.targets.size());
  Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    matrix(r, kept_positions[static_cast<std::size_t>(r)]) = 1.0;
  return {family.label, to_label, std::move(matrix),
          Eigen::VectorXd::Zero(rows)};
}

}  // namespace

CertifiedTriple marginalize_childless(const Sem& sem,
                                      const std::set<std::string>& drop,
                                      const CheckConfig& config) {
  sem.validate();
  for (const auto& z : drop) {
    if (!sem.has_variable(z))
      throw ValidationError("cannot drop undeclared variable '" + z + "'");
  }

  const auto structure = analyze_structure(sem);
  for (const auto& [parent, child] : structure.edges) {
    const auto& p = sem.variables[parent];
    const auto& c = sem.variables[child];
    if (drop.count(p) && !drop.count(c))
      throw PreconditionError("variable '" + p + "' has child '" + c +
                              "' outside the dropped set");
  }
  // The dropped block must be acyclic so that it can be removed one
  // childless variable at a time.
  {
    std::map<std::string, std::size_t> degree;
    std::map<std::string, std::vector<std::string>> kids;
    for (const auto& z : drop) degree[z] = 0;
    for (const auto& [parent, child] : structure.edges) {
      const auto& p = sem.variables[parent];
      const auto& c = sem.variables[child];
      if (drop.count(p) && drop.count(c)) {
        kids[p].push_back(c);
        ++degree[c];
      }
    }
    std::deque<std::string> ready;
    for (const auto& [v, d] : degree) {
      if (d == 0) ready.push_back(v);
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
      const auto v = ready.front();
      ready.pop_front();
      ++seen;
      for (const auto& c : kids[v]) {
        if (--degree[c] == 0) ready.push_back(c);
      }
    }
    if (seen != drop.size())
      throw PreconditionError(
          "dropped variables form a cycle among themselves");
  }

  CertifiedTriple triple;
  Sem& out = triple.model;
  std::vector<std::string> kept;
  std::set<std::string> kept_exos;
  for (std::size_t k = 0; k < sem.variables.size(); ++k) {
    if (drop.count(sem.variables[k])) continue;
    kept.push_back(sem.variables[k]);
    out.variables.push_back(sem.variables[k]);
    out.equations.push_back(sem.equations[k]);
    sem.equations[k].collect_exos(kept_exos);
  }
  if (out.variables.empty())
    throw ValidationError("cannot drop every variable of the model");
  out.noise = sem.noise.restricted_to(kept_exos);
  out.solver = sem.solver;
  for (const auto& b : sem.boolean_variables) {
    if (!drop.count(b)) out.boolean_variables.insert(b);
  }

  // Catalogue images: drop the removed coordinates from every family.
  // Families whose images coincide collapse onto the first survivor.
  for (const auto& family : sem.catalog.families) {
    InterventionFamily image;
    image.label = family.label;
    for (std::size_t k = 0; k < family.targets.size(); ++k) {
      if (drop.count(family.targets[k])) continue;
      image.targets.push_back(family.targets[k]);
      image.domains.push_back(family.domains[k]);
    }
    const auto survivor = std::find_if(
        out.catalog.families.begin(), out.catalog.families.end(),
        [&](const InterventionFamily& f) { return f.same_shape(image); });
    if (survivor == out.catalog.families.end()) {
      out.catalog.families.push_back(image);
      triple.omega.rules.push_back(
          dropping_rule(family, image.label, drop));
    } else {
      triple.collapsed_families.push_back(family.label + " -> " +
                                          survivor->label);
      triple.omega.rules.push_back(
          dropping_rule(family, survivor->label, drop));
    }
  }

  triple.tau = Transformation::projection(sem.variables, kept);
  triple.provenance = "marginalize_childless drop={" + join(drop) + "}";
  triple.certification =
      certify(sem, triple, config, "childless marginalization");
  return triple;
}

CertifiedTriple marginalize_nonintervened(const Sem& sem,
                                          const std::set<std::string>& drop,
                                          const CheckConfig& config) {
  sem.validate();
  for (const auto& z : drop) {
    if (!sem.has_variable(z))
      throw ValidationError("cannot drop undeclared variable '" + z + "'");
  }
  const auto structure = analyze_structure(sem);
  if (!structure.acyclic)
    throw PreconditionError(
        "marginalization of non-intervened variables requires an acyclic "
        "model");
  for (const auto& family : sem.catalog.families) {
    for (const auto& t : family.targets) {
      if (drop.count(t))
        throw PreconditionError("variable '" + t +
                                "' is intervened upon by family '" +
                                family.label + "'");
    }
  }

  // Substitute each dropped variable into every equation that references
  // it, most-downstream first, so one pass per variable suffices.
  std::vector<Expr> equations = sem.equations;
  std::vector<std::size_t> drop_topo;
  for (std::size_t k : structure.topological_order) {
    if (drop.count(sem.variables[k])) drop_topo.push_back(k);
  }
  for (auto it = drop_topo.rbegin(); it != drop_topo.rend(); ++it) {
    const std::map<std::string, Expr> replacement{
        {sem.variables[*it], equations[*it]}};
    for (std::size_t k = 0; k < equations.size(); ++k) {
      if (k != *it) equations[k] = equations[k].substitute_vars(replacement);
    }
  }

  CertifiedTriple triple;
  Sem& out = triple.model;
  std::vector<std::string> kept;
  std::set<std::string> kept_exos;
  for (std::size_t k = 0; k < sem.variables.size(); ++k) {
    if (drop.count(sem.variables[k])) continue;
    kept.push_back(sem.variables[k]);
    out.variables.push_back(sem.variables[k]);
    out.equations.push_back(equations[k]);
    equations[k].collect_exos(kept_exos);
  }
  if (out.variables.empty())
    throw ValidationError("cannot drop every variable of the model");
  out.noise = sem.noise.restricted_to(kept_exos);
  out.catalog = sem.catalog;
  out.solver = sem.solver;
  for (const auto& b : sem.boolean_variables) {
    if (!drop.count(b)) out.boolean_variables.insert(b);
  }

  triple.tau = Transformation::projection(sem.variables, kept);
  triple.omega = InterventionMap::identity(sem.catalog);
  triple.provenance = "marginalize_nonintervened drop={" + join(drop) + "}";
  triple.certification =
      certify(sem, triple, config, "non-intervened marginalization");
  return triple;
}

// ---------------------------------------------------------------------------
// Micro to macro aggregation

namespace {

struct TwoLayerShape {
  std::vector<std::string> w_vars;  // order of the W family's targets
  std::vector<std::string> z_vars;
  const InterventionFamily* null_family = nullptr;
  const InterventionFamily* w_family = nullptr;
  const InterventionFamily* z_family = nullptr;
  const InterventionFamily* full_family = nullptr;
};

bool layer_consistent(const Sem& sem, const std::vector<std::string>& w,
                      const std::vector<std::string>& z) {
  const std::set<std::string> w_set(w.begin(), w.end());
  for (const auto& v : w) {
    std::set<std::string> refs;
    sem.equations[sem.index_of(v)].collect_vars(refs);
    if (!refs.empty()) return false;
  }
  for (const auto& v : z) {
    std::set<std::string> refs;
    sem.equations[sem.index_of(v)].collect_vars(refs);
    for (const auto& r : refs) {
      if (!w_set.count(r)) return false;
    }
  }
  return true;
}

TwoLayerShape two_layer_shape(const Sem& sem) {
  TwoLayerShape shape;
  std::vector<const InterventionFamily*> partial;
  for (const auto& f : sem.catalog.families) {
    if (f.is_null_family()) {
      shape.null_family = &f;
    } else if (f.targets.size() == sem.variables.size()) {
      shape.full_family = &f;
    } else {
      partial.push_back(&f);
    }
  }
  if (!shape.null_family || !shape.full_family || partial.size() != 2)
    throw ValidationError(
        "aggregation expects a catalog with the null family, two disjoint "
        "partial families, and one full family");
  std::set<std::string> union_set(partial[0]->targets.begin(),
                                  partial[0]->targets.end());
  for (const auto& t : partial[1]->targets) {
    if (!union_set.insert(t).second)
      throw ValidationError("the two partial families overlap on '" + t +
                            "'");
  }
  if (union_set.size() != sem.variables.size())
    throw ValidationError(
        "the two partial families must jointly cover every variable");

  if (layer_consistent(sem, partial[0]->targets, partial[1]->targets)) {
    shape.w_family = partial[0];
    shape.z_family = partial[1];
  } else if (layer_consistent(sem, partial[1]->targets,
                              partial[0]->targets)) {
    shape.w_family = partial[1];
    shape.z_family = partial[0];
  } else {
    throw ValidationError(
        "model is not two-layer: one family's variables must be pure noise "
        "and the other's affine in them");
  }
  shape.w_vars = shape.w_family->targets;
  shape.z_vars = shape.z_family->targets;
  return shape;
}

/// Image of a family's domain box under coordinate averaging.
ValueDomain averaged_domain(const std::vector<ValueDomain>& domains) {
  const double n = static_cast<double>(domains.size());
  const bool all_finite = std::all_of(
      domains.begin(), domains.end(),
      [](const ValueDomain& d) { return d.is_finite(); });
  if (all_finite) {
    std::size_t total = 1;
    for (const auto& d : domains) total *= d.finite_values->size();
    if (total <= 1000) {
      std::vector<double> sums{0.0};
      for (const auto& d : domains) {
        std::vector<double> next;
        next.reserve(sums.size() * d.finite_values->size());
        for (double s : sums) {
          for (double v : *d.finite_values) next.push_back(s + v);
        }
        sums = std::move(next);
      }
      for (double& s : sums) s /= n;
      return ValueDomain::finite(std::move(sums));
    }
  }
  if (std::any_of(domains.begin(), domains.end(),
                  [](const ValueDomain& d) { return d.is_finite(); }))
    throw ValidationError(
        "cannot average a mix of finite and interval domains");
  double lo = 0.0, hi = 0.0;
  for (const auto& d : domains) {
    lo += d.lo;
    hi += d.hi;
  }
  return ValueDomain::interval(lo / n, hi / n);
}

std::string fresh_name(std::string candidate, const NoiseModel& noise) {
  while (noise.has_exo(candidate) ||
         std::any_of(noise.base.begin(), noise.base.end(),
                     [&](const auto& b) { return b.first == candidate; })) {
    candidate += "_";
  }
  return candidate;
}

Expr exo_part_expr(const AffineForm& form) {
  std::vector<Expr> terms;
  if (form.constant != 0.0) terms.push_back(Expr::constant(form.constant));
  for (const auto& [name, coef] : form.exos)
    terms.push_back(Expr::scaled(coef, Expr::exo(name)));
  return Expr::sum(std::move(terms));
}

}  // namespace

CertifiedTriple aggregate_micro_macro(const Sem& sem,
                                      const CheckConfig& config) {
  sem.validate();
  const auto shape = two_layer_shape(sem);
  const auto n = static_cast<Eigen::Index>(shape.w_vars.size());
  const auto m = static_cast<Eigen::Index>(shape.z_vars.size());

  // Coupling matrix and per-equation noise parts from the affine forms.
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(m, n);
  std::vector<Expr> w_noise_parts, z_noise_parts;
  std::map<std::string, Eigen::Index> w_index;
  for (Eigen::Index j = 0; j < n; ++j)
    w_index[shape.w_vars[static_cast<std::size_t>(j)]] = j;
  for (const auto& w : shape.w_vars) {
    const auto form = sem.equations[sem.index_of(w)].affine();
    if (!form)
      throw ValidationError("equation for '" + w + "' is not affine");
    w_noise_parts.push_back(exo_part_expr(*form));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& z = shape.z_vars[static_cast<std::size_t>(i)];
    const auto form = sem.equations[sem.index_of(z)].affine();
    if (!form)
      throw ValidationError("equation for '" + z + "' is not affine");
    for (const auto& [name, coef] : form->vars)
      coupling(i, w_index.at(name)) = coef;
    z_noise_parts.push_back(exo_part_expr(*form));
  }

  const Eigen::VectorXd column_sums = coupling.colwise().sum();
  const double spread = column_sums.maxCoeff() - column_sums.minCoeff();
  if (spread > 1e-12) {
    std::ostringstream msg;
    msg << "columns of the coupling matrix must share one sum; spread "
        << spread;
    throw PreconditionError(msg.str());
  }
  const double a = column_sums.mean();

  // Substituting the exogenous map turns the averaged noise parts into
  // expressions over base noises.
  std::map<std::string, Expr> exo_defs;
  for (const auto& [name, expr] : sem.noise.exogenous)
    exo_defs.emplace(name, expr);
  const auto averaged_exo = [&](const std::vector<Expr>& parts) {
    std::vector<Expr> terms;
    for (const auto& p : parts)
      terms.push_back(p.substitute_exos(exo_defs));
    return Expr::scaled(1.0 / static_cast<double>(parts.size()),
                        Expr::sum(std::move(terms)));
  };

  CertifiedTriple triple;
  Sem& out = triple.model;
  const std::string w_hat = "W_hat";
  const std::string z_hat = "Z_hat";
  const std::string e_hat = fresh_name("E_hat", sem.noise);
  const std::string f_hat = fresh_name("F_hat", sem.noise);
  out.variables = {w_hat, z_hat};
  out.equations.push_back(Expr::exo(e_hat));
  {
    // Each micro equation contributes a*W_hat through its W-row sum, and
    // the W layer holds n variables averaging to W_hat, so the macro
    // coupling is a*n/m.
    std::vector<Expr> terms;
    const double macro_coef =
        a * static_cast<double>(n) / static_cast<double>(m);
    if (macro_coef != 0.0)
      terms.push_back(Expr::scaled(macro_coef, Expr::var(w_hat)));
    terms.push_back(Expr::exo(f_hat));
    out.equations.push_back(Expr::sum(std::move(terms)));
  }
  out.noise.base = sem.noise.base;
  out.noise.exogenous.emplace_back(e_hat, averaged_exo(w_noise_parts));
  out.noise.exogenous.emplace_back(f_hat, averaged_exo(z_noise_parts));
  std::set<std::string> keep{e_hat, f_hat};
  out.noise = out.noise.restricted_to(keep);
  out.solver = sem.solver;

  // Macro catalog: the four families, with averaged value domains.
  InterventionFamily y_null = InterventionFamily::null_family(
      shape.null_family->label);
  InterventionFamily y_w{shape.w_family->label, {w_hat},
                         {averaged_domain(shape.w_family->domains)}};
  InterventionFamily y_z{shape.z_family->label, {z_hat},
                         {averaged_domain(shape.z_family->domains)}};
  std::vector<ValueDomain> full_w, full_z;
  for (std::size_t k = 0; k < shape.full_family->targets.size(); ++k) {
    if (w_index.count(shape.full_family->targets[k]))
      full_w.push_back(shape.full_family->domains[k]);
    else
      full_z.push_back(shape.full_family->domains[k]);
  }
  if (static_cast<Eigen::Index>(full_w.size()) != n ||
      static_cast<Eigen::Index>(full_z.size()) != m)
    throw ValidationError(
        "the full family must clamp every variable of both layers");
  InterventionFamily y_full{shape.full_family->label,
                            {w_hat, z_hat},
                            {averaged_domain(full_w),
                             averaged_domain(full_z)}};
  out.catalog.families = {y_null, y_w, y_z, y_full};

  // tau: the two averaging rows over the source coordinate order.
  Eigen::MatrixXd tau_matrix =
      Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(sem.variables.size()));
  for (const auto& w : shape.w_vars)
    tau_matrix(0, static_cast<Eigen::Index>(sem.index_of(w))) =
        1.0 / static_cast<double>(n);
  for (const auto& z : shape.z_vars)
    tau_matrix(1, static_cast<Eigen::Index>(sem.index_of(z))) =
        1.0 / static_cast<double>(m);
  triple.tau = Transformation::affine(sem.variables, out.variables,
                                      tau_matrix, Eigen::VectorXd::Zero(2));

  // omega: value averaging family by family.
  const auto averaging_row = [](const std::vector<std::string>& targets,
                                const std::set<std::string>& members,
                                Eigen::MatrixXd& matrix, Eigen::Index row) {
    std::size_t count = 0;
    for (const auto& t : targets) count += members.count(t);
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (members.count(targets[k]))
        matrix(row, static_cast<Eigen::Index>(k)) =
            1.0 / static_cast<double>(count);
    }
  };
  const std::set<std::string> w_set(shape.w_vars.begin(), shape.w_vars.end());
  const std::set<std::string> z_set(shape.z_vars.begin(), shape.z_vars.end());
  triple.omega.rules.push_back({y_null.label, y_null.label,
                                Eigen::MatrixXd::Zero(0, 0),
                                Eigen::VectorXd::Zero(0)});
  {
    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(1, n);
    averaging_row(shape.w_family->targets, w_set, matrix, 0);
    triple.omega.rules.push_back({shape.w_family->label, y_w.label,
                                  std::move(matrix), Eigen::VectorXd::Zero(1)});
  }
  {
    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(1, m);
    averaging_row(shape.z_family->targets, z_set, matrix, 0);
    triple.omega.rules.push_back({shape.z_family->label, y_z.label,
                                  std::move(matrix), Eigen::VectorXd::Zero(1)});
  }
  {
    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(2, n + m);
    averaging_row(shape.full_family->targets, w_set, matrix, 0);
    averaging_row(shape.full_family->targets, z_set, matrix, 1);
    triple.omega.rules.push_back({shape.full_family->label, y_full.label,
                                  std::move(matrix), Eigen::VectorXd::Zero(2)});
  }

  std::ostringstream provenance;
  provenance << "aggregate_micro_macro n=" << n << " m=" << m
             << " column_sum=" << a;
  triple.provenance = provenance.str();
  triple.certification = certify(sem, triple, config, "aggregation");
  return triple;
}

// ---------------------------------------------------------------------------
// Equilibration of a linear dynamical process

std::vector<std::string> DynamicalSpec::coordinate_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= dimension(); ++k)
    names.push_back("Y" + std::to_string(k));
  return names;
}

void DynamicalSpec::validate() const {
  if (transition.rows() != transition.cols())
    throw ValidationError("transition matrix must be square");
  if (transition.rows() == 0)
    throw ValidationError("transition matrix must be nonempty");
  noise.validate();
  if (noise.exogenous.size() != dimension())
    throw ValidationError("expected one exogenous entry per coordinate (" +
                          std::to_string(dimension()) + ")");
  const auto names = coordinate_names();
  const std::set<std::string> name_set(names.begin(), names.end());
  for (const auto& f : clamp_families) {
    f.validate();
    for (const auto& t : f.targets) {
      if (!name_set.count(t))
        throw ValidationError("clamp family '" + f.label +
                              "' targets unknown coordinate '" + t + "'");
    }
  }
  if (horizon <= 0) throw ValidationError("horizon must be positive");
  if (tolerance <= 0) throw ValidationError("tolerance must be positive");
}

namespace {

double operator_norm(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().maxCoeff();
}

struct DampingPlan {
  double damping = 1.0;
  double rate = 0.0;  // worst-case spectral radius of the damped iteration
};

/// Largest damping factor d such that the iteration matrix
/// (1-d) I + d M has spectral radius < 1 for every listed principal free
/// submatrix of M, shrunk by a safety margin. Spectra with Re(lambda) < 1
/// always admit such a d.
DampingPlan admissible_damping(
    const Eigen::MatrixXd& m,
    const std::vector<std::vector<Eigen::Index>>& free_sets) {
  std::vector<std::complex<double>> spectrum;
  for (const auto& free : free_sets) {
    if (free.empty()) continue;
    const auto k = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c)
        sub(r, c) = m(free[static_cast<std::size_t>(r)],
                      free[static_cast<std::size_t>(c)]);
    }
    const Eigen::VectorXcd eigs =
        Eigen::EigenSolver<Eigen::MatrixXd>(sub, false).eigenvalues();
    for (Eigen::Index e = 0; e < eigs.size(); ++e)
      spectrum.push_back(eigs(e));
  }
  double bound = 1.0 / 0.9;  // so an unconstrained spectrum yields d = 1
  for (const auto& lambda : spectrum) {
    const std::complex<double> gap = 1.0 - lambda;
    const double denom = std::norm(gap);
    if (denom < 1e-15)
      throw PreconditionError("equilibrium equations have an eigenvalue at 1");
    bound = std::min(bound, 2.0 * gap.real() / denom);
  }
  if (bound <= 0.0)
    throw PreconditionError(
        "no damping factor makes the equilibrium iteration converge");
  DampingPlan plan;
  plan.damping = std::min(1.0, 0.9 * bound);
  for (const auto& lambda : spectrum) {
    plan.rate = std::max(
        plan.rate, std::abs(1.0 + plan.damping * (lambda - 1.0)));
  }
  return plan;
}

Eigen::VectorXd exo_vector(const NoiseModel& noise,
                           const std::map<std::string, double>& exo_values) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(noise.exogenous.size()));
  for (std::size_t k = 0; k < noise.exogenous.size(); ++k) {
    auto it = exo_values.find(noise.exogenous[k].first);
    if (it == exo_values.end())
      throw ValidationError("no value provided for exogenous id '" +
                            noise.exogenous[k].first + "'");
    e(static_cast<Eigen::Index>(k)) = it->second;
  }
  return e;
}

}  // namespace

CertifiedTriple equilibrate(const DynamicalSpec& spec,
                            const CheckConfig& config) {
  spec.validate();
  const double norm = operator_norm(spec.transition);
  if (norm >= 1.0) {
    std::ostringstream msg;
    msg << "transition map must be a contraction; operator 2-norm " << norm;
    throw PreconditionError(msg.str());
  }
  const auto n = static_cast<Eigen::Index>(spec.dimension());
  const auto names = spec.coordinate_names();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(1.0 - spec.transition(i, i)) < 1e-12)
      throw PreconditionError("diagonal entry " + std::to_string(i + 1) +
                              " equals 1");
  }

  CertifiedTriple triple;
  Sem& out = triple.model;
  out.variables = names;
  out.noise = spec.noise;
  Eigen::MatrixXd equilibrium = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = 1.0 / (1.0 - spec.transition(i, i));
    std::vector<Expr> terms;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || spec.transition(i, j) == 0.0) continue;
      equilibrium(i, j) = spec.transition(i, j) * scale;
      terms.push_back(Expr::scaled(equilibrium(i, j),
                                   Expr::var(names[static_cast<std::size_t>(j)])));
    }
    terms.push_back(Expr::scaled(
        scale,
        Expr::exo(spec.noise.exogenous[static_cast<std::size_t>(i)].first)));
    out.equations.push_back(Expr::sum(std::move(terms)));
  }

  out.catalog.families = spec.clamp_families;
  const bool has_null = std::any_of(
      out.catalog.families.begin(), out.catalog.families.end(),
      [](const InterventionFamily& f) { return f.is_null_family(); });
  if (!has_null)
    out.catalog.families.insert(out.catalog.families.begin(),
                                InterventionFamily::null_family());

  // Choose a damping factor under which fixed-point iteration converges for
  // every clamp pattern in the catalog. The equilibrium equations can have
  // spectral radius above one even though (I - A) is invertible, in which
  // case undamped iteration would diverge.
  std::map<std::string, Eigen::Index> name_index;
  for (Eigen::Index k = 0; k < n; ++k)
    name_index[names[static_cast<std::size_t>(k)]] = k;
  std::vector<std::vector<Eigen::Index>> free_sets;
  for (const auto& f : out.catalog.families) {
    std::set<Eigen::Index> clamped;
    for (const auto& t : f.targets) clamped.insert(name_index.at(t));
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!clamped.count(k)) free.push_back(k);
    }
    free_sets.push_back(std::move(free));
  }
  const DampingPlan plan = admissible_damping(equilibrium, free_sets);
  out.solver.tolerance = 1e-10;
  out.solver.damping = plan.damping < 1.0 ? plan.damping : 0.0;
  if (plan.rate > 0.0 && plan.rate < 1.0) {
    // Iteration budget sized to the achieved contraction rate.
    const double step_tolerance = out.solver.tolerance * plan.damping;
    const double needed =
        std::log(step_tolerance / 10.0) / std::log(plan.rate);
    out.solver.max_iterations = std::max(
        10000, 2 * static_cast<int>(std::min(needed, 5.0e6)));
  }

  triple.tau = Transformation::identity(names);
  triple.omega = InterventionMap::identity(out.catalog);

  // The equilibrium law of the process is the law of the coupled system
  // x = A x + e with the same clamp catalog; certification compares the two
  // algebraic routes (and spot-checks simulated limits below).
  Sem process_equilibrium = process_equilibrium_model(spec);
  process_equilibrium.catalog = out.catalog;

  std::ostringstream provenance;
  provenance << "equilibrate n=" << n << " norm=" << norm << " damping="
             << out.solver.damping;
  triple.provenance = provenance.str();
  triple.certification =
      certify(process_equilibrium, triple, config, "equilibration");

  // Shared-draw consistency: simulated limits of the process must agree
  // with the fixed points of the constructed model.
  const int steps = std::max(
      spec.horizon,
      static_cast<int>(std::ceil(std::log(1e-9) / std::log(norm))) + 1);
  RandomStream rng(derive_seed(config.seed, 4242));
  const ProbeSet probes = probe_catalog(out.catalog, config.probes);
  for (std::size_t k = 0; k < std::min<std::size_t>(probes.probes.size(), 4);
       ++k) {
    const auto& clamp = probes.probes[k].intervention;
    const auto exo_values = spec.noise.sample_exogenous(rng);
    const auto sim = simulate_dynamics(spec, clamp, exo_values,
                                       Eigen::VectorXd::Zero(n), steps);
    const auto fixed = solve_given_noise(out, clamp, exo_values);
    const double gap = (sim.limit - fixed).cwiseAbs().maxCoeff();
    if (gap > std::max(spec.tolerance, 1e-6))
      throw InternalConsistencyError(
          "simulated limit and equilibrium solution disagree by " +
          std::to_string(gap) + " under " + clamp.to_string());
  }
  return triple;
}

Sem process_equilibrium_model(const DynamicalSpec& spec) {
  spec.validate();
  Sem sem;
  sem.variables = spec.coordinate_names();
  sem.noise = spec.noise;
  const auto n = static_cast<Eigen::Index>(spec.dimension());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Expr> terms;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (spec.transition(i, j) != 0.0)
        terms.push_back(Expr::scaled(
            spec.transition(i, j),
            Expr::var(sem.variables[static_cast<std::size_t>(j)])));
    }
    terms.push_back(
        Expr::exo(spec.noise.exogenous[static_cast<std::size_t>(i)].first));
    sem.equations.push_back(Expr::sum(std::move(terms)));
  }
  sem.catalog.families = spec.clamp_families;
  const bool has_null = std::any_of(
      sem.catalog.families.begin(), sem.catalog.families.end(),
      [](const InterventionFamily& f) { return f.is_null_family(); });
  if (!has_null)
    sem.catalog.families.insert(sem.catalog.families.begin(),
                                InterventionFamily::null_family());
  return sem;
}

SimulationResult simulate_dynamics(const DynamicalSpec& spec,
                                   const Intervention& clamp,
                                   const std::map<std::string, double>& exo_values,
                                   const Eigen::VectorXd& x0, int steps) {
  spec.validate();
  const double norm = operator_norm(spec.transition);
  if (norm >= 1.0) {
    std::ostringstream msg;
    msg << "transition map must be a contraction; operator 2-norm " << norm;
    throw PreconditionError(msg.str());
  }
  const auto n = static_cast<Eigen::Index>(spec.dimension());
  if (x0.size() != n)
    throw ValidationError("initial state has wrong dimension");
  if (steps < 1) throw ValidationError("need at least one step");

  const auto names = spec.coordinate_names();
  std::map<std::string, Eigen::Index> name_index;
  for (Eigen::Index k = 0; k < n; ++k)
    name_index[names[static_cast<std::size_t>(k)]] = k;
  std::vector<std::pair<Eigen::Index, double>> clamps;
  for (const auto& [name, value] : clamp.targets) {
    auto it = name_index.find(name);
    if (it == name_index.end())
      throw ValidationError("clamp targets unknown coordinate '" + name +
                            "'");
    clamps.emplace_back(it->second, value);
  }
  const Eigen::VectorXd e = exo_vector(spec.noise, exo_values);

  SimulationResult result;
  result.trajectory.resize(steps + 1, n);
  Eigen::VectorXd x = x0;
  for (const auto& [k, v] : clamps) x(k) = v;  // clamp holds from the start
  result.trajectory.row(0) = x.transpose();
  Eigen::VectorXd prev = x;
  for (int t = 1; t <= steps; ++t) {
    prev = x;
    x = spec.transition * prev + e;
    for (const auto& [k, v] : clamps) x(k) = v;
    result.trajectory.row(t) = x.transpose();
  }
  result.limit = x;
  result.residual = (x - prev).cwiseAbs().maxCoeff();
  if (result.residual > spec.tolerance)
    throw InternalConsistencyError(
        "simulation residual " + std::to_string(result.residual) +
        " above tolerance after " + std::to_string(steps) + " steps");

  // The limit must match the direct solve of the clamped linear system.
  Eigen::MatrixXd a = spec.transition;
  Eigen::VectorXd rhs = e;
  for (const auto& [k, v] : clamps) {
    a.row(k).setZero();
    rhs(k) = v;
  }
  const Eigen::VectorXd direct =
      (Eigen::MatrixXd::Identity(n, n) - a).lu().solve(rhs);
  const double gap = (direct - result.limit).cwiseAbs().maxCoeff();
  if (gap > spec.tolerance)
    throw InternalConsistencyError(
        "simulated limit misses the clamped solve by " + std::to_string(gap));
  return result;
}

}  // namespace semtrans
