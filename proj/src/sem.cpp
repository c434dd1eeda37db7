#include "semtrans/sem.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <deque>
#include <sstream>

#include "semtrans/errors.hpp"
#include "semtrans/rng.hpp"

namespace semtrans {

void Sem::validate() const {
  if (variables.empty()) throw ValidationError("model declares no variables");
  if (equations.size() != variables.size())
    throw ValidationError("expected exactly one equation per variable");
  std::set<std::string> names;
  for (const auto& v : variables) {
    if (v.empty()) throw ValidationError("variable with empty name");
    if (!names.insert(v).second)
      throw ValidationError("duplicate variable '" + v + "'");
  }
  noise.validate();
  for (const auto& [n, s] : noise.base) {
    if (names.count(n))
      throw ValidationError("base noise '" + n +
                            "' collides with a variable name");
  }
  for (const auto& [n, e] : noise.exogenous) {
    if (names.count(n))
      throw ValidationError("exogenous id '" + n +
                            "' collides with a variable name");
  }
  for (std::size_t k = 0; k < equations.size(); ++k) {
    std::set<std::string> vars, exos;
    equations[k].collect_vars(vars);
    equations[k].collect_exos(exos);
    for (const auto& v : vars) {
      if (!names.count(v))
        throw ValidationError("equation for '" + variables[k] +
                              "' references undeclared variable '" + v + "'");
    }
    for (const auto& e : exos) {
      if (!noise.has_exo(e))
        throw ValidationError("equation for '" + variables[k] +
                              "' references undeclared exogenous id '" + e +
                              "'");
    }
  }
  catalog.validate();
  for (const auto& f : catalog.families) {
    for (const auto& t : f.targets) {
      if (!names.count(t))
        throw ValidationError("intervention family '" + f.label +
                              "' targets undeclared variable '" + t + "'");
    }
  }
  for (const auto& b : boolean_variables) {
    if (!names.count(b))
      throw ValidationError("boolean domain declared for undeclared '" + b +
                            "'");
  }
}

std::size_t Sem::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < variables.size(); ++k) {
    if (variables[k] == name) return k;
  }
  throw ValidationError("undeclared variable '" + name + "'");
}

bool Sem::has_variable(const std::string& name) const {
  return std::find(variables.begin(), variables.end(), name) !=
         variables.end();
}

std::vector<Expr> LinearSemView::rebuild_equations(
    const std::vector<std::string>& variables) const {
  std::vector<Expr> out;
  const auto n = static_cast<Eigen::Index>(variables.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Expr> terms;
    if (offsets(i) != 0.0) terms.push_back(Expr::constant(offsets(i)));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (coefficients(i, j) != 0.0)
        terms.push_back(Expr::scaled(coefficients(i, j),
                                     Expr::var(variables[j])));
    }
    for (Eigen::Index k = 0; k < exo_loading.cols(); ++k) {
      if (exo_loading(i, k) != 0.0)
        terms.push_back(
            Expr::scaled(exo_loading(i, k), Expr::exo(exo_names[k])));
    }
    out.push_back(Expr::sum(std::move(terms)));
  }
  return out;
}

namespace {

struct GraphInfo {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  bool acyclic = false;
  std::vector<std::size_t> topo;
};

GraphInfo graph_of(const std::vector<std::string>& variables,
                   const std::vector<Expr>& equations) {
  GraphInfo info;
  const std::size_t n = variables.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < n; ++k) index[variables[k]] = k;

  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> in_degree(n, 0);
  for (std::size_t child = 0; child < n; ++child) {
    std::set<std::string> vars;
    equations[child].collect_vars(vars);
    for (const auto& v : vars) {
      const std::size_t parent = index.at(v);
      info.edges.emplace_back(parent, child);
      children[parent].push_back(child);
      ++in_degree[child];
    }
  }
  std::sort(info.edges.begin(), info.edges.end());

  std::deque<std::size_t> ready;
  for (std::size_t k = 0; k < n; ++k) {
    if (in_degree[k] == 0) ready.push_back(k);
  }
  while (!ready.empty()) {
    const std::size_t k = ready.front();
    ready.pop_front();
    info.topo.push_back(k);
    for (std::size_t c : children[k]) {
      if (--in_degree[c] == 0) ready.push_back(c);
    }
  }
  info.acyclic = info.topo.size() == n;
  if (!info.acyclic) info.topo.clear();
  return info;
}

std::optional<LinearSemView> linear_view_of(
    const std::vector<std::string>& variables,
    const std::vector<Expr>& equations, const NoiseModel& noise) {
  const auto n = static_cast<Eigen::Index>(variables.size());
  LinearSemView view;
  view.exo_names = noise.exo_names();
  const auto m = static_cast<Eigen::Index>(view.exo_names.size());
  view.coefficients = Eigen::MatrixXd::Zero(n, n);
  view.offsets = Eigen::VectorXd::Zero(n);
  view.exo_loading = Eigen::MatrixXd::Zero(n, m);
  std::map<std::string, Eigen::Index> var_index, exo_index;
  for (Eigen::Index k = 0; k < n; ++k) var_index[variables[k]] = k;
  for (Eigen::Index k = 0; k < m; ++k) exo_index[view.exo_names[k]] = k;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto form = equations[static_cast<std::size_t>(i)].affine();
    if (!form) return std::nullopt;
    view.offsets(i) = form->constant;
    for (const auto& [name, coef] : form->vars)
      view.coefficients(i, var_index.at(name)) = coef;
    for (const auto& [name, coef] : form->exos)
      view.exo_loading(i, exo_index.at(name)) = coef;
  }
  return view;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void check_intervention_targets(const Sem& sem, const Intervention& i) {
  for (const auto& [name, value] : i.targets) {
    if (!sem.has_variable(name))
      throw ValidationError("intervention targets undeclared variable '" +
                            name + "'");
    if (sem.boolean_variables.count(name) && value != 0.0 && value != 1.0)
      throw ValidationError("intervention sets boolean variable '" + name +
                            "' to " + std::to_string(value) +
                            ", outside {0,1}");
  }
}

}  // namespace

StructureReport analyze_structure(const Sem& sem) {
  sem.validate();
  StructureReport report;
  auto info = graph_of(sem.variables, sem.equations);
  report.edges = std::move(info.edges);
  report.acyclic = info.acyclic;
  report.topological_order = std::move(info.topo);
  report.linear = linear_view_of(sem.variables, sem.equations, sem.noise);
  return report;
}

Sem apply_intervention(const Sem& sem, const Intervention& i) {
  sem.validate();
  check_intervention_targets(sem, i);

  Sem out = sem;
  for (const auto& [name, value] : i.targets)
    out.equations[sem.index_of(name)] = Expr::constant(value);

  if (i.is_null()) return out;

  // Catalog of the result: the sub-poset of interventions above i. A family
  // survives iff its target set covers i's targets and i's values are
  // admissible; the covered coordinates are pinned to i's values.
  std::string null_label = "null";
  for (const auto& f : sem.catalog.families) {
    if (f.is_null_family()) null_label = f.label;
  }
  std::vector<InterventionFamily> kept;
  for (const auto& f : sem.catalog.families) {
    bool compatible = true;
    for (const auto& [name, value] : i.targets) {
      auto it = std::find(f.targets.begin(), f.targets.end(), name);
      if (it == f.targets.end()) {
        compatible = false;
        break;
      }
      const auto k = static_cast<std::size_t>(it - f.targets.begin());
      if (!f.domains[k].contains(value)) {
        compatible = false;
        break;
      }
    }
    if (!compatible) continue;
    InterventionFamily pinned = f;
    for (const auto& [name, value] : i.targets) {
      const auto it = std::find(pinned.targets.begin(), pinned.targets.end(),
                                name);
      pinned.domains[static_cast<std::size_t>(
          it - pinned.targets.begin())] = ValueDomain::single(value);
    }
    if (std::none_of(kept.begin(), kept.end(), [&](const auto& g) {
          return g.same_shape(pinned);
        }))
      kept.push_back(std::move(pinned));
  }
  std::vector<InterventionFamily> families;
  families.push_back(InterventionFamily::null_family(null_label));
  for (auto& f : kept) families.push_back(std::move(f));
  out.catalog.families = std::move(families);
  return out;
}

namespace detail {

PreparedSolve::PreparedSolve(const Sem& sem, const Intervention& i)
    : sem_(sem) {
  sem.validate();
  check_intervention_targets(sem, i);
  const std::size_t n = sem.variables.size();
  equations_ = sem.equations;
  clamped_.assign(n, false);
  clamp_values_.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) var_index_[sem.variables[k]] = k;
  for (const auto& [name, value] : i.targets) {
    const std::size_t k = var_index_.at(name);
    equations_[k] = Expr::constant(value);
    clamped_[k] = true;
    clamp_values_[k] = value;
  }

  auto info = graph_of(sem.variables, equations_);
  acyclic_ = info.acyclic;
  topo_ = std::move(info.topo);
  if (!acyclic_) {
    linear_ = linear_view_of(sem.variables, equations_, sem.noise);
    if (linear_) {
      // Convergence certificate for the damped iteration
      //   x <- (1-d) x + d (A x + ...) :
      // the iteration matrix (1-d) I + d A must have spectral radius < 1,
      // i.e. the map must be a contraction in some operator norm.
      const double d = sem.solver.effective_damping();
      const auto dim = linear_->coefficients.rows();
      const Eigen::MatrixXd iteration =
          (1.0 - d) * Eigen::MatrixXd::Identity(dim, dim) +
          d * linear_->coefficients;
      const double rho = spectral_radius(iteration);
      if (rho >= 1.0 - 1e-12) {
        std::ostringstream msg;
        msg << "intervened cyclic linear system fails the contraction "
               "check: iteration spectral radius "
            << rho << " (intervention " << i.to_string() << ")";
        throw PreconditionError(msg.str());
      }
    }
  }
}

double PreparedSolve::equation_value(
    std::size_t k, const Eigen::VectorXd& x,
    const std::map<std::string, double>& exo_values) const {
  const auto var_lookup = [&](const std::string& name) {
    return x(static_cast<Eigen::Index>(var_index_.at(name)));
  };
  const auto exo_lookup = [&](const std::string& name) {
    auto it = exo_values.find(name);
    if (it == exo_values.end())
      throw ValidationError("no value provided for exogenous id '" + name +
                            "'");
    return it->second;
  };
  return equations_[k].eval(var_lookup, exo_lookup);
}

Eigen::VectorXd PreparedSolve::iterate(
    const Eigen::VectorXd& start,
    const std::map<std::string, double>& exo_values) const {
  const auto n = static_cast<Eigen::Index>(sem_.variables.size());
  const double d = sem_.solver.effective_damping();

  Eigen::VectorXd x = start;
  Eigen::VectorXd fx(n);

  // Linear systems iterate on the matrix view; anything else walks the
  // expression trees.
  Eigen::MatrixXd a;
  Eigen::VectorXd rhs;
  if (linear_) {
    Eigen::VectorXd e(linear_->exo_loading.cols());
    for (Eigen::Index k = 0; k < e.size(); ++k) {
      auto it = exo_values.find(linear_->exo_names[static_cast<std::size_t>(k)]);
      if (it == exo_values.end())
        throw ValidationError("no value provided for exogenous id '" +
                              linear_->exo_names[static_cast<std::size_t>(k)] +
                              "'");
      e(k) = it->second;
    }
    a = linear_->coefficients;
    rhs = linear_->offsets + linear_->exo_loading * e;
  }

  // Stop once x satisfies the intervened equations within tolerance; for
  // pure iteration this is exactly the successive-iterate criterion.
  double residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < sem_.solver.max_iterations; ++iter) {
    if (linear_) {
      fx.noalias() = a * x + rhs;
    } else {
      for (Eigen::Index k = 0; k < n; ++k)
        fx(k) = equation_value(static_cast<std::size_t>(k), x, exo_values);
    }
    residual = (fx - x).cwiseAbs().maxCoeff();
    if (residual < sem_.solver.tolerance) return x;
    x = (1.0 - d) * x + d * fx;
  }
  std::ostringstream msg;
  msg << "fixed-point iteration did not converge within "
      << sem_.solver.max_iterations << " iterations; last residual "
      << residual;
  throw SolverError(msg.str(), residual);
}

Eigen::VectorXd PreparedSolve::solve(
    const std::map<std::string, double>& exo_values,
    const std::optional<Eigen::VectorXd>& initial) const {
  const auto n = static_cast<Eigen::Index>(sem_.variables.size());
  if (acyclic_) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (std::size_t k : topo_)
      x(static_cast<Eigen::Index>(k)) = equation_value(k, x, exo_values);
    return x;
  }
  Eigen::VectorXd start =
      initial.value_or(Eigen::VectorXd::Zero(n));
  if (start.size() != n)
    throw ValidationError("initial point has wrong dimension");
  return iterate(start, exo_values);
}

}  // namespace detail

Eigen::VectorXd solve_given_noise(
    const Sem& sem, const Intervention& i,
    const std::map<std::string, double>& exo_values,
    const std::optional<Eigen::VectorXd>& initial) {
  detail::PreparedSolve prepared(sem, i);
  return prepared.solve(exo_values, initial);
}

Eigen::MatrixXd sample(const Sem& sem, const Intervention& i, int n,
                       std::uint64_t seed) {
  if (n <= 0) throw ValidationError("sample count must be positive");
  detail::PreparedSolve prepared(sem, i);
  RandomStream rng(seed);
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(sem.variables.size()));
  for (int row = 0; row < n; ++row) {
    const auto exo_values = sem.noise.sample_exogenous(rng);
    try {
      out.row(row) = prepared.solve(exo_values).transpose();
    } catch (const SolverError& err) {
      throw SolverError("draw " + std::to_string(row) + ": " + err.what(),
                        err.residual);
    }
  }
  return out;
}

}  // namespace semtrans
