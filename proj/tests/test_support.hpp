#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <set>
#include <string>
#include <vector>

#include "semtrans/constructors.hpp"
#include "semtrans/rng.hpp"
#include "semtrans/sem.hpp"

namespace semtrans::testing {

inline InterventionFamily make_family(std::string label,
                                      std::vector<std::string> targets,
                                      std::vector<ValueDomain> domains) {
  InterventionFamily f;
  f.label = std::move(label);
  f.targets = std::move(targets);
  f.domains = std::move(domains);
  return f;
}

struct DagOptions {
  int min_vars = 2;
  int max_vars = 8;
  double edge_probability = 0.45;
  bool offsets = true;
  /// Adds an upstream variable that feeds at least two others, so that
  /// marginalizing it produces dependent exogenous noise.
  bool common_parent = false;
};

/// Random acyclic linear-Gaussian model with one independent Normal noise
/// per variable. Variables are X1..Xk in topological order.
inline Sem random_linear_gaussian_dag(RandomStream& rng,
                                      const DagOptions& options = {}) {
  const int k = options.min_vars +
                static_cast<int>(rng.index(static_cast<std::size_t>(
                    options.max_vars - options.min_vars + 1)));
  Sem sem;
  for (int i = 1; i <= k; ++i) {
    const std::string name = "X" + std::to_string(i);
    sem.variables.push_back(name);
    sem.noise.base.emplace_back(
        "U" + std::to_string(i),
        BaseNoise::normal(rng.uniform(-1.0, 1.0), rng.uniform(0.3, 1.5)));
    sem.noise.exogenous.emplace_back("E" + std::to_string(i),
                                     Expr::exo("U" + std::to_string(i)));
  }
  for (int i = 0; i < k; ++i) {
    std::vector<Expr> terms;
    if (options.offsets && rng.uniform01() < 0.5)
      terms.push_back(Expr::constant(rng.uniform(-0.5, 0.5)));
    for (int j = 0; j < i; ++j) {
      const bool forced = options.common_parent && j == 0 && i <= 2;
      if (forced || rng.uniform01() < options.edge_probability)
        terms.push_back(Expr::scaled(rng.uniform(-1.0, 1.0),
                                     Expr::var(sem.variables[j])));
    }
    terms.push_back(Expr::exo("E" + std::to_string(i + 1)));
    sem.equations.push_back(Expr::sum(std::move(terms)));
  }
  // Null-only catalog; attach_finite_catalog replaces it.
  sem.catalog.families = {InterventionFamily::null_family()};
  return sem;
}

/// Random finite catalog over the given targetable variables: the null
/// family plus up to three families of single- or two-point domains,
/// keeping the total member count at or below `max_members`.
inline void attach_finite_catalog(Sem& sem, RandomStream& rng,
                                  const std::vector<std::string>& targetable,
                                  int max_members = 12) {
  sem.catalog.families = {InterventionFamily::null_family()};
  int members = 1;
  const int families = 1 + static_cast<int>(rng.index(3));
  for (int f = 0; f < families && !targetable.empty(); ++f) {
    std::vector<std::string> pool = targetable;
    std::vector<std::string> targets;
    const int width =
        1 + static_cast<int>(rng.index(std::min<std::size_t>(2, pool.size())));
    for (int t = 0; t < width; ++t) {
      const auto pick = rng.index(pool.size());
      targets.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    std::sort(targets.begin(), targets.end());
    std::vector<ValueDomain> domains;
    int family_members = 1;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (rng.uniform01() < 0.3 && family_members * 2 + members <= max_members) {
        domains.push_back(ValueDomain::finite(
            {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}));
        family_members *= 2;
      } else {
        domains.push_back(ValueDomain::single(rng.uniform(-1.0, 1.0)));
      }
    }
    if (members + family_members > max_members) break;
    InterventionFamily family =
        make_family("f" + std::to_string(f), std::move(targets),
                    std::move(domains));
    const bool duplicate = std::any_of(
        sem.catalog.families.begin(), sem.catalog.families.end(),
        [&](const InterventionFamily& g) { return g.same_shape(family); });
    if (duplicate) continue;
    members += family_members;
    sem.catalog.families.push_back(std::move(family));
  }
}

/// Variables with no children.
inline std::vector<std::string> sinks_of(const Sem& sem) {
  const auto structure = analyze_structure(sem);
  std::set<std::size_t> with_children;
  for (const auto& [parent, child] : structure.edges)
    with_children.insert(parent);
  std::vector<std::string> sinks;
  for (std::size_t k = 0; k < sem.variables.size(); ++k) {
    if (!with_children.count(k)) sinks.push_back(sem.variables[k]);
  }
  return sinks;
}

/// Random matrix scaled to the requested operator 2-norm.
inline Eigen::MatrixXd random_contraction(RandomStream& rng, int n,
                                          double norm) {
  Eigen::MatrixXd a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = rng.normal(0.0, 1.0);
  }
  const double top =
      Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues().maxCoeff();
  return a * (norm / top);
}

/// Scaled plane rotation: contractions of this shape have equilibrium
/// equations whose undamped fixed-point iteration diverges.
inline Eigen::MatrixXd scaled_rotation(double scale, double angle) {
  Eigen::MatrixXd a(2, 2);
  a << scale * std::cos(angle), -scale * std::sin(angle),
      scale * std::sin(angle), scale * std::cos(angle);
  return a;
}

/// Random dynamical process over the transition matrix: independent noises
/// (Normal by default, Uniform otherwise) and a few random clamp families.
inline DynamicalSpec random_process(RandomStream& rng,
                                    const Eigen::MatrixXd& transition,
                                    bool gaussian) {
  DynamicalSpec spec;
  spec.transition = transition;
  const int n = static_cast<int>(transition.rows());
  for (int i = 1; i <= n; ++i) {
    spec.noise.base.emplace_back(
        "N" + std::to_string(i),
        gaussian ? BaseNoise::normal(rng.uniform(-1.0, 1.0),
                                     rng.uniform(0.3, 1.5))
                 : BaseNoise::uniform(rng.uniform(-2.0, -0.5),
                                      rng.uniform(0.5, 2.0)));
    spec.noise.exogenous.emplace_back("E" + std::to_string(i),
                                      Expr::exo("N" + std::to_string(i)));
  }
  const int families = 2;
  for (int f = 0; f < families; ++f) {
    std::vector<std::string> targets;
    std::vector<ValueDomain> domains;
    for (int i = 1; i <= n; ++i) {
      if (rng.uniform01() < 0.4) {
        targets.push_back("Y" + std::to_string(i));
        domains.push_back(ValueDomain::all_reals());
      }
    }
    if (targets.empty()) {
      targets.push_back("Y1");
      domains.push_back(ValueDomain::all_reals());
    }
    InterventionFamily family = make_family("clamp" + std::to_string(f),
                                            std::move(targets),
                                            std::move(domains));
    const bool duplicate = std::any_of(
        spec.clamp_families.begin(), spec.clamp_families.end(),
        [&](const InterventionFamily& g) { return g.same_shape(family); });
    if (!duplicate) spec.clamp_families.push_back(std::move(family));
  }
  return spec;
}

/// Two-layer micro model with equal column sums; layer sizes n, m >= 2.
inline Sem random_two_layer(RandomStream& rng, int n, int m,
                            Eigen::MatrixXd* coupling_out = nullptr) {
  Sem sem;
  std::vector<std::string> w_vars, z_vars;
  for (int i = 1; i <= n; ++i) w_vars.push_back("W" + std::to_string(i));
  for (int i = 1; i <= m; ++i) z_vars.push_back("Z" + std::to_string(i));
  sem.variables = w_vars;
  sem.variables.insert(sem.variables.end(), z_vars.begin(), z_vars.end());
  for (int i = 1; i <= n; ++i) {
    sem.noise.base.emplace_back(
        "UE" + std::to_string(i),
        BaseNoise::normal(rng.uniform(-1.0, 1.0), rng.uniform(0.3, 1.5)));
    sem.noise.exogenous.emplace_back("E" + std::to_string(i),
                                     Expr::exo("UE" + std::to_string(i)));
  }
  for (int i = 1; i <= m; ++i) {
    sem.noise.base.emplace_back(
        "UF" + std::to_string(i),
        BaseNoise::normal(rng.uniform(-1.0, 1.0), rng.uniform(0.3, 1.5)));
    sem.noise.exogenous.emplace_back("F" + std::to_string(i),
                                     Expr::exo("UF" + std::to_string(i)));
  }

  Eigen::MatrixXd coupling(m, n);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < n; ++c) coupling(r, c) = rng.uniform(-1.5, 1.5);
  }
  // Adjust every column to one common sum.
  const double target = rng.uniform(-2.0, 2.0);
  for (int c = 0; c < n; ++c) {
    const double shift = (target - coupling.col(c).sum()) / m;
    coupling.col(c).array() += shift;
  }
  if (coupling_out) *coupling_out = coupling;

  for (int i = 0; i < n; ++i)
    sem.equations.push_back(Expr::exo("E" + std::to_string(i + 1)));
  for (int r = 0; r < m; ++r) {
    std::vector<Expr> terms;
    for (int c = 0; c < n; ++c) {
      if (coupling(r, c) != 0.0)
        terms.push_back(Expr::scaled(coupling(r, c), Expr::var(w_vars[c])));
    }
    terms.push_back(Expr::exo("F" + std::to_string(r + 1)));
    sem.equations.push_back(Expr::sum(std::move(terms)));
  }

  std::vector<ValueDomain> w_domains(w_vars.size(), ValueDomain::all_reals());
  std::vector<ValueDomain> z_domains(z_vars.size(), ValueDomain::all_reals());
  std::vector<std::string> all_targets = sem.variables;
  std::vector<ValueDomain> all_domains(all_targets.size(),
                                       ValueDomain::all_reals());
  sem.catalog.families = {InterventionFamily::null_family(),
                          make_family("do-w", w_vars, w_domains),
                          make_family("do-z", z_vars, z_domains),
                          make_family("do-wz", all_targets, all_domains)};
  sem.validate();
  return sem;
}

}  // namespace semtrans::testing
