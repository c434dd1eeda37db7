#include "semtrans/exactness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "semtrans/errors.hpp"

namespace semtrans {

namespace {

struct Interval {
  double lo;
  double hi;
};

Interval axis_range(const ValueDomain& d) {
  if (d.is_finite())
    return {d.finite_values->front(), d.finite_values->back()};
  return {d.lo, d.hi};
}

/// Per-coordinate attainable interval of an affine rule over a family's
/// domain box.
Interval attainable(const OmegaRule& rule, const InterventionFamily& from,
                    Eigen::Index coordinate) {
  Interval out{rule.offset(coordinate), rule.offset(coordinate)};
  for (Eigen::Index k = 0;
       k < static_cast<Eigen::Index>(from.targets.size()); ++k) {
    const double c = rule.matrix(coordinate, k);
    if (c == 0.0) continue;
    const Interval r = axis_range(from.domains[static_cast<std::size_t>(k)]);
    const double a = c * r.lo;
    const double b = c * r.hi;
    out.lo += std::min(a, b);
    out.hi += std::max(a, b);
  }
  return out;
}

bool rule_covers_family(const OmegaRule& rule,
                        const InterventionFamily& from,
                        const InterventionFamily& to) {
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(to.targets.size());
       ++c) {
    const Interval att = attainable(rule, from, c);
    const auto& domain = to.domains[static_cast<std::size_t>(c)];
    if (domain.is_finite()) {
      for (double v : *domain.finite_values) {
        if (v < att.lo || v > att.hi) return false;
      }
    } else {
      if (domain.lo < att.lo || domain.hi > att.hi) return false;
    }
  }
  return true;
}

std::vector<Intervention> enumerate_family(const InterventionFamily& f) {
  std::vector<Intervention> out;
  std::vector<std::size_t> idx(f.targets.size(), 0);
  while (true) {
    Intervention i;
    for (std::size_t k = 0; k < f.targets.size(); ++k)
      i.targets[f.targets[k]] = (*f.domains[k].finite_values)[idx[k]];
    out.push_back(std::move(i));
    std::size_t k = 0;
    for (; k < idx.size(); ++k) {
      if (++idx[k] < f.domains[k].finite_values->size()) break;
      idx[k] = 0;
    }
    if (k == idx.size()) break;
  }
  return out;
}

constexpr std::size_t kEnumerationCap = 1000;

}  // namespace

OmegaCheck check_omega(const InterventionMap& omega,
                       const InterventionCatalog& x_catalog,
                       const InterventionCatalog& y_catalog,
                       const ProbeSet& probes) {
  omega.validate(x_catalog, y_catalog);
  OmegaCheck check;

  // Images of all probes; rule outputs must land in the declared Y-domain.
  std::vector<Intervention> images;
  images.reserve(probes.probes.size());
  for (const auto& probe : probes.probes) {
    Intervention image = omega.apply(probe.intervention, x_catalog, y_catalog,
                                     probe.family_label);
    const auto* family = y_catalog.family_of(image);
    if (!family)
      throw ValidationError("omega maps " + probe.intervention.to_string() +
                            " to " + image.to_string() +
                            ", outside every declared target family");
    if (probe.intervention.is_null()) check.omega_of_null = image;
    images.push_back(std::move(image));
  }

  // Order preservation over the comparable probe pairs.
  check.order_preserving = true;
  for (const auto& [a, b] : probes.comparable_pairs) {
    if (!leq(images[a], images[b])) {
      check.order_preserving = false;
      check.counterexample = {probes.probes[a].intervention,
                              probes.probes[b].intervention, images[a],
                              images[b]};
      break;
    }
  }

  // Surjectivity: every Y-family must be covered by rule images (finite
  // domains exhaustively, intervals by the per-coordinate affine-onto
  // argument).
  check.surjective = true;
  bool used_interval_argument = false;
  for (const auto& to : y_catalog.families) {
    std::vector<const OmegaRule*> incoming;
    for (const auto& rule : omega.rules) {
      if (rule.to_family == to.label) incoming.push_back(&rule);
    }

    bool covered = false;
    const auto to_count = to.member_count();
    if (to_count && *to_count <= kEnumerationCap) {
      std::vector<Intervention> targets = enumerate_family(to);
      std::vector<Intervention> images_seen;
      for (const auto& [from, image] : omega.explicit_pairs) {
        if (to.contains(image)) images_seen.push_back(image);
      }
      bool enumerable_rules = true;
      for (const auto* rule : incoming) {
        const auto* from = x_catalog.find(rule->from_family);
        const auto from_count = from->member_count();
        if (from_count && *from_count <= kEnumerationCap) {
          for (const auto& member : enumerate_family(*from)) {
            Intervention image =
                omega.apply(member, x_catalog, y_catalog, from->label);
            images_seen.push_back(std::move(image));
          }
        } else {
          enumerable_rules = false;
        }
      }
      covered = std::all_of(
          targets.begin(), targets.end(), [&](const Intervention& t) {
            return std::find(images_seen.begin(), images_seen.end(), t) !=
                   images_seen.end();
          });
      if (!covered && !enumerable_rules) {
        // Fall back to the interval argument for continuous sources.
        for (const auto* rule : incoming) {
          const auto* from = x_catalog.find(rule->from_family);
          if (rule_covers_family(*rule, *from, to)) {
            covered = true;
            used_interval_argument = true;
            break;
          }
        }
      }
    } else {
      for (const auto* rule : incoming) {
        const auto* from = x_catalog.find(rule->from_family);
        if (rule_covers_family(*rule, *from, to)) {
          covered = true;
          used_interval_argument = true;
          break;
        }
      }
    }
    if (!covered) {
      check.surjective = false;
      check.uncovered_family = to.label;
      break;
    }
  }
  check.surjectivity_mode =
      used_interval_argument ? "affine-interval" : "exhaustive";
  return check;
}

namespace {

/// Rethrows a library error with the offending intervention attached.
template <typename Fn>
auto with_probe_context(const Intervention& i, Fn&& fn) {
  const auto tag = [&](const std::string& what) {
    return "at probe " + i.to_string() + ": " + what;
  };
  try {
    return fn();
  } catch (const SolverError& e) {
    throw SolverError(tag(e.what()), e.residual);
  } catch (const PreconditionError& e) {
    throw PreconditionError(tag(e.what()));
  } catch (const NotApplicableError& e) {
    throw NotApplicableError(tag(e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(tag(e.what()));
  }
}

bool closed_form_eligible(const Sem& m_x, const Sem& m_y,
                          const Transformation& tau) {
  if (!tau.affine_view()) return false;
  if (!analyze_structure(m_x).linear || !m_x.noise.gaussian_moments())
    return false;
  if (!analyze_structure(m_y).linear || !m_y.noise.gaussian_moments())
    return false;
  return true;
}

EqualityVerdict compare_at(const Sem& m_x, const Sem& m_y,
                           const Transformation& tau, const Intervention& i,
                           const Intervention& image, bool closed_route,
                           const CheckConfig& config, std::uint64_t stream) {
  return with_probe_context(i, [&]() -> EqualityVerdict {
    CompareConfig compare = config.compare;
    compare.seed = derive_seed(config.compare.seed, stream);
    if (closed_route) {
      const Law lhs = pushforward(Law(closed_form_law(m_x, i)), tau);
      const Law rhs = Law(closed_form_law(m_y, image));
      return compare_laws(lhs, rhs, compare);
    }
    EmpiricalLaw x_side;
    x_side.labels = m_x.variables;
    x_side.seed = derive_seed(config.seed, 2 * stream);
    x_side.source = i;
    x_side.samples = sample(m_x, i, config.samples, x_side.seed);
    const Law lhs = pushforward(Law(std::move(x_side)), tau);

    EmpiricalLaw y_side;
    y_side.labels = m_y.variables;
    y_side.seed = derive_seed(config.seed, 2 * stream + 1);
    y_side.source = image;
    y_side.samples = sample(m_y, image, config.samples, y_side.seed);
    return compare_laws(lhs, Law(std::move(y_side)), compare);
  });
}

}  // namespace

bool ExactnessReport::all_probe_equalities_hold() const {
  return std::all_of(probe_verdicts.begin(), probe_verdicts.end(),
                     [](const ProbeVerdict& v) { return v.verdict.equal; });
}

ExactnessReport check_exact(const Sem& m_x, const Sem& m_y,
                            const Transformation& tau,
                            const InterventionMap& omega,
                            const CheckConfig& config) {
  m_x.validate();
  m_y.validate();
  tau.validate();
  if (tau.source_labels() != m_x.variables)
    throw ValidationError(
        "tau source coordinates must match the source model variables");
  if (tau.target_labels() != m_y.variables)
    throw ValidationError(
        "tau target coordinates must match the target model variables");

  ExactnessReport report;
  report.config = config;

  const ProbeSet probes = probe_catalog(m_x.catalog, config.probes);
  report.probe_certified_only = !probes.exhaustive;
  report.omega = check_omega(omega, m_x.catalog, m_y.catalog, probes);

  const bool closed = closed_form_eligible(m_x, m_y, tau);
  report.comparison = closed ? "closed-form" : "monte-carlo";

  for (std::size_t k = 0; k < probes.probes.size(); ++k) {
    const auto& probe = probes.probes[k];
    ProbeVerdict verdict;
    verdict.intervention = probe.intervention;
    verdict.family_label = probe.family_label;
    verdict.image = omega.apply(probe.intervention, m_x.catalog, m_y.catalog,
                                probe.family_label);
    verdict.verdict = compare_at(m_x, m_y, tau, probe.intervention,
                                 verdict.image, closed, config,
                                 static_cast<std::uint64_t>(k));
    report.probe_verdicts.push_back(std::move(verdict));
  }

  report.exact = report.omega.surjective && report.omega.order_preserving &&
                 report.all_probe_equalities_hold();
  return report;
}

DiagramCheck check_diagram(const Sem& m_x, const Sem& m_y,
                           const Transformation& tau,
                           const InterventionMap& omega, const Intervention& i,
                           const Intervention& j, const CheckConfig& config) {
  if (!leq(i, j))
    throw PreconditionError("check_diagram requires " + i.to_string() +
                            " <= " + j.to_string());
  const bool closed = closed_form_eligible(m_x, m_y, tau);
  DiagramCheck check;
  check.i = i;
  check.j = j;
  check.omega_i = omega.apply(i, m_x.catalog, m_y.catalog);
  check.omega_j = omega.apply(j, m_x.catalog, m_y.catalog);
  check.image_ordered = leq(check.omega_i, check.omega_j);
  check.left_equality =
      compare_at(m_x, m_y, tau, i, check.omega_i, closed, config, 0);
  check.right_equality =
      compare_at(m_x, m_y, tau, j, check.omega_j, closed, config, 1);
  check.commutes = check.image_ordered && check.left_equality.equal &&
                   check.right_equality.equal;
  return check;
}

std::pair<Transformation, InterventionMap> compose_transformations(
    const Transformation& tau_yx, const InterventionMap& omega_yx,
    const Transformation& tau_zy, const InterventionMap& omega_zy,
    const InterventionCatalog& y_catalog,
    const InterventionCatalog& z_catalog) {
  Transformation tau = compose(tau_zy, tau_yx);
  InterventionMap omega;
  for (const auto& r1 : omega_yx.rules) {
    const auto* r2 = omega_zy.rule_for(r1.to_family);
    if (!r2)
      throw ValidationError("no second-stage omega rule for family '" +
                            r1.to_family + "'");
    omega.rules.push_back({r1.from_family, r2->to_family,
                           r2->matrix * r1.matrix,
                           r2->matrix * r1.offset + r2->offset});
  }
  for (const auto& [from, mid] : omega_yx.explicit_pairs) {
    omega.explicit_pairs.emplace_back(
        from, omega_zy.apply(mid, y_catalog, z_catalog));
  }
  return {std::move(tau), std::move(omega)};
}

TransformationTriple permutation_transformation(
    const Sem& sem, const std::map<std::string, std::string>& pi) {
  sem.validate();
  if (pi.size() != sem.variables.size())
    throw ValidationError("permutation must cover every variable");
  std::set<std::string> new_names;
  for (const auto& v : sem.variables) {
    auto it = pi.find(v);
    if (it == pi.end())
      throw ValidationError("permutation is missing variable '" + v + "'");
    if (it->second.empty())
      throw ValidationError("permutation maps '" + v + "' to an empty name");
    if (!new_names.insert(it->second).second)
      throw ValidationError("permutation is not injective on '" + it->second +
                            "'");
  }
  for (const auto& name : new_names) {
    if (sem.noise.has_exo(name))
      throw ValidationError("renamed variable '" + name +
                            "' collides with an exogenous id");
    for (const auto& [b, s] : sem.noise.base) {
      if (b == name)
        throw ValidationError("renamed variable '" + name +
                              "' collides with a base noise");
    }
  }

  // Renamed model, variables listed in sorted order.
  std::vector<std::string> order(new_names.begin(), new_names.end());
  std::map<std::string, std::string> inverse;
  for (const auto& [from, to] : pi) inverse[to] = from;

  Sem renamed;
  renamed.variables = order;
  const std::map<std::string, std::string> no_exo_renames;
  for (const auto& name : order) {
    const auto k = sem.index_of(inverse.at(name));
    renamed.equations.push_back(sem.equations[k].rename(pi, no_exo_renames));
  }
  renamed.noise = sem.noise;
  renamed.solver = sem.solver;
  for (const auto& b : sem.boolean_variables)
    renamed.boolean_variables.insert(pi.at(b));
  renamed.catalog = sem.catalog;
  for (auto& family : renamed.catalog.families) {
    for (auto& t : family.targets) t = pi.at(t);
  }
  renamed.validate();

  std::vector<std::string> kept;
  kept.reserve(order.size());
  for (const auto& name : order) kept.push_back(inverse.at(name));
  Transformation tau =
      Transformation::projection(sem.variables, std::move(kept), order);

  // Families keep their labels and coordinate order, so the value
  // transform is the identity.
  InterventionMap omega = InterventionMap::identity(sem.catalog);
  return {std::move(renamed), std::move(tau), std::move(omega)};
}

}  // namespace semtrans
