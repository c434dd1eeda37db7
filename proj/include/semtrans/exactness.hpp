#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "semtrans/law.hpp"
#include "semtrans/rng.hpp"
#include "semtrans/sem.hpp"
#include "semtrans/transformation.hpp"

namespace semtrans {

/// Surjectivity and order-preservation verdicts for an intervention map.
struct OmegaCheck {
  bool surjective = false;
  std::string uncovered_family;  // set iff surjectivity failed
  /// "exhaustive" when every coverage decision enumerated finite domains;
  /// "affine-interval" when some family needed the per-coordinate
  /// affine-onto interval argument.
  std::string surjectivity_mode;
  bool order_preserving = false;
  /// (i, j, omega(i), omega(j)) for the first comparable pair whose images
  /// are not ordered.
  std::optional<std::array<Intervention, 4>> counterexample;
  Intervention omega_of_null;  // recorded for diagnostics
};

OmegaCheck check_omega(const InterventionMap& omega,
                       const InterventionCatalog& x_catalog,
                       const InterventionCatalog& y_catalog,
                       const ProbeSet& probes);

struct ProbeVerdict {
  Intervention intervention;
  std::string family_label;
  Intervention image;
  EqualityVerdict verdict;
};

struct CheckConfig {
  ProbeConfig probes;
  int samples = 50000;  // Monte Carlo sample count per side
  CompareConfig compare;
  std::uint64_t seed = 0;

  CheckConfig& with_seed(std::uint64_t s) {
    seed = s;
    probes.seed = derive_seed(s, 7001);
    compare.seed = derive_seed(s, 7002);
    return *this;
  }
};

struct ExactnessReport {
  std::vector<ProbeVerdict> probe_verdicts;
  OmegaCheck omega;
  bool exact = false;
  /// True when some family could not be enumerated exhaustively, so probe
  /// equalities certify "no counterexample found on probes" rather than
  /// the full catalog.
  bool probe_certified_only = false;
  std::string comparison;  // "closed-form" or "monte-carlo"
  CheckConfig config;

  bool all_probe_equalities_hold() const;
};

/// Decides whether m_y is an exact tau-transformation of m_x, witnessed by
/// omega: equality of the pushed-forward law of X and the law of Y at every
/// probe intervention, plus surjectivity and order preservation of omega.
ExactnessReport check_exact(const Sem& m_x, const Sem& m_y,
                            const Transformation& tau,
                            const InterventionMap& omega,
                            const CheckConfig& config);

/// Commuting-diagram check for one comparable pair i <= j: the images must
/// be ordered and the two square equalities must hold.
struct DiagramCheck {
  Intervention i, j, omega_i, omega_j;
  bool image_ordered = false;
  EqualityVerdict left_equality;   // laws at i
  EqualityVerdict right_equality;  // laws at j
  bool commutes = false;
};

DiagramCheck check_diagram(const Sem& m_x, const Sem& m_y,
                           const Transformation& tau,
                           const InterventionMap& omega, const Intervention& i,
                           const Intervention& j, const CheckConfig& config);

/// A (model, tau, omega) witness triple.
struct TransformationTriple {
  Sem model;
  Transformation tau;
  InterventionMap omega;
};

/// Composes two transformation stages: tau by substitution (matrix product
/// when both sides are affine), omega rule-wise. The intermediate and final
/// catalogs are needed to resolve explicit pairs.
std::pair<Transformation, InterventionMap> compose_transformations(
    const Transformation& tau_yx, const InterventionMap& omega_yx,
    const Transformation& tau_zy, const InterventionMap& omega_zy,
    const InterventionCatalog& y_catalog,
    const InterventionCatalog& z_catalog);

/// Relabels the variables of a model along a bijection pi (old name to new
/// name). The returned model lists the renamed variables in sorted order,
/// tau permutes coordinates accordingly, and omega renames targets.
TransformationTriple permutation_transformation(
    const Sem& sem, const std::map<std::string, std::string>& pi);

}  // namespace semtrans
