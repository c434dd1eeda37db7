#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace semtrans {

/// A perfect intervention: a finite map from variable names to clamp
/// values. The empty map is the null intervention.
struct Intervention {
  std::map<std::string, double> targets;

  static Intervention null() { return {}; }

  bool is_null() const { return targets.empty(); }
  std::string to_string() const;

  friend bool operator==(const Intervention&, const Intervention&) = default;
};

/// Natural partial order on interventions: i <= j iff j clamps a superset
/// of i's variables to the same values. Value comparison is exact.
bool leq(const Intervention& i, const Intervention& j);

/// Canonical order used for reports and probe listings: fewer targets
/// first, then lexicographic on (name, value) pairs. The null intervention
/// sorts first.
bool canonical_less(const Intervention& a, const Intervention& b);

/// Admissible values for one coordinate of an intervention family: either a
/// finite list or an interval (infinite endpoints = unbounded).
struct ValueDomain {
  std::optional<std::vector<double>> finite_values;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static ValueDomain finite(std::vector<double> values);
  static ValueDomain interval(double lo, double hi);
  static ValueDomain all_reals() { return {}; }
  static ValueDomain single(double v) { return finite({v}); }

  bool is_finite() const { return finite_values.has_value(); }
  bool is_bounded() const;
  bool contains(double v) const;

  friend bool operator==(const ValueDomain&, const ValueDomain&) = default;
};

/// A (possibly infinite) parametric family of interventions sharing a
/// target set. The null family has an empty target list.
struct InterventionFamily {
  std::string label;
  std::vector<std::string> targets;
  std::vector<ValueDomain> domains;  // one per target

  static InterventionFamily null_family(std::string label = "null");

  bool is_null_family() const { return targets.empty(); }
  bool contains(const Intervention& i) const;

  /// Number of members if every axis is finite; nullopt otherwise.
  std::optional<std::size_t> member_count() const;

  void validate() const;

  /// Structural identity ignoring the label.
  bool same_shape(const InterventionFamily& other) const;

  friend bool operator==(const InterventionFamily&,
                         const InterventionFamily&) = default;
};

/// The intervention catalog I_X: a set of families, always containing the
/// null family. Family labels key the rules of intervention maps.
struct InterventionCatalog {
  std::vector<InterventionFamily> families;

  void validate() const;
  const InterventionFamily* find(const std::string& label) const;
  /// First family (in catalog order) containing the intervention.
  const InterventionFamily* family_of(const Intervention& i) const;
  bool all_finite() const;

  friend bool operator==(const InterventionCatalog&,
                         const InterventionCatalog&) = default;
};

/// One concrete intervention drawn from a family.
struct Probe {
  Intervention intervention;
  std::string family_label;
};

struct ProbeSet {
  std::vector<Probe> probes;  // canonical order; null intervention first
  /// Index pairs (a, b) with probes[a] < probes[b] in the intervention
  /// order and distinct values.
  std::vector<std::pair<std::size_t, std::size_t>> comparable_pairs;
  /// True when every family was enumerated exhaustively, so that probe
  /// verdicts certify the whole catalog.
  bool exhaustive = false;
};

struct ProbeConfig {
  int grid_points = 3;
  int random_points = 5;
  std::uint64_t seed = 0;
};

/// Builds a finite witness set for a catalog: exhaustive enumeration for
/// small finite families, grid plus seeded random points otherwise. The
/// null intervention is always present and every family contributes at
/// least one probe.
ProbeSet probe_catalog(const InterventionCatalog& catalog,
                       const ProbeConfig& config);

}  // namespace semtrans
