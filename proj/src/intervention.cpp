#include "semtrans/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "semtrans/errors.hpp"
#include "semtrans/rng.hpp"

namespace semtrans {

std::string Intervention::to_string() const {
  if (is_null()) return "do()";
  std::ostringstream out;
  out << "do(";
  bool first = true;
  for (const auto& [name, value] : targets) {
    if (!first) out << ", ";
    first = false;
    out << name << "=" << value;
  }
  out << ")";
  return out.str();
}

bool leq(const Intervention& i, const Intervention& j) {
  for (const auto& [name, value] : i.targets) {
    auto it = j.targets.find(name);
    if (it == j.targets.end() || it->second != value) return false;
  }
  return true;
}

bool canonical_less(const Intervention& a, const Intervention& b) {
  if (a.targets.size() != b.targets.size())
    return a.targets.size() < b.targets.size();
  return std::lexicographical_compare(
      a.targets.begin(), a.targets.end(), b.targets.begin(), b.targets.end());
}

ValueDomain ValueDomain::finite(std::vector<double> values) {
  if (values.empty())
    throw ValidationError("finite value domain must be nonempty");
  ValueDomain d;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  d.finite_values = std::move(values);
  return d;
}

ValueDomain ValueDomain::interval(double lo, double hi) {
  if (!(lo <= hi)) throw ValidationError("interval bounds out of order");
  ValueDomain d;
  d.lo = lo;
  d.hi = hi;
  return d;
}

bool ValueDomain::is_bounded() const {
  if (is_finite()) return true;
  return std::isfinite(lo) && std::isfinite(hi);
}

bool ValueDomain::contains(double v) const {
  if (is_finite()) {
    return std::binary_search(finite_values->begin(), finite_values->end(),
                              v);
  }
  return v >= lo && v <= hi;
}

InterventionFamily InterventionFamily::null_family(std::string label) {
  InterventionFamily f;
  f.label = std::move(label);
  return f;
}

bool InterventionFamily::contains(const Intervention& i) const {
  if (i.targets.size() != targets.size()) return false;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    auto it = i.targets.find(targets[k]);
    if (it == i.targets.end() || !domains[k].contains(it->second))
      return false;
  }
  return true;
}

std::optional<std::size_t> InterventionFamily::member_count() const {
  std::size_t count = 1;
  for (const auto& d : domains) {
    if (!d.is_finite()) return std::nullopt;
    count *= d.finite_values->size();
    if (count > 1'000'000) return count;  // avoid overflow, already "large"
  }
  return count;
}

void InterventionFamily::validate() const {
  if (domains.size() != targets.size())
    throw ValidationError("family '" + label +
                          "': domain count does not match target count");
  std::set<std::string> seen;
  for (const auto& t : targets) {
    if (t.empty())
      throw ValidationError("family '" + label + "': empty target name");
    if (!seen.insert(t).second)
      throw ValidationError("family '" + label + "': duplicate target '" + t +
                            "'");
  }
}

bool InterventionFamily::same_shape(const InterventionFamily& other) const {
  return targets == other.targets && domains == other.domains;
}

void InterventionCatalog::validate() const {
  bool has_null = false;
  std::set<std::string> labels;
  for (std::size_t i = 0; i < families.size(); ++i) {
    const auto& f = families[i];
    f.validate();
    if (f.label.empty())
      throw ValidationError("intervention family with empty label");
    if (!labels.insert(f.label).second)
      throw ValidationError("duplicate family label '" + f.label + "'");
    if (f.is_null_family()) has_null = true;
    for (std::size_t j = 0; j < i; ++j) {
      if (families[j].same_shape(f))
        throw ValidationError("families '" + families[j].label + "' and '" +
                              f.label + "' have identical targets and domains");
    }
  }
  if (!has_null)
    throw ValidationError(
        "intervention catalog must contain the null intervention");
}

const InterventionFamily* InterventionCatalog::find(
    const std::string& label) const {
  for (const auto& f : families) {
    if (f.label == label) return &f;
  }
  return nullptr;
}

const InterventionFamily* InterventionCatalog::family_of(
    const Intervention& i) const {
  for (const auto& f : families) {
    if (f.contains(i)) return &f;
  }
  return nullptr;
}

bool InterventionCatalog::all_finite() const {
  return std::all_of(families.begin(), families.end(), [](const auto& f) {
    return f.member_count().has_value();
  });
}

namespace {

constexpr std::size_t kEnumerationCap = 1000;

void cartesian(const std::vector<std::vector<double>>& axes,
               std::vector<double>& current,
               std::vector<std::vector<double>>& out) {
  const std::size_t k = current.size();
  if (k == axes.size()) {
    out.push_back(current);
    return;
  }
  for (double v : axes[k]) {
    current.push_back(v);
    cartesian(axes, current, out);
    current.pop_back();
  }
}

Intervention assemble(const InterventionFamily& family,
                      const std::vector<double>& values) {
  Intervention i;
  for (std::size_t k = 0; k < family.targets.size(); ++k)
    i.targets[family.targets[k]] = values[k];
  return i;
}

double random_member(const ValueDomain& d, RandomStream& rng) {
  if (d.is_finite())
    return (*d.finite_values)[rng.index(d.finite_values->size())];
  if (d.is_bounded()) return rng.uniform(d.lo, d.hi);
  if (std::isfinite(d.lo)) return d.lo + std::abs(rng.normal(0.0, 1.0));
  if (std::isfinite(d.hi)) return d.hi - std::abs(rng.normal(0.0, 1.0));
  return rng.normal(0.0, 1.0);
}

std::vector<double> grid_axis(const ValueDomain& d, int grid_points,
                              RandomStream& rng) {
  if (d.is_finite()) return *d.finite_values;
  std::vector<double> out;
  if (d.is_bounded()) {
    if (grid_points == 1) {
      out.push_back(0.5 * (d.lo + d.hi));
    } else {
      for (int g = 0; g < grid_points; ++g) {
        out.push_back(d.lo + (d.hi - d.lo) * g / (grid_points - 1));
      }
    }
  } else {
    // Unbounded axes contribute random in-domain points only.
    for (int g = 0; g < grid_points; ++g)
      out.push_back(random_member(d, rng));
  }
  return out;
}

}  // namespace

ProbeSet probe_catalog(const InterventionCatalog& catalog,
                       const ProbeConfig& config) {
  if (catalog.families.empty())
    throw ValidationError("cannot probe an empty intervention catalog");
  catalog.validate();

  ProbeSet result;
  result.exhaustive = true;
  std::vector<Probe> probes;
  probes.push_back({Intervention::null(), std::string()});
  for (const auto& f : catalog.families) {
    if (f.is_null_family()) {
      probes.front().family_label = f.label;
      break;
    }
  }

  for (std::size_t fi = 0; fi < catalog.families.size(); ++fi) {
    const auto& family = catalog.families[fi];
    if (family.is_null_family()) continue;
    RandomStream rng(derive_seed(config.seed, fi));

    std::vector<Intervention> members;
    const auto count = family.member_count();
    if (count && *count <= kEnumerationCap) {
      std::vector<std::vector<double>> axes;
      for (const auto& d : family.domains) axes.push_back(*d.finite_values);
      std::vector<std::vector<double>> tuples;
      std::vector<double> scratch;
      cartesian(axes, scratch, tuples);
      for (const auto& t : tuples) members.push_back(assemble(family, t));
    } else {
      result.exhaustive = false;
      // Grid over the axes (random stand-ins on unbounded ones), skipped
      // when the product blows past the enumeration cap.
      std::vector<std::vector<double>> axes;
      std::size_t total = 1;
      for (const auto& d : family.domains) {
        axes.push_back(grid_axis(d, config.grid_points, rng));
        total *= axes.back().size();
      }
      if (total <= kEnumerationCap) {
        std::vector<std::vector<double>> tuples;
        std::vector<double> scratch;
        cartesian(axes, scratch, tuples);
        for (const auto& t : tuples) members.push_back(assemble(family, t));
      }
      for (int r = 0; r < config.random_points; ++r) {
        std::vector<double> values;
        for (const auto& d : family.domains)
          values.push_back(random_member(d, rng));
        members.push_back(assemble(family, values));
      }
      if (members.empty()) {
        std::vector<double> values;
        for (const auto& d : family.domains)
          values.push_back(random_member(d, rng));
        members.push_back(assemble(family, values));
      }
    }

    // Dedupe within the family; identical interventions arising from
    // *different* families are kept (they are distinct catalog entries).
    std::vector<Intervention> seen;
    for (auto& m : members) {
      if (std::find(seen.begin(), seen.end(), m) != seen.end()) continue;
      seen.push_back(m);
      probes.push_back({std::move(m), family.label});
    }
  }

  std::stable_sort(probes.begin(), probes.end(),
                   [](const Probe& a, const Probe& b) {
                     if (a.intervention == b.intervention)
                       return a.family_label < b.family_label;
                     return canonical_less(a.intervention, b.intervention);
                   });
  result.probes = std::move(probes);

  for (std::size_t a = 0; a < result.probes.size(); ++a) {
    for (std::size_t b = 0; b < result.probes.size(); ++b) {
      if (a == b) continue;
      const auto& ia = result.probes[a].intervention;
      const auto& ib = result.probes[b].intervention;
      if (!(ia == ib) && leq(ia, ib)) result.comparable_pairs.emplace_back(a, b);
    }
  }
  return result;
}

}  // namespace semtrans
