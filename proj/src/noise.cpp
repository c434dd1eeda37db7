#include "semtrans/noise.hpp"

#include <algorithm>

#include "semtrans/errors.hpp"

namespace semtrans {

BaseNoise BaseNoise::bernoulli(double p) {
  if (p < 0.0 || p > 1.0)
    throw ValidationError("bernoulli parameter must lie in [0,1]");
  return {NoiseKind::kBernoulli, p, 0.0};
}

BaseNoise BaseNoise::normal(double mean, double variance) {
  if (variance < 0.0) throw ValidationError("normal variance must be >= 0");
  return {NoiseKind::kNormal, mean, variance};
}

BaseNoise BaseNoise::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw ValidationError("uniform bounds out of order");
  return {NoiseKind::kUniform, lo, hi};
}

BaseNoise BaseNoise::point_mass(double value) {
  return {NoiseKind::kPointMass, value, 0.0};
}

double BaseNoise::mean() const {
  switch (kind) {
    case NoiseKind::kBernoulli:
      return a;
    case NoiseKind::kNormal:
      return a;
    case NoiseKind::kUniform:
      return 0.5 * (a + b);
    case NoiseKind::kPointMass:
      return a;
  }
  throw InternalConsistencyError("unhandled noise kind");
}

double BaseNoise::variance() const {
  switch (kind) {
    case NoiseKind::kBernoulli:
      return a * (1.0 - a);
    case NoiseKind::kNormal:
      return b;
    case NoiseKind::kUniform:
      return (b - a) * (b - a) / 12.0;
    case NoiseKind::kPointMass:
      return 0.0;
  }
  throw InternalConsistencyError("unhandled noise kind");
}

double BaseNoise::sample(RandomStream& rng) const {
  switch (kind) {
    case NoiseKind::kBernoulli:
      return rng.bernoulli(a);
    case NoiseKind::kNormal:
      return rng.normal(a, std::sqrt(b));
    case NoiseKind::kUniform:
      return rng.uniform(a, b);
    case NoiseKind::kPointMass:
      return a;
  }
  throw InternalConsistencyError("unhandled noise kind");
}

void NoiseModel::validate() const {
  std::set<std::string> base_names;
  for (const auto& [name, spec] : base) {
    if (name.empty()) throw ValidationError("base noise with empty name");
    if (!base_names.insert(name).second)
      throw ValidationError("duplicate base noise '" + name + "'");
  }
  std::set<std::string> exo_seen;
  for (const auto& [name, expr] : exogenous) {
    if (name.empty()) throw ValidationError("exogenous id with empty name");
    if (!exo_seen.insert(name).second)
      throw ValidationError("duplicate exogenous id '" + name + "'");
    if (base_names.count(name))
      throw ValidationError("exogenous id '" + name +
                            "' collides with a base noise name");
    std::set<std::string> vars, refs;
    expr.collect_vars(vars);
    if (!vars.empty())
      throw ValidationError("exogenous map for '" + name +
                            "' references model variable '" + *vars.begin() +
                            "' (base noises only)");
    expr.collect_exos(refs);
    for (const auto& r : refs) {
      if (!base_names.count(r))
        throw ValidationError("exogenous map for '" + name +
                              "' references undeclared base noise '" + r +
                              "'");
    }
  }
}

bool NoiseModel::has_exo(const std::string& name) const {
  return find_exo(name) != nullptr;
}

const Expr* NoiseModel::find_exo(const std::string& name) const {
  for (const auto& [n, e] : exogenous) {
    if (n == name) return &e;
  }
  return nullptr;
}

std::vector<std::string> NoiseModel::exo_names() const {
  std::vector<std::string> out;
  out.reserve(exogenous.size());
  for (const auto& [n, e] : exogenous) out.push_back(n);
  return out;
}

std::map<std::string, double> NoiseModel::sample_exogenous(
    RandomStream& rng) const {
  std::map<std::string, double> base_values;
  for (const auto& [name, spec] : base) base_values[name] = spec.sample(rng);
  const auto base_lookup = [&](const std::string& n) {
    return base_values.at(n);
  };
  const auto no_vars = [](const std::string& n) -> double {
    throw ValidationError("variable reference '" + n + "' in noise map");
  };
  std::map<std::string, double> out;
  for (const auto& [name, expr] : exogenous)
    out[name] = expr.eval(no_vars, base_lookup);
  return out;
}

std::optional<AffineNoiseView> NoiseModel::affine_view() const {
  AffineNoiseView view;
  view.exo_names = exo_names();
  for (const auto& [n, s] : base) view.base_names.push_back(n);
  const auto n_exo = static_cast<Eigen::Index>(exogenous.size());
  const auto n_base = static_cast<Eigen::Index>(base.size());
  view.loading = Eigen::MatrixXd::Zero(n_exo, n_base);
  view.offset = Eigen::VectorXd::Zero(n_exo);
  std::map<std::string, Eigen::Index> base_index;
  for (Eigen::Index j = 0; j < n_base; ++j) base_index[view.base_names[j]] = j;
  for (Eigen::Index i = 0; i < n_exo; ++i) {
    auto form = exogenous[static_cast<std::size_t>(i)].second.affine();
    if (!form) return std::nullopt;
    view.offset(i) = form->constant;
    for (const auto& [name, coef] : form->exos)
      view.loading(i, base_index.at(name)) = coef;
  }
  return view;
}

std::optional<std::pair<Eigen::VectorXd, Eigen::MatrixXd>>
NoiseModel::gaussian_moments() const {
  for (const auto& [n, s] : base) {
    if (!s.gaussian_or_point()) return std::nullopt;
  }
  auto view = affine_view();
  if (!view) return std::nullopt;
  const auto n_base = static_cast<Eigen::Index>(base.size());
  Eigen::VectorXd base_mean(n_base);
  Eigen::VectorXd base_var(n_base);
  for (Eigen::Index j = 0; j < n_base; ++j) {
    base_mean(j) = base[static_cast<std::size_t>(j)].second.mean();
    base_var(j) = base[static_cast<std::size_t>(j)].second.variance();
  }
  Eigen::VectorXd mean = view->loading * base_mean + view->offset;
  Eigen::MatrixXd cov =
      view->loading * base_var.asDiagonal() * view->loading.transpose();
  return std::make_pair(std::move(mean), std::move(cov));
}

NoiseModel NoiseModel::restricted_to(
    const std::set<std::string>& keep_exos) const {
  NoiseModel out;
  std::set<std::string> needed_base;
  for (const auto& [name, expr] : exogenous) {
    if (keep_exos.count(name)) {
      out.exogenous.emplace_back(name, expr);
      expr.collect_exos(needed_base);
    }
  }
  for (const auto& [name, spec] : base) {
    if (needed_base.count(name)) out.base.emplace_back(name, spec);
  }
  return out;
}

}  // namespace semtrans
