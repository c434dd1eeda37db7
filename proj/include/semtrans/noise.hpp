#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "semtrans/expr.hpp"
#include "semtrans/rng.hpp"

namespace semtrans {

enum class NoiseKind { kBernoulli, kNormal, kUniform, kPointMass };

/// One independent base noise. The exogenous variables of a model are built
/// on top of these; dependence between exogenous variables is expressed by
/// letting several exogenous map entries read the same base noise.
struct BaseNoise {
  NoiseKind kind;
  double a = 0.0;  // Bernoulli: p; Normal: mean; Uniform: lower; PointMass: value
  double b = 0.0;  // Normal: variance; Uniform: upper

  static BaseNoise bernoulli(double p);
  static BaseNoise normal(double mean, double variance);
  static BaseNoise uniform(double lo, double hi);
  static BaseNoise point_mass(double value);

  double mean() const;
  double variance() const;
  bool gaussian_or_point() const {
    return kind == NoiseKind::kNormal || kind == NoiseKind::kPointMass;
  }
  double sample(RandomStream& rng) const;

  friend bool operator==(const BaseNoise&, const BaseNoise&) = default;
};

/// Affine view of the exogenous map: exo = loading * base + offset.
struct AffineNoiseView {
  Eigen::MatrixXd loading;
  Eigen::VectorXd offset;
  std::vector<std::string> exo_names;
  std::vector<std::string> base_names;
};

/// Base noises plus the exogenous map. Exogenous map expressions reference
/// base noise ids only (as Exo nodes); this is validated.
struct NoiseModel {
  std::vector<std::pair<std::string, BaseNoise>> base;       // sampling order
  std::vector<std::pair<std::string, Expr>> exogenous;

  void validate() const;

  bool has_exo(const std::string& name) const;
  const Expr* find_exo(const std::string& name) const;
  std::vector<std::string> exo_names() const;

  /// Draws every base noise (in declaration order) and evaluates the map.
  std::map<std::string, double> sample_exogenous(RandomStream& rng) const;

  /// Affine view over base noises, or nullopt if any map entry is
  /// non-affine.
  std::optional<AffineNoiseView> affine_view() const;

  /// Mean and covariance of the exogenous vector (order = exogenous
  /// declaration order) when the map is affine and every base noise is
  /// Normal or PointMass; nullopt otherwise.
  std::optional<std::pair<Eigen::VectorXd, Eigen::MatrixXd>>
  gaussian_moments() const;

  /// Keeps only the listed exogenous entries (and the base noises they
  /// reach). Order is preserved.
  NoiseModel restricted_to(const std::set<std::string>& keep_exos) const;

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

}  // namespace semtrans
