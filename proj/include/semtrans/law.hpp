#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "semtrans/intervention.hpp"
#include "semtrans/sem.hpp"
#include "semtrans/transformation.hpp"

namespace semtrans {

/// Closed-form carrier of one interventional distribution of a
/// linear-Gaussian model. The covariance may be singular: intervened
/// coordinates carry zero rows and columns.
struct GaussianLaw {
  std::vector<std::string> labels;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  void validate() const;
};

/// Monte Carlo carrier of an interventional distribution.
struct EmpiricalLaw {
  std::vector<std::string> labels;
  Eigen::MatrixXd samples;  // one draw per row
  std::uint64_t seed = 0;
  Intervention source;

  void validate() const;
};

using Law = std::variant<GaussianLaw, EmpiricalLaw>;

const std::vector<std::string>& law_labels(const Law& law);

/// Exact first and second moments of the intervened model. Requires an
/// affine model, an affine exogenous map, and Normal/PointMass base noises
/// (NotApplicableError otherwise); a singular intervened system raises
/// PreconditionError naming the intervention.
GaussianLaw closed_form_law(const Sem& sem, const Intervention& i);

/// Push-forward through tau. Gaussian laws require tau to have an affine
/// view (NotApplicableError otherwise); empirical laws accept any tau.
Law pushforward(const Law& law, const Transformation& tau);

struct EqualityVerdict {
  enum class Method { kClosedForm, kEnergyTest };
  Method method = Method::kClosedForm;
  bool equal = false;
  /// Closed form: sup-norm of moment differences (equal iff <= threshold).
  /// Energy test: permutation p-value (equal iff > threshold).
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct CompareConfig {
  double tol = 1e-9;      // closed-form moment tolerance (sup-norm)
  double alpha = 0.01;    // energy test level
  int permutations = 200;
  std::uint64_t seed = 0;
  /// Each side of the energy test is subsampled to at most this many rows
  /// before the pooled distance matrix is formed.
  int max_points_per_side = 1024;
};

/// Decides equality of two laws: sup-norm moment comparison when both are
/// Gaussian, a pooled-permutation energy-distance test when either side is
/// empirical (a Gaussian side is sampled first).
EqualityVerdict compare_laws(const Law& a, const Law& b,
                             const CompareConfig& config);

struct EnergyTestResult {
  double statistic = 0.0;  // (nm/(n+m)) * energy distance of the two samples
  double p_value = 1.0;
  int permutations = 0;
  int used_x = 0;  // rows per side after subsampling
  int used_y = 0;
};

/// Two-sample energy-distance permutation test (Szekely-Rizzo statistic,
/// pooled permutation null).
EnergyTestResult energy_distance_test(const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& y,
                                      int permutations, std::uint64_t seed,
                                      int max_points_per_side = 1024);

/// Draws from a (possibly singular) Gaussian law; deterministic in seed.
Eigen::MatrixXd sample_gaussian(const GaussianLaw& law, int n,
                                std::uint64_t seed);

}  // namespace semtrans
