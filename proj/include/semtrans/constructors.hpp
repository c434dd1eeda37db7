#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

#include "semtrans/exactness.hpp"
#include "semtrans/sem.hpp"

namespace semtrans {

/// Configuration used to certify constructor outputs. Closed-form
/// comparison applies whenever the models qualify; Monte Carlo paths use a
/// reduced sample count to keep construction cheap.
CheckConfig default_certify_config();

/// A constructed (model, tau, omega) triple, shipped only after an internal
/// exactness check on a default probe set.
struct CertifiedTriple {
  Sem model;
  Transformation tau;
  InterventionMap omega;
  std::string provenance;
  /// Source families whose images coincided after dropping coordinates,
  /// recorded as "label -> surviving label".
  std::vector<std::string> collapsed_families;
  ExactnessReport certification;
};

/// Removes a downstream-closed set of variables (no member has a child
/// outside the set; the subgraph among them must be acyclic). The remaining
/// equations are untouched, tau projects onto the kept coordinates, and
/// omega drops the removed targets from every intervention family.
CertifiedTriple marginalize_childless(
    const Sem& sem, const std::set<std::string>& drop,
    const CheckConfig& config = default_certify_config());

/// Substitutes never-intervened variables of an acyclic model into their
/// children (in reverse topological order). The catalog is unchanged and
/// omega is the identity; absorbed noises stay dependent through shared
/// base noises.
CertifiedTriple marginalize_nonintervened(
    const Sem& sem, const std::set<std::string>& drop,
    const CheckConfig& config = default_certify_config());

/// Aggregates a two-layer linear model (one layer pure noise, the other
/// affine in the first) into a two-variable macro model by coordinate
/// averaging. Requires every column of the coupling matrix to share one
/// sum `a`; the macro equation gains the coefficient a/m.
CertifiedTriple aggregate_micro_macro(
    const Sem& sem, const CheckConfig& config = default_certify_config());

/// A discrete-time linear process x_{t+1} = A x_t + e with noise held
/// fixed across steps, plus the clamp interventions under study.
/// Coordinates are named Y1..Yn.
struct DynamicalSpec {
  Eigen::MatrixXd transition;
  NoiseModel noise;  // exactly one exogenous entry per coordinate
  std::vector<InterventionFamily> clamp_families;
  int horizon = 200;
  double tolerance = 1e-6;  // simulation residual / limit agreement

  std::size_t dimension() const {
    return static_cast<std::size_t>(transition.rows());
  }
  std::vector<std::string> coordinate_names() const;
  void validate() const;
};

/// Builds the model of the process equilibria: each coordinate solved for
/// itself, Y_i = sum_{j != i} A_ij Y_j / (1 - A_ii) + E_i / (1 - A_ii),
/// generally cyclic. Requires the transition map to be a contraction
/// (operator 2-norm < 1). The solver damping of the returned model is
/// chosen from the equation spectrum so that fixed-point iteration
/// converges for every catalog clamp set.
CertifiedTriple equilibrate(
    const DynamicalSpec& spec,
    const CheckConfig& config = default_certify_config());

/// The coupled system x = A x + e over the process coordinates, with the
/// spec's clamp catalog. Its interventional laws are the laws of the
/// simulated limits, which makes it the source side for checking
/// equilibrate() outputs.
Sem process_equilibrium_model(const DynamicalSpec& spec);

struct SimulationResult {
  Eigen::MatrixXd trajectory;  // (steps+1) x n, first row = initial state
  Eigen::VectorXd limit;       // final state
  double residual = 0.0;       // sup-norm of the last step
};

/// Iterates the clamped process for `steps` steps from `x0` with one fixed
/// noise draw. Clamped coordinates hold their targets at every step. The
/// final state must agree with the direct solve of the clamped linear
/// system within spec.tolerance; anything else is reported as an
/// internal-consistency failure.
SimulationResult simulate_dynamics(const DynamicalSpec& spec,
                                   const Intervention& clamp,
                                   const std::map<std::string, double>& exo_values,
                                   const Eigen::VectorXd& x0, int steps);

}  // namespace semtrans
