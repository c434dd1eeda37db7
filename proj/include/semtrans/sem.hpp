#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "semtrans/expr.hpp"
#include "semtrans/intervention.hpp"
#include "semtrans/noise.hpp"

namespace semtrans {

struct SolverConfig {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  /// Damping d in x <- (1-d)*x + d*f(x); 0 means pure iteration x <- f(x).
  double damping = 0.0;

  double effective_damping() const { return damping == 0.0 ? 1.0 : damping; }

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

/// A structural equation model: one equation per variable, a noise model,
/// and a catalog of admissible interventions. Values are immutable after
/// construction; every operation below is a pure function, so concurrent
/// use needs no synchronisation.
struct Sem {
  std::vector<std::string> variables;
  std::vector<Expr> equations;  // parallel to variables
  NoiseModel noise;
  InterventionCatalog catalog;
  SolverConfig solver;
  /// Variables declared {0,1}-valued. Intervention values on them are
  /// checked against that domain.
  std::set<std::string> boolean_variables;

  void validate() const;
  std::size_t index_of(const std::string& name) const;
  bool has_variable(const std::string& name) const;

  friend bool operator==(const Sem&, const Sem&) = default;
};

/// Affine view of a model: x = coefficients*x + offsets + exo_loading*e,
/// with e the exogenous vector in noise declaration order.
struct LinearSemView {
  Eigen::MatrixXd coefficients;
  Eigen::VectorXd offsets;
  Eigen::MatrixXd exo_loading;
  std::vector<std::string> exo_names;

  /// Rebuilds structural equations equivalent to the originals.
  std::vector<Expr> rebuild_equations(
      const std::vector<std::string>& variables) const;
};

struct StructureReport {
  /// (parent, child) index pairs: variable `parent` occurs in the equation
  /// of variable `child`.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  bool acyclic = false;
  std::vector<std::size_t> topological_order;  // filled iff acyclic
  std::optional<LinearSemView> linear;
};

StructureReport analyze_structure(const Sem& sem);

/// Replaces the targeted equations by constants. The catalog of the result
/// is the sub-poset of interventions above `i` (families incompatible with
/// `i` drop out, matching coordinates are pinned), plus the null family.
Sem apply_intervention(const Sem& sem, const Intervention& i);

/// Solves the intervened structural equations for one exogenous draw.
/// Acyclic systems are evaluated exactly in topological order; cyclic ones
/// by (damped) fixed-point iteration from `initial` (default all-zeros).
/// For cyclic systems with a linear view, iteration is only attempted when
/// the iteration map is certifiably a contraction (spectral radius < 1);
/// nonlinear cyclic systems are solved best-effort.
Eigen::VectorXd solve_given_noise(
    const Sem& sem, const Intervention& i,
    const std::map<std::string, double>& exo_values,
    const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// n i.i.d. draws (rows) under an intervention. Identical
/// (model, intervention, n, seed) produce bit-identical matrices.
Eigen::MatrixXd sample(const Sem& sem, const Intervention& i, int n,
                       std::uint64_t seed);

namespace detail {

/// Pre-resolved solve plan for one (model, intervention) pair, so that
/// repeated draws skip structure analysis. Used by sample() and the law
/// machinery.
class PreparedSolve {
 public:
  PreparedSolve(const Sem& sem, const Intervention& i);

  Eigen::VectorXd solve(const std::map<std::string, double>& exo_values,
                        const std::optional<Eigen::VectorXd>& initial =
                            std::nullopt) const;

 private:
  Eigen::VectorXd iterate(const Eigen::VectorXd& start,
                          const std::map<std::string, double>& exo_values)
      const;
  double equation_value(std::size_t k, const Eigen::VectorXd& x,
                        const std::map<std::string, double>& exo_values)
      const;

  const Sem& sem_;
  std::vector<Expr> equations_;          // with clamps applied
  std::vector<bool> clamped_;
  std::vector<double> clamp_values_;
  bool acyclic_ = false;
  std::vector<std::size_t> topo_;
  std::optional<LinearSemView> linear_;  // of the clamped system
  std::map<std::string, std::size_t> var_index_;
};

}  // namespace detail

}  // namespace semtrans
