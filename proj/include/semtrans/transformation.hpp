#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semtrans/expr.hpp"
#include "semtrans/intervention.hpp"

namespace semtrans {

/// A map tau from the source variable space to the target variable space:
/// a coordinate projection, an affine map, or a general expression vector
/// over the source coordinates.
class Transformation {
 public:
  enum class Kind { kProjection, kAffine, kExpressions };

  static Transformation projection(std::vector<std::string> source_labels,
                                   std::vector<std::string> kept,
                                   std::vector<std::string> target_labels = {});
  static Transformation affine(std::vector<std::string> source_labels,
                               std::vector<std::string> target_labels,
                               Eigen::MatrixXd matrix, Eigen::VectorXd offset);
  static Transformation expressions(std::vector<std::string> source_labels,
                                    std::vector<std::string> target_labels,
                                    std::vector<Expr> outputs);
  static Transformation identity(std::vector<std::string> labels);

  Kind kind() const { return kind_; }
  const std::vector<std::string>& source_labels() const { return source_; }
  const std::vector<std::string>& target_labels() const { return target_; }
  std::size_t source_arity() const { return source_.size(); }
  std::size_t target_arity() const { return target_.size(); }
  const std::vector<std::string>& projected_coordinates() const;
  const std::vector<Expr>& output_expressions() const;

  /// (matrix, offset) when the map is (expressible as) affine.
  std::optional<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> affine_view()
      const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;

  void validate() const;

 private:
  Kind kind_ = Kind::kProjection;
  std::vector<std::string> source_;
  std::vector<std::string> target_;
  std::vector<std::string> kept_;   // kProjection
  std::vector<Expr> outputs_;       // kExpressions
  Eigen::MatrixXd matrix_;          // kAffine
  Eigen::VectorXd offset_;          // kAffine
};

/// tau_outer composed after tau_inner (matrix product when both are affine,
/// expression substitution otherwise).
Transformation compose(const Transformation& outer,
                       const Transformation& inner);

/// One rule of an intervention map: interventions of the X-family `from`
/// map to the Y-family `to`, with values transformed affinely
/// (y = matrix*x + offset, coordinates in each family's target order).
struct OmegaRule {
  std::string from_family;
  std::string to_family;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;
};

/// The map omega: I_X -> I_Y, given as one rule per X-family plus optional
/// explicit pairs (looked up first) for finite catalogs.
class InterventionMap {
 public:
  std::vector<OmegaRule> rules;
  std::vector<std::pair<Intervention, Intervention>> explicit_pairs;

  void validate(const InterventionCatalog& x_catalog,
                const InterventionCatalog& y_catalog) const;

  const OmegaRule* rule_for(const std::string& family_label) const;

  /// Image of a concrete intervention. The source family is resolved
  /// through the X-catalog (first containing family) unless a label is
  /// supplied; the Y-catalog names the image coordinates.
  Intervention apply(const Intervention& i,
                     const InterventionCatalog& x_catalog,
                     const InterventionCatalog& y_catalog,
                     const std::string& family_label = std::string()) const;

  static InterventionMap identity(const InterventionCatalog& catalog);
};

}  // namespace semtrans
