#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace semtrans {

enum class ExprKind {
  kConstant,
  kVar,   // reference to a model variable
  kExo,   // reference to an exogenous id (or a base noise, in noise maps)
  kNeg,
  kSum,
  kProduct,
  kOr,   // {0,1}-valued operands, checked at evaluation time
  kAnd,
  kNot,
};

/// Affine decomposition of an expression:
///   value = constant + sum_i vars[v_i]*v_i + sum_k exos[e_k]*e_k
struct AffineForm {
  double constant = 0.0;
  std::map<std::string, double> vars;
  std::map<std::string, double> exos;
};

/// Immutable expression tree. Values are cheap to copy (shared nodes).
class Expr {
 public:
  using Lookup = std::function<double(const std::string&)>;

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double value);
  static Expr var(std::string name);
  static Expr exo(std::string name);
  static Expr neg(Expr e);
  static Expr sum(std::vector<Expr> terms);      // flattens nested sums
  static Expr product(std::vector<Expr> factors);  // flattens nested products
  static Expr logical_or(std::vector<Expr> args);
  static Expr logical_and(std::vector<Expr> args);
  static Expr logical_not(Expr e);

  /// c * e as a product, with c == 1 collapsing to e.
  static Expr scaled(double c, Expr e);

  ExprKind kind() const { return node_->kind; }
  double constant_value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  const std::vector<Expr>& children() const { return node_->children; }

  /// Evaluates the tree. Boolean connectives require exactly {0,1}-valued
  /// operands and throw ValidationError otherwise.
  double eval(const Lookup& var_value, const Lookup& exo_value) const;

  void collect_vars(std::set<std::string>& out) const;
  void collect_exos(std::set<std::string>& out) const;

  /// Replaces variable references by expressions. References without an
  /// entry in the map are left alone.
  Expr substitute_vars(const std::map<std::string, Expr>& replacements) const;

  /// Replaces exogenous references by expressions.
  Expr substitute_exos(const std::map<std::string, Expr>& replacements) const;

  /// Renames variable / exogenous references (ids without an entry are
  /// left alone).
  Expr rename(const std::map<std::string, std::string>& var_names,
              const std::map<std::string, std::string>& exo_names) const;

  /// Affine decomposition, or nullopt if the expression is not affine
  /// (products of non-constants, boolean connectives).
  std::optional<AffineForm> affine() const;

  /// Renders the expression in the document grammar; parse_expression of
  /// the result reproduces an equivalent tree.
  std::string to_string() const;

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node {
    ExprKind kind = ExprKind::kConstant;
    double value = 0.0;        // kConstant
    std::string name;          // kVar / kExo
    std::vector<Expr> children;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Node node);

  std::shared_ptr<const Node> node_;
};

/// How identifiers in an expression string are classified.
enum class IdentClass { kVar, kExo };

/// Resolves a bare identifier to a reference kind, or throws
/// ValidationError (undeclared id, variable/exogenous name collision).
using IdentResolver =
    std::function<IdentClass(const std::string& ident, std::size_t pos)>;

/// Parses the expression grammar used by model documents:
///   expr   := term (("+"|"-") term)*
///   term   := factor ("*" factor)*
///   factor := NUMBER | IDENT | "-" factor
///           | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
/// Function names: or, and, not. Errors carry the offending position.
Expr parse_expression(const std::string& text, const IdentResolver& resolve);

}  // namespace semtrans
