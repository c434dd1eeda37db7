#include "semtrans/transformation.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "semtrans/errors.hpp"

namespace semtrans {

Transformation Transformation::projection(
    std::vector<std::string> source_labels, std::vector<std::string> kept,
    std::vector<std::string> target_labels) {
  Transformation t;
  t.kind_ = Kind::kProjection;
  t.source_ = std::move(source_labels);
  t.kept_ = std::move(kept);
  t.target_ = target_labels.empty() ? t.kept_ : std::move(target_labels);
  t.validate();
  return t;
}

Transformation Transformation::affine(std::vector<std::string> source_labels,
                                      std::vector<std::string> target_labels,
                                      Eigen::MatrixXd matrix,
                                      Eigen::VectorXd offset) {
  Transformation t;
  t.kind_ = Kind::kAffine;
  t.source_ = std::move(source_labels);
  t.target_ = std::move(target_labels);
  t.matrix_ = std::move(matrix);
  t.offset_ = std::move(offset);
  t.validate();
  return t;
}

Transformation Transformation::expressions(
    std::vector<std::string> source_labels,
    std::vector<std::string> target_labels, std::vector<Expr> outputs) {
  Transformation t;
  t.kind_ = Kind::kExpressions;
  t.source_ = std::move(source_labels);
  t.target_ = std::move(target_labels);
  t.outputs_ = std::move(outputs);
  t.validate();
  return t;
}

Transformation Transformation::identity(std::vector<std::string> labels) {
  auto kept = labels;
  return projection(std::move(labels), std::move(kept));
}

const std::vector<std::string>& Transformation::projected_coordinates()
    const {
  if (kind_ != Kind::kProjection)
    throw ValidationError("not a projection transformation");
  return kept_;
}

const std::vector<Expr>& Transformation::output_expressions() const {
  if (kind_ != Kind::kExpressions)
    throw ValidationError("not an expression transformation");
  return outputs_;
}

void Transformation::validate() const {
  std::set<std::string> source_set(source_.begin(), source_.end());
  if (source_set.size() != source_.size())
    throw ValidationError("transformation source labels are not unique");
  switch (kind_) {
    case Kind::kProjection: {
      if (kept_.size() != target_.size())
        throw ValidationError("projection arity mismatch");
      for (const auto& k : kept_) {
        if (!source_set.count(k))
          throw ValidationError("projection keeps unknown coordinate '" + k +
                                "'");
      }
      break;
    }
    case Kind::kAffine: {
      if (matrix_.rows() != static_cast<Eigen::Index>(target_.size()) ||
          matrix_.cols() != static_cast<Eigen::Index>(source_.size()) ||
          offset_.size() != matrix_.rows())
        throw ValidationError("affine transformation shape mismatch");
      break;
    }
    case Kind::kExpressions: {
      if (outputs_.size() != target_.size())
        throw ValidationError(
            "expression transformation output arity mismatch");
      for (std::size_t k = 0; k < outputs_.size(); ++k) {
        std::set<std::string> vars, exos;
        outputs_[k].collect_vars(vars);
        outputs_[k].collect_exos(exos);
        if (!exos.empty())
          throw ValidationError("transformation output '" + target_[k] +
                                "' references exogenous id '" +
                                *exos.begin() + "'");
        for (const auto& v : vars) {
          if (!source_set.count(v))
            throw ValidationError("transformation output '" + target_[k] +
                                  "' references unknown coordinate '" + v +
                                  "'");
        }
      }
      break;
    }
  }
}

std::optional<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>
Transformation::affine_view() const {
  const auto rows = static_cast<Eigen::Index>(target_.size());
  const auto cols = static_cast<Eigen::Index>(source_.size());
  switch (kind_) {
    case Kind::kAffine:
      return std::make_pair(matrix_, offset_);
    case Kind::kProjection: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
      for (std::size_t r = 0; r < kept_.size(); ++r) {
        const auto it = std::find(source_.begin(), source_.end(), kept_[r]);
        m(static_cast<Eigen::Index>(r),
          static_cast<Eigen::Index>(it - source_.begin())) = 1.0;
      }
      return std::make_pair(std::move(m), Eigen::VectorXd::Zero(rows));
    }
    case Kind::kExpressions: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
      Eigen::VectorXd c = Eigen::VectorXd::Zero(rows);
      std::map<std::string, Eigen::Index> index;
      for (Eigen::Index k = 0; k < cols; ++k)
        index[source_[static_cast<std::size_t>(k)]] = k;
      for (Eigen::Index r = 0; r < rows; ++r) {
        auto form = outputs_[static_cast<std::size_t>(r)].affine();
        if (!form) return std::nullopt;
        c(r) = form->constant;
        for (const auto& [name, coef] : form->vars)
          m(r, index.at(name)) = coef;
      }
      return std::make_pair(std::move(m), std::move(c));
    }
  }
  return std::nullopt;
}

Eigen::VectorXd Transformation::apply(const Eigen::VectorXd& x) const {
  if (x.size() != static_cast<Eigen::Index>(source_.size()))
    throw ValidationError("transformation input has wrong dimension");
  if (kind_ == Kind::kExpressions) {
    std::map<std::string, double> values;
    for (std::size_t k = 0; k < source_.size(); ++k)
      values[source_[k]] = x(static_cast<Eigen::Index>(k));
    Eigen::VectorXd y(static_cast<Eigen::Index>(target_.size()));
    const auto var_lookup = [&](const std::string& n) {
      return values.at(n);
    };
    const auto exo_lookup = [](const std::string& n) -> double {
      throw ValidationError("exogenous reference '" + n +
                            "' in transformation");
    };
    for (std::size_t k = 0; k < outputs_.size(); ++k)
      y(static_cast<Eigen::Index>(k)) = outputs_[k].eval(var_lookup,
                                                         exo_lookup);
    return y;
  }
  auto view = affine_view();
  return view->first * x + view->second;
}

Eigen::MatrixXd Transformation::apply_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != static_cast<Eigen::Index>(source_.size()))
    throw ValidationError("transformation input has wrong dimension");
  if (auto view = affine_view()) {
    return (rows * view->first.transpose()).rowwise() +
           view->second.transpose();
  }
  Eigen::MatrixXd out(rows.rows(), static_cast<Eigen::Index>(target_.size()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    out.row(r) = apply(rows.row(r).transpose()).transpose();
  return out;
}

Transformation compose(const Transformation& outer,
                       const Transformation& inner) {
  if (outer.source_arity() != inner.target_arity())
    throw ValidationError(
        "transformation composition arity mismatch: inner target arity " +
        std::to_string(inner.target_arity()) + ", outer source arity " +
        std::to_string(outer.source_arity()));
  // Two projections compose to a projection.
  if (outer.kind() == Transformation::Kind::kProjection &&
      inner.kind() == Transformation::Kind::kProjection) {
    // Outer keeps coordinates by the names inner assigned to them; map back
    // to the inner source coordinate.
    std::vector<std::string> kept;
    for (const auto& k : outer.projected_coordinates()) {
      const auto& inner_targets = inner.target_labels();
      const auto it =
          std::find(inner_targets.begin(), inner_targets.end(), k);
      kept.push_back(inner.projected_coordinates()[static_cast<std::size_t>(
          it - inner_targets.begin())]);
    }
    return Transformation::projection(inner.source_labels(), std::move(kept),
                                      outer.target_labels());
  }
  const auto outer_view = outer.affine_view();
  const auto inner_view = inner.affine_view();
  if (outer_view && inner_view) {
    return Transformation::affine(
        inner.source_labels(), outer.target_labels(),
        outer_view->first * inner_view->first,
        outer_view->first * inner_view->second + outer_view->second);
  }
  // General case: substitute the inner outputs into the outer expressions.
  std::map<std::string, Expr> replacements;
  for (std::size_t k = 0; k < inner.target_labels().size(); ++k) {
    Expr output;
    switch (inner.kind()) {
      case Transformation::Kind::kProjection:
        output = Expr::var(inner.projected_coordinates()[k]);
        break;
      case Transformation::Kind::kExpressions:
        output = inner.output_expressions()[k];
        break;
      case Transformation::Kind::kAffine: {
        auto view = *inner.affine_view();
        std::vector<Expr> terms;
        if (view.second(static_cast<Eigen::Index>(k)) != 0.0)
          terms.push_back(
              Expr::constant(view.second(static_cast<Eigen::Index>(k))));
        for (std::size_t j = 0; j < inner.source_labels().size(); ++j) {
          const double c = view.first(static_cast<Eigen::Index>(k),
                                      static_cast<Eigen::Index>(j));
          if (c != 0.0)
            terms.push_back(Expr::scaled(c, Expr::var(inner.source_labels()[j])));
        }
        output = Expr::sum(std::move(terms));
        break;
      }
    }
    replacements.emplace(inner.target_labels()[k], std::move(output));
  }
  std::vector<Expr> outputs;
  for (std::size_t k = 0; k < outer.target_labels().size(); ++k) {
    Expr e;
    switch (outer.kind()) {
      case Transformation::Kind::kProjection:
        e = Expr::var(outer.projected_coordinates()[k]);
        break;
      case Transformation::Kind::kExpressions:
        e = outer.output_expressions()[k];
        break;
      case Transformation::Kind::kAffine: {
        auto view = *outer.affine_view();
        std::vector<Expr> terms;
        if (view.second(static_cast<Eigen::Index>(k)) != 0.0)
          terms.push_back(
              Expr::constant(view.second(static_cast<Eigen::Index>(k))));
        for (std::size_t j = 0; j < outer.source_labels().size(); ++j) {
          const double c = view.first(static_cast<Eigen::Index>(k),
                                      static_cast<Eigen::Index>(j));
          if (c != 0.0)
            terms.push_back(Expr::scaled(c, Expr::var(outer.source_labels()[j])));
        }
        e = Expr::sum(std::move(terms));
        break;
      }
    }
    outputs.push_back(e.substitute_vars(replacements));
  }
  return Transformation::expressions(inner.source_labels(),
                                     outer.target_labels(),
                                     std::move(outputs));
}

void InterventionMap::validate(const InterventionCatalog& x_catalog,
                               const InterventionCatalog& y_catalog) const {
  std::set<std::string> covered;
  for (const auto& rule : rules) {
    const auto* from = x_catalog.find(rule.from_family);
    if (!from)
      throw ValidationError("omega rule refers to unknown source family '" +
                            rule.from_family + "'");
    const auto* to = y_catalog.find(rule.to_family);
    if (!to)
      throw ValidationError("omega rule refers to unknown target family '" +
                            rule.to_family + "'");
    if (!covered.insert(rule.from_family).second)
      throw ValidationError("source family '" + rule.from_family +
                            "' has more than one omega rule");
    if (rule.matrix.rows() != static_cast<Eigen::Index>(to->targets.size()) ||
        rule.matrix.cols() !=
            static_cast<Eigen::Index>(from->targets.size()) ||
        rule.offset.size() != rule.matrix.rows())
      throw ValidationError("omega rule '" + rule.from_family + "' -> '" +
                            rule.to_family + "' has mismatched shape");
  }
  for (const auto& f : x_catalog.families) {
    if (!covered.count(f.label))
      throw ValidationError("source family '" + f.label +
                            "' has no omega rule");
  }
}

const OmegaRule* InterventionMap::rule_for(
    const std::string& family_label) const {
  for (const auto& r : rules) {
    if (r.from_family == family_label) return &r;
  }
  return nullptr;
}

Intervention InterventionMap::apply(const Intervention& i,
                                    const InterventionCatalog& x_catalog,
                                    const InterventionCatalog& y_catalog,
                                    const std::string& family_label) const {
  for (const auto& [from, to] : explicit_pairs) {
    if (from == i) return to;
  }
  const InterventionFamily* family = nullptr;
  if (!family_label.empty()) {
    family = x_catalog.find(family_label);
    if (!family)
      throw ValidationError("unknown intervention family '" + family_label +
                            "'");
  } else {
    family = x_catalog.family_of(i);
    if (!family)
      throw ValidationError("intervention " + i.to_string() +
                            " belongs to no catalog family");
  }
  const auto* rule = rule_for(family->label);
  if (!rule)
    throw ValidationError("no omega rule for family '" + family->label + "'");
  const auto* to_family = y_catalog.find(rule->to_family);
  if (!to_family)
    throw ValidationError("omega rule targets unknown family '" +
                          rule->to_family + "'");
  Eigen::VectorXd values(static_cast<Eigen::Index>(family->targets.size()));
  for (std::size_t k = 0; k < family->targets.size(); ++k) {
    auto it = i.targets.find(family->targets[k]);
    if (it == i.targets.end())
      throw ValidationError("intervention " + i.to_string() +
                            " is not a member of family '" + family->label +
                            "'");
    values(static_cast<Eigen::Index>(k)) = it->second;
  }
  const Eigen::VectorXd image = rule->matrix * values + rule->offset;
  Intervention out;
  for (std::size_t k = 0; k < to_family->targets.size(); ++k)
    out.targets[to_family->targets[k]] = image(static_cast<Eigen::Index>(k));
  return out;
}

InterventionMap InterventionMap::identity(const InterventionCatalog& catalog) {
  InterventionMap omega;
  for (const auto& f : catalog.families) {
    const auto n = static_cast<Eigen::Index>(f.targets.size());
    omega.rules.push_back({f.label, f.label,
                           Eigen::MatrixXd::Identity(n, n),
                           Eigen::VectorXd::Zero(n)});
  }
  return omega;
}

}  // namespace semtrans
