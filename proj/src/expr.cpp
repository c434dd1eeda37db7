#include "semtrans/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "semtrans/errors.hpp"

namespace semtrans {

Expr Expr::make(Node node) {
  return Expr(std::make_shared<const Node>(std::move(node)));
}

Expr Expr::constant(double value) {
  Node node;
  node.kind = ExprKind::kConstant;
  node.value = value;
  return make(std::move(node));
}

Expr Expr::var(std::string name) {
  Node node;
  node.kind = ExprKind::kVar;
  node.name = std::move(name);
  return make(std::move(node));
}

Expr Expr::exo(std::string name) {
  Node node;
  node.kind = ExprKind::kExo;
  node.name = std::move(name);
  return make(std::move(node));
}

Expr Expr::neg(Expr e) {
  Node node;
  node.kind = ExprKind::kNeg;
  node.children = {std::move(e)};
  return make(std::move(node));
}

static std::vector<Expr> flatten(ExprKind kind, std::vector<Expr> items) {
  std::vector<Expr> out;
  out.reserve(items.size());
  for (auto& item : items) {
    if (item.kind() == kind) {
      for (const auto& child : item.children()) out.push_back(child);
    } else {
      out.push_back(std::move(item));
    }
  }
  return out;
}

Expr Expr::sum(std::vector<Expr> terms) {
  if (terms.empty()) return constant(0.0);
  if (terms.size() == 1) return terms.front();
  Node node;
  node.kind = ExprKind::kSum;
  node.children = flatten(ExprKind::kSum, std::move(terms));
  return make(std::move(node));
}

Expr Expr::product(std::vector<Expr> factors) {
  if (factors.empty()) return constant(1.0);
  if (factors.size() == 1) return factors.front();
  Node node;
  node.kind = ExprKind::kProduct;
  node.children = flatten(ExprKind::kProduct, std::move(factors));
  return make(std::move(node));
}

Expr Expr::logical_or(std::vector<Expr> args) {
  if (args.empty()) throw ValidationError("or() needs at least one operand");
  Node node;
  node.kind = ExprKind::kOr;
  node.children = std::move(args);
  return make(std::move(node));
}

Expr Expr::logical_and(std::vector<Expr> args) {
  if (args.empty()) throw ValidationError("and() needs at least one operand");
  Node node;
  node.kind = ExprKind::kAnd;
  node.children = std::move(args);
  return make(std::move(node));
}

Expr Expr::logical_not(Expr e) {
  Node node;
  node.kind = ExprKind::kNot;
  node.children = {std::move(e)};
  return make(std::move(node));
}

Expr Expr::scaled(double c, Expr e) {
  if (c == 1.0) return e;
  return product({constant(c), std::move(e)});
}

static double require_bool(double x, const char* op) {
  if (x != 0.0 && x != 1.0) {
    throw ValidationError(std::string(op) +
                          " applied to a non-{0,1} operand: value " +
                          std::to_string(x));
  }
  return x;
}

double Expr::eval(const Lookup& var_value, const Lookup& exo_value) const {
  switch (kind()) {
    case ExprKind::kConstant:
      return node_->value;
    case ExprKind::kVar:
      return var_value(node_->name);
    case ExprKind::kExo:
      return exo_value(node_->name);
    case ExprKind::kNeg:
      return -children()[0].eval(var_value, exo_value);
    case ExprKind::kSum: {
      double acc = 0.0;
      for (const auto& c : children()) acc += c.eval(var_value, exo_value);
      return acc;
    }
    case ExprKind::kProduct: {
      double acc = 1.0;
      for (const auto& c : children()) acc *= c.eval(var_value, exo_value);
      return acc;
    }
    case ExprKind::kOr: {
      double acc = 0.0;
      for (const auto& c : children()) {
        if (require_bool(c.eval(var_value, exo_value), "or") == 1.0)
          acc = 1.0;
      }
      return acc;
    }
    case ExprKind::kAnd: {
      double acc = 1.0;
      for (const auto& c : children()) {
        if (require_bool(c.eval(var_value, exo_value), "and") == 0.0)
          acc = 0.0;
      }
      return acc;
    }
    case ExprKind::kNot:
      return 1.0 - require_bool(children()[0].eval(var_value, exo_value),
                                "not");
  }
  throw InternalConsistencyError("unhandled expression kind");
}

void Expr::collect_vars(std::set<std::string>& out) const {
  if (kind() == ExprKind::kVar) out.insert(node_->name);
  for (const auto& c : children()) c.collect_vars(out);
}

void Expr::collect_exos(std::set<std::string>& out) const {
  if (kind() == ExprKind::kExo) out.insert(node_->name);
  for (const auto& c : children()) c.collect_exos(out);
}

static Expr map_children(const Expr& e,
                         const std::function<Expr(const Expr&)>& f) {
  std::vector<Expr> mapped;
  mapped.reserve(e.children().size());
  for (const auto& c : e.children()) mapped.push_back(f(c));
  switch (e.kind()) {
    case ExprKind::kNeg:
      return Expr::neg(mapped[0]);
    case ExprKind::kSum:
      return Expr::sum(std::move(mapped));
    case ExprKind::kProduct:
      return Expr::product(std::move(mapped));
    case ExprKind::kOr:
      return Expr::logical_or(std::move(mapped));
    case ExprKind::kAnd:
      return Expr::logical_and(std::move(mapped));
    case ExprKind::kNot:
      return Expr::logical_not(mapped[0]);
    default:
      throw InternalConsistencyError("map_children on a leaf");
  }
}

Expr Expr::substitute_vars(
    const std::map<std::string, Expr>& replacements) const {
  switch (kind()) {
    case ExprKind::kConstant:
    case ExprKind::kExo:
      return *this;
    case ExprKind::kVar: {
      auto it = replacements.find(node_->name);
      return it == replacements.end() ? *this : it->second;
    }
    default:
      return map_children(
          *this, [&](const Expr& c) { return c.substitute_vars(replacements); });
  }
}

Expr Expr::substitute_exos(
    const std::map<std::string, Expr>& replacements) const {
  switch (kind()) {
    case ExprKind::kConstant:
    case ExprKind::kVar:
      return *this;
    case ExprKind::kExo: {
      auto it = replacements.find(node_->name);
      return it == replacements.end() ? *this : it->second;
    }
    default:
      return map_children(
          *this, [&](const Expr& c) { return c.substitute_exos(replacements); });
  }
}

Expr Expr::rename(const std::map<std::string, std::string>& var_names,
                  const std::map<std::string, std::string>& exo_names) const {
  switch (kind()) {
    case ExprKind::kConstant:
      return *this;
    case ExprKind::kVar: {
      auto it = var_names.find(node_->name);
      return it == var_names.end() ? *this : var(it->second);
    }
    case ExprKind::kExo: {
      auto it = exo_names.find(node_->name);
      return it == exo_names.end() ? *this : exo(it->second);
    }
    default:
      return map_children(*this, [&](const Expr& c) {
        return c.rename(var_names, exo_names);
      });
  }
}

static AffineForm affine_scale(AffineForm f, double c) {
  f.constant *= c;
  for (auto& [k, v] : f.vars) v *= c;
  for (auto& [k, v] : f.exos) v *= c;
  return f;
}

static bool affine_is_constant(const AffineForm& f) {
  return f.vars.empty() && f.exos.empty();
}

std::optional<AffineForm> Expr::affine() const {
  switch (kind()) {
    case ExprKind::kConstant: {
      AffineForm f;
      f.constant = node_->value;
      return f;
    }
    case ExprKind::kVar: {
      AffineForm f;
      f.vars[node_->name] = 1.0;
      return f;
    }
    case ExprKind::kExo: {
      AffineForm f;
      f.exos[node_->name] = 1.0;
      return f;
    }
    case ExprKind::kNeg: {
      auto f = children()[0].affine();
      if (!f) return std::nullopt;
      return affine_scale(*f, -1.0);
    }
    case ExprKind::kSum: {
      AffineForm acc;
      for (const auto& c : children()) {
        auto f = c.affine();
        if (!f) return std::nullopt;
        acc.constant += f->constant;
        for (const auto& [k, v] : f->vars) acc.vars[k] += v;
        for (const auto& [k, v] : f->exos) acc.exos[k] += v;
      }
      return acc;
    }
    case ExprKind::kProduct: {
      AffineForm acc;
      acc.constant = 1.0;
      for (const auto& c : children()) {
        auto f = c.affine();
        if (!f) return std::nullopt;
        if (affine_is_constant(*f)) {
          acc = affine_scale(acc, f->constant);
        } else if (affine_is_constant(acc)) {
          acc = affine_scale(*f, acc.constant);
        } else {
          return std::nullopt;  // product of two non-constant terms
        }
      }
      return acc;
    }
    default:
      return std::nullopt;  // boolean connectives are not affine
  }
}

// ---------------------------------------------------------------------------
// Rendering

static std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

static void render(const Expr& e, std::ostringstream& out, bool parenthesize);

static void render_args(const char* fn, const std::vector<Expr>& args,
                        std::ostringstream& out) {
  out << fn << "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out << ", ";
    render(args[i], out, false);
  }
  out << ")";
}

static void render(const Expr& e, std::ostringstream& out, bool parenthesize) {
  switch (e.kind()) {
    case ExprKind::kConstant: {
      const double v = e.constant_value();
      if (v < 0 && parenthesize) {
        out << "(" << format_double(v) << ")";
      } else {
        out << format_double(v);
      }
      return;
    }
    case ExprKind::kVar:
    case ExprKind::kExo:
      out << e.name();
      return;
    case ExprKind::kNeg:
      if (parenthesize) out << "(";
      out << "-";
      render(e.children()[0], out, true);
      if (parenthesize) out << ")";
      return;
    case ExprKind::kSum: {
      if (parenthesize) out << "(";
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        const Expr& term = e.children()[i];
        if (i == 0) {
          render(term, out, false);
        } else if (term.kind() == ExprKind::kNeg) {
          out << " - ";
          render(term.children()[0], out, true);
        } else {
          out << " + ";
          render(term, out, false);
        }
      }
      if (parenthesize) out << ")";
      return;
    }
    case ExprKind::kProduct: {
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        if (i) out << "*";
        render(e.children()[i], out, true);
      }
      return;
    }
    case ExprKind::kOr:
      render_args("or", e.children(), out);
      return;
    case ExprKind::kAnd:
      render_args("and", e.children(), out);
      return;
    case ExprKind::kNot:
      render_args("not", e.children(), out);
      return;
  }
}

std::string Expr::to_string() const {
  std::ostringstream out;
  render(*this, out, false);
  return out.str();
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ExprKind::kConstant:
      return a.constant_value() == b.constant_value();
    case ExprKind::kVar:
    case ExprKind::kExo:
      return a.name() == b.name();
    default: {
      if (a.children().size() != b.children().size()) return false;
      for (std::size_t i = 0; i < a.children().size(); ++i) {
        if (!(a.children()[i] == b.children()[i])) return false;
      }
      return true;
    }
  }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  Parser(const std::string& text, const IdentResolver& resolve)
      : text_(text), resolve_(resolve) {}

  Expr parse() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression \"" + text_ + "\": " + what +
                          " at position " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr parse_expr() {
    std::vector<Expr> terms;
    terms.push_back(parse_term());
    while (true) {
      if (consume('+')) {
        terms.push_back(parse_term());
      } else if (consume('-')) {
        terms.push_back(Expr::neg(parse_term()));
      } else {
        break;
      }
    }
    return Expr::sum(std::move(terms));
  }

  Expr parse_term() {
    std::vector<Expr> factors;
    factors.push_back(parse_factor());
    while (consume('*')) factors.push_back(parse_factor());
    return Expr::product(std::move(factors));
  }

  Expr parse_factor() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return Expr::neg(parse_factor());
    }
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return parse_ident();
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return Expr::constant(v);
  }

  Expr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (peek() == '(') {
      consume('(');
      std::vector<Expr> args;
      args.push_back(parse_expr());
      while (consume(',')) args.push_back(parse_expr());
      if (!consume(')')) fail("expected ')'");
      if (name == "or") return Expr::logical_or(std::move(args));
      if (name == "and") return Expr::logical_and(std::move(args));
      if (name == "not") {
        if (args.size() != 1) fail("not() takes exactly one operand");
        return Expr::logical_not(args[0]);
      }
      fail("unknown function '" + name + "'");
    }
    switch (resolve_(name, start)) {
      case IdentClass::kVar:
        return Expr::var(name);
      case IdentClass::kExo:
        return Expr::exo(name);
    }
    fail("unresolvable identifier '" + name + "'");
  }

  const std::string& text_;
  const IdentResolver& resolve_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(const std::string& text, const IdentResolver& resolve) {
  return Parser(text, resolve).parse();
}

}  // namespace semtrans
