#include "finslerlab/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace finslerlab {

namespace {

bool checked_mul(std::int64_t a, std::int64_t b, std::int64_t& out) { return !__builtin_mul_overflow(a, b, &out); }
bool checked_add(std::int64_t a, std::int64_t b, std::int64_t& out) { return !__builtin_add_overflow(a, b, &out); }

// Exact rational op, or nullopt on overflow.
std::optional<Rational> rat_add(const Rational& a, const Rational& b) {
  std::int64_t l = 0, r = 0, n = 0, d = 0;
  if (!checked_mul(a.num, b.den, l) || !checked_mul(b.num, a.den, r) || !checked_add(l, r, n) ||
      !checked_mul(a.den, b.den, d))
    return std::nullopt;
  return Rational::make(n, d);
}

std::optional<Rational> rat_mul(const Rational& a, const Rational& b) {
  std::int64_t n = 0, d = 0;
  if (!checked_mul(a.num, b.num, n) || !checked_mul(a.den, b.den, d)) return std::nullopt;
  return Rational::make(n, d);
}

std::shared_ptr<Node> make_node(NodeKind kind) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  return n;
}

Expr unary(NodeKind kind, const Expr& a) {
  auto n = make_node(kind);
  n->children = {a};
  return Expr(std::move(n));
}

Expr binary(NodeKind kind, const Expr& a, const Expr& b) {
  auto n = make_node(kind);
  n->children = {a, b};
  return Expr(std::move(n));
}

// Integer power of an exact rational, nullopt on overflow.
std::optional<Rational> rat_ipow(Rational base, std::int64_t e) {
  if (e < 0) {
    if (base.num == 0) return std::nullopt;
    base = Rational::make(base.den, base.num);
    e = -e;
  }
  Rational acc{1, 1};
  for (std::int64_t i = 0; i < e; ++i) {
    auto next = rat_mul(acc, base);
    if (!next) return std::nullopt;
    acc = *next;
  }
  return acc;
}

}  // namespace

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

Number Number::real(double v) {
  // Integral doubles of moderate size stay exact so that 2*x folds predictably.
  if (std::isfinite(v) && v == std::nearbyint(v) && std::fabs(v) < 9.0e15) {
    return exact(static_cast<std::int64_t>(v));
  }
  Number n;
  n.exact_ = false;
  n.v_ = v;
  return n;
}

Number Number::operator-() const {
  if (exact_ && q_.num != INT64_MIN) return exact(Rational{-q_.num, q_.den});
  return real(-v_);
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = rat_add(a.q_, b.q_)) return Number::exact(*r);
  }
  return Number::real(a.v_ + b.v_);
}

Number operator-(const Number& a, const Number& b) { return a + (-b); }

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = rat_mul(a.q_, b.q_)) return Number::exact(*r);
  }
  return Number::real(a.v_ * b.v_);
}

Number operator/(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_ && b.q_.num != 0) {
    if (auto r = rat_mul(a.q_, Rational::make(b.q_.den, b.q_.num))) return Number::exact(*r);
  }
  return Number::real(a.v_ / b.v_);
}

bool operator==(const Number& a, const Number& b) {
  if (a.exact_ != b.exact_) return false;
  return a.exact_ ? a.q_ == b.q_ : a.v_ == b.v_;
}

std::string Number::to_string() const {
  if (exact_) {
    if (q_.den == 1) {
      return q_.num < 0 ? "(" + std::to_string(q_.num) + ")" : std::to_string(q_.num);
    }
    return "(" + std::to_string(q_.num) + "/" + std::to_string(q_.den) + ")";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v_);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return v_ < 0 ? "(" + s + ")" : s;
}

std::string Variable::to_string() const {
  switch (cls) {
    case VarClass::X: return "x" + std::to_string(index + 1);
    case VarClass::Y: return "y" + std::to_string(index + 1);
    case VarClass::Param: return name;
  }
  return name;
}

Expr::Expr() : Expr(constant(Number::exact(0))) {}

Expr Expr::constant(Number n) {
  auto node = make_node(NodeKind::Constant);
  node->value = n;
  return Expr(std::move(node));
}

Expr Expr::var(const Variable& v) {
  if (v.cls != VarClass::Param && v.index < 0) throw std::invalid_argument("negative variable index");
  auto node = make_node(NodeKind::Variable);
  node->variable = v;
  return Expr(std::move(node));
}

NodeKind Expr::kind() const { return node_->kind; }
bool Expr::is_zero() const { return kind() == NodeKind::Constant && node_->value.is_zero(); }
bool Expr::is_one() const { return kind() == NodeKind::Constant && node_->value.is_one(); }

std::optional<Number> Expr::constant_value() const {
  if (kind() == NodeKind::Constant) return node_->value;
  return std::nullopt;
}

Expr operator+(const Expr& a, const Expr& b) {
  auto ca = a.constant_value(), cb = b.constant_value();
  if (ca && cb) return Expr::constant(*ca + *cb);
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return binary(NodeKind::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  auto ca = a.constant_value(), cb = b.constant_value();
  if (ca && cb) return Expr::constant(*ca - *cb);
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.id() == b.id()) return Expr::integer(0);
  return binary(NodeKind::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  auto ca = a.constant_value(), cb = b.constant_value();
  if (ca && cb) return Expr::constant(*ca * *cb);
  if (a.is_zero() || b.is_zero()) return Expr::integer(0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (ca && ca->is_minus_one()) return -b;
  if (cb && cb->is_minus_one()) return -a;
  if (ca && ca->is_exact() && b.kind() == NodeKind::Mul) {
    auto inner = b.node().children[0].constant_value();
    if (inner && inner->is_exact()) return Expr::constant(*ca * *inner) * b.node().children[1];
  }
  return binary(NodeKind::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  auto ca = a.constant_value(), cb = b.constant_value();
  if (ca && cb && !cb->is_zero()) return Expr::constant(*ca / *cb);
  if (b.is_one()) return a;
  if (a.is_zero() && !(cb && cb->is_zero())) return Expr::integer(0);
  if (cb && cb->is_exact() && !cb->is_zero() && a.kind() == NodeKind::Mul) {
    auto lead = a.node().children[0].constant_value();
    if (lead && lead->is_exact()) return Expr::constant(*lead / *cb) * a.node().children[1];
  }
  return binary(NodeKind::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (auto c = a.constant_value()) return Expr::constant(-*c);
  if (a.kind() == NodeKind::Neg) return a.node().children[0];
  return unary(NodeKind::Neg, a);
}

Expr pow(const Expr& base, const Number& exponent) {
  if (exponent.is_zero()) return Expr::integer(1);
  if (exponent.is_one()) return base;
  if (auto c = base.constant_value()) {
    if (exponent.is_integer() && c->is_exact()) {
      if (auto r = rat_ipow(c->rational(), exponent.rational().num)) return Expr::constant(Number::exact(*r));
    }
    if (exponent.is_integer() && !(c->is_zero() && exponent.value() < 0)) {
      return Expr::constant(Number::real(std::pow(c->value(), exponent.value())));
    }
    if (c->value() > 0) return Expr::constant(Number::real(std::pow(c->value(), exponent.value())));
  }
  if (base.kind() == NodeKind::Pow && exponent.is_integer() && base.node().exponent.is_integer()) {
    return pow(base.node().children[0], base.node().exponent * exponent);
  }
  auto n = make_node(NodeKind::Pow);
  n->children = {base};
  n->exponent = exponent;
  return Expr(std::move(n));
}

Expr pow(const Expr& base, std::int64_t exponent) { return pow(base, Number::exact(exponent)); }

namespace {
Expr fold_unary(NodeKind kind, const Expr& a, double (*fn)(double), bool (*valid)(double)) {
  if (auto c = a.constant_value()) {
    if (valid(c->value())) {
      const double v = fn(c->value());
      if (std::isfinite(v)) return Expr::constant(Number::real(v));
    }
  }
  return unary(kind, a);
}
bool always(double) { return true; }
bool nonneg(double v) { return v >= 0.0; }
bool positive(double v) { return v > 0.0; }
double c_sqrt(double v) { return std::sqrt(v); }
double c_sin(double v) { return std::sin(v); }
double c_cos(double v) { return std::cos(v); }
double c_exp(double v) { return std::exp(v); }
double c_log(double v) { return std::log(v); }
}  // namespace

Expr sqrt(const Expr& a) { return fold_unary(NodeKind::Sqrt, a, c_sqrt, nonneg); }
Expr sin(const Expr& a) { return fold_unary(NodeKind::Sin, a, c_sin, always); }
Expr cos(const Expr& a) { return fold_unary(NodeKind::Cos, a, c_cos, always); }
Expr exp(const Expr& a) { return fold_unary(NodeKind::Exp, a, c_exp, always); }
Expr log(const Expr& a) { return fold_unary(NodeKind::Log, a, c_log, positive); }

namespace {

const char* function_name(NodeKind k) {
  switch (k) {
    case NodeKind::Sqrt: return "sqrt";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Exp: return "exp";
    case NodeKind::Log: return "log";
    default: return "";
  }
}

const char* operator_symbol(NodeKind k) {
  switch (k) {
    case NodeKind::Add: return " + ";
    case NodeKind::Sub: return " - ";
    case NodeKind::Mul: return "*";
    case NodeKind::Div: return "/";
    default: return "";
  }
}

void print(const Expr& e, std::string& out, std::unordered_map<const Node*, std::string>& cache) {
  if (auto it = cache.find(e.id()); it != cache.end()) {
    out += it->second;
    return;
  }
  std::string s;
  const Node& n = e.node();
  switch (n.kind) {
    case NodeKind::Constant: s = n.value.to_string(); break;
    case NodeKind::Variable: s = n.variable.to_string(); break;
    case NodeKind::Neg:
      s = "(-";
      print(n.children[0], s, cache);
      s += ")";
      break;
    case NodeKind::Sqrt:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp:
    case NodeKind::Log:
      s = function_name(n.kind);
      s += "(";
      print(n.children[0], s, cache);
      s += ")";
      break;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      s = "(";
      print(n.children[0], s, cache);
      s += operator_symbol(n.kind);
      print(n.children[1], s, cache);
      s += ")";
      break;
    case NodeKind::Pow: {
      s = "(";
      print(n.children[0], s, cache);
      s += "^";
      const std::string ex = n.exponent.to_string();
      s += ex.front() == '(' ? ex : "(" + ex + ")";
      s += ")";
      break;
    }
  }
  out += s;
  cache.emplace(e.id(), std::move(s));
}

}  // namespace

std::string Expr::to_string() const {
  std::string out;
  std::unordered_map<const Node*, std::string> cache;
  print(*this, out, cache);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  const Node& x = a.node();
  const Node& y = b.node();
  if (x.kind != y.kind || x.children.size() != y.children.size()) return false;
  switch (x.kind) {
    case NodeKind::Constant: return x.value == y.value;
    case NodeKind::Variable: return x.variable == y.variable;
    case NodeKind::Pow:
      if (!(x.exponent == y.exponent)) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!structurally_equal(x.children[i], y.children[i])) return false;
  }
  return true;
}

namespace {
template <typename Fn>
void visit_dag(const Expr& root, Fn&& fn) {
  std::unordered_set<const Node*> seen;
  std::vector<Expr> stack{root};
  while (!stack.empty()) {
    Expr e = stack.back();
    stack.pop_back();
    if (!seen.insert(e.id()).second) continue;
    fn(e);
    for (const auto& c : e.node().children) stack.push_back(c);
  }
}
}  // namespace

VariableUsage variable_usage(const Expr& e) {
  VariableUsage u;
  std::set<std::string> params;
  visit_dag(e, [&](const Expr& n) {
    if (n.kind() != NodeKind::Variable) return;
    const Variable& v = n.node().variable;
    switch (v.cls) {
      case VarClass::X: u.x_count = std::max(u.x_count, v.index + 1); break;
      case VarClass::Y: u.y_count = std::max(u.y_count, v.index + 1); break;
      case VarClass::Param: params.insert(v.name); break;
    }
  });
  u.params.assign(params.begin(), params.end());
  return u;
}

std::size_t dag_size(const Expr& e) {
  std::size_t count = 0;
  visit_dag(e, [&](const Expr&) { ++count; });
  return count;
}

Expr Differentiator::operator()(const Expr& e, const Variable& v) {
  if (v.cls == VarClass::Param) throw std::invalid_argument("differentiation with respect to a parameter");
  return derive(e, v);
}

Expr Differentiator::derive(const Expr& e, const Variable& v) {
  const Key key{e.id(), v.cls, v.index};
  if (auto it = memo_.find(key); it != memo_.end()) return it->second.second;

  const Node& n = e.node();
  Expr d;
  switch (n.kind) {
    case NodeKind::Constant: d = Expr::integer(0); break;
    case NodeKind::Variable:
      d = (n.variable.cls == v.cls && n.variable.index == v.index && v.cls != VarClass::Param) ? Expr::integer(1)
                                                                                               : Expr::integer(0);
      break;
    case NodeKind::Neg: d = -derive(n.children[0], v); break;
    case NodeKind::Add: d = derive(n.children[0], v) + derive(n.children[1], v); break;
    case NodeKind::Sub: d = derive(n.children[0], v) - derive(n.children[1], v); break;
    case NodeKind::Mul: {
      const Expr& a = n.children[0];
      const Expr& b = n.children[1];
      d = derive(a, v) * b + a * derive(b, v);
      break;
    }
    case NodeKind::Div: {
      const Expr& a = n.children[0];
      const Expr& b = n.children[1];
      const Expr db = derive(b, v);
      d = derive(a, v) / b;
      if (!db.is_zero()) d = d - (a * db) / pow(b, 2);
      break;
    }
    case NodeKind::Pow: {
      const Expr& a = n.children[0];
      const Expr da = derive(a, v);
      if (da.is_zero()) {
        d = Expr::integer(0);
      } else {
        const Number r = n.exponent;
        d = Expr::constant(r) * pow(a, r - Number::exact(1)) * da;
      }
      break;
    }
    case NodeKind::Sqrt: {
      const Expr da = derive(n.children[0], v);
      d = da.is_zero() ? Expr::integer(0) : da / (Expr::integer(2) * e);
      break;
    }
    case NodeKind::Sin: d = cos(n.children[0]) * derive(n.children[0], v); break;
    case NodeKind::Cos: d = -(sin(n.children[0]) * derive(n.children[0], v)); break;
    case NodeKind::Exp: d = e * derive(n.children[0], v); break;
    case NodeKind::Log: d = derive(n.children[0], v) / n.children[0]; break;
  }
  memo_.emplace(key, std::make_pair(e, d));
  return d;
}

Expr differentiate(const Expr& e, const Variable& v) {
  Differentiator diff;
  return diff(e, v);
}

Expr substitute(const Expr& e, const std::function<std::optional<Expr>(const Variable&)>& fn) {
  std::unordered_map<const Node*, Expr> memo;
  std::function<Expr(const Expr&)> go = [&](const Expr& x) -> Expr {
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    const Node& n = x.node();
    Expr r = x;
    switch (n.kind) {
      case NodeKind::Constant: break;
      case NodeKind::Variable:
        if (auto rep = fn(n.variable)) r = *rep;
        break;
      case NodeKind::Neg: r = -go(n.children[0]); break;
      case NodeKind::Sqrt: r = sqrt(go(n.children[0])); break;
      case NodeKind::Sin: r = sin(go(n.children[0])); break;
      case NodeKind::Cos: r = cos(go(n.children[0])); break;
      case NodeKind::Exp: r = exp(go(n.children[0])); break;
      case NodeKind::Log: r = log(go(n.children[0])); break;
      case NodeKind::Add: r = go(n.children[0]) + go(n.children[1]); break;
      case NodeKind::Sub: r = go(n.children[0]) - go(n.children[1]); break;
      case NodeKind::Mul: r = go(n.children[0]) * go(n.children[1]); break;
      case NodeKind::Div: r = go(n.children[0]) / go(n.children[1]); break;
      case NodeKind::Pow: r = pow(go(n.children[0]), n.exponent); break;
    }
    memo.emplace(x.id(), r);
    return r;
  };
  return go(e);
}

Expr substitute_params(const Expr& e, const std::map<std::string, Expr>& replacements) {
  return substitute(e, [&](const Variable& v) -> std::optional<Expr> {
    if (v.cls != VarClass::Param) return std::nullopt;
    if (auto it = replacements.find(v.name); it != replacements.end()) return it->second;
    return std::nullopt;
  });
}

}  // namespace finslerlab
