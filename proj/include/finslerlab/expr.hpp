#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace finslerlab {

/// Exact rational, normalized so that den > 0 and gcd(num, den) == 1.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// A literal: exact rational when the value came from integer arithmetic, otherwise a double.
class Number {
 public:
  Number() = default;
  static Number exact(Rational q) { Number n; n.exact_ = true; n.q_ = q; n.v_ = q.to_double(); return n; }
  static Number exact(std::int64_t k) { return exact(Rational{k, 1}); }
  static Number real(double v);

  bool is_exact() const { return exact_; }
  const Rational& rational() const { return q_; }
  double value() const { return v_; }
  bool is_integer() const { return exact_ && q_.is_integer(); }
  bool is_zero() const { return v_ == 0.0; }
  bool is_one() const { return v_ == 1.0; }
  bool is_minus_one() const { return v_ == -1.0; }

  Number operator-() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  /// Caller guarantees b != 0.
  friend Number operator/(const Number& a, const Number& b);
  friend bool operator==(const Number& a, const Number& b);

  std::string to_string() const;

 private:
  bool exact_ = true;
  Rational q_{};
  double v_ = 0.0;
};

enum class NodeKind { Constant, Variable, Neg, Sqrt, Sin, Cos, Exp, Log, Add, Sub, Mul, Div, Pow };

enum class VarClass { X, Y, Param };

/// x/y variables are zero-based (x1 is index 0); parameters are identified by name.
struct Variable {
  VarClass cls = VarClass::X;
  int index = 0;
  std::string name;

  static Variable x(int i) { return {VarClass::X, i, {}}; }
  static Variable y(int i) { return {VarClass::Y, i, {}}; }
  static Variable param(std::string n) { return {VarClass::Param, -1, std::move(n)}; }
  std::string to_string() const;
  friend bool operator==(const Variable&, const Variable&) = default;
};

class Node;

/// Immutable, shareable expression DAG handle. Construction applies constant folding
/// and the 0/1 identities; nothing else is rewritten.
class Expr {
 public:
  Expr();  // constant 0
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static Expr constant(Number n);
  static Expr constant(double v) { return constant(Number::real(v)); }
  static Expr integer(std::int64_t k) { return constant(Number::exact(k)); }
  static Expr rational(std::int64_t num, std::int64_t den) { return constant(Number::exact(Rational::make(num, den))); }
  static Expr var(const Variable& v);
  static Expr x(int i) { return var(Variable::x(i)); }
  static Expr y(int i) { return var(Variable::y(i)); }
  static Expr param(const std::string& name) { return var(Variable::param(name)); }

  const Node& node() const { return *node_; }
  const Node* id() const { return node_.get(); }
  NodeKind kind() const;
  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_zero() const;
  bool is_one() const;
  std::optional<Number> constant_value() const;

  /// Fully parenthesized DSL text; re-parsing yields a structurally identical tree.
  std::string to_string() const;

 private:
  std::shared_ptr<const Node> node_;
};

class Node {
 public:
  NodeKind kind = NodeKind::Constant;
  Number value;       // Constant
  Variable variable;  // Variable
  Number exponent;    // Pow
  std::vector<Expr> children;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Number& exponent);
Expr pow(const Expr& base, std::int64_t exponent);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);

bool structurally_equal(const Expr& a, const Expr& b);

/// Largest x/y index referenced (+1), per class; -1 becomes 0.
struct VariableUsage {
  int x_count = 0;
  int y_count = 0;
  std::vector<std::string> params;  // sorted, unique
};
VariableUsage variable_usage(const Expr& e);

/// Number of distinct nodes reachable from e.
std::size_t dag_size(const Expr& e);

/// Symbolic partial derivative with memoization across calls on shared subtrees.
class Differentiator {
 public:
  Expr operator()(const Expr& e, const Variable& v);

 private:
  struct Key {
    const Node* node;
    VarClass cls;
    int index;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<const void*>{}(k.node) ^ (static_cast<std::size_t>(k.index) * 0x9e3779b97f4a7c15ULL) ^
             static_cast<std::size_t>(k.cls);
    }
  };
  Expr derive(const Expr& e, const Variable& v);

  std::unordered_map<Key, std::pair<Expr, Expr>, KeyHash> memo_;  // key node kept alive alongside result
};

Expr differentiate(const Expr& e, const Variable& v);

/// Replace every variable for which `fn` returns an expression.
Expr substitute(const Expr& e, const std::function<std::optional<Expr>(const Variable&)>& fn);

/// Replace named parameters by the given expressions.
Expr substitute_params(const Expr& e, const std::map<std::string, Expr>& replacements);

}  // namespace finslerlab
