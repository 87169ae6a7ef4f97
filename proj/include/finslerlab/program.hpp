#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finslerlab/expr.hpp"

namespace finslerlab {

/// A tangent sample (x, y) plus parameter values.
struct Bindings {
  std::vector<double> x;
  std::vector<double> y;
  std::map<std::string, double> params;
};

enum class EvalErrorKind { DomainViolation, NonFinite, Unbound };

class EvalError : public std::runtime_error {
 public:
  EvalError(EvalErrorKind kind, std::string subexpression, const std::string& what)
      : std::runtime_error(what), kind_(kind), subexpression_(std::move(subexpression)) {}
  EvalErrorKind kind() const { return kind_; }
  const std::string& subexpression() const { return subexpression_; }

 private:
  EvalErrorKind kind_;
  std::string subexpression_;
};

/// Outcome of a non-throwing tape run; `failed_at` indexes the offending instruction.
struct EvalStatus {
  bool ok = true;
  EvalErrorKind kind = EvalErrorKind::DomainViolation;
  int failed_at = -1;
};

/// Flattened, topologically ordered evaluation tape for a set of roots. Parameters are baked in
/// as constants at compile time. Immutable after construction, so one Program may be run from
/// several threads with separate scratch buffers.
class Program {
 public:
  Program() = default;
  Program(const std::vector<Expr>& roots, const std::map<std::string, double>& params);

  std::size_t root_count() const { return roots_.size(); }
  std::size_t size() const { return tape_.size(); }
  int required_x() const { return required_x_; }
  int required_y() const { return required_y_; }

  /// Evaluates every root into `out` (size root_count()). `scratch` is resized as needed.
  EvalStatus run(std::span<const double> x, std::span<const double> y, std::span<double> out,
                 std::vector<double>& scratch) const;

  /// Throwing variant of run().
  void evaluate(std::span<const double> x, std::span<const double> y, std::span<double> out,
                std::vector<double>& scratch) const;

  /// Text of the subexpression at a failing instruction.
  std::string describe(int instruction) const;
  [[noreturn]] void raise(const EvalStatus& status) const;

 private:
  struct Instr {
    NodeKind op;
    int a = -1;
    int b = -1;
    double constant = 0.0;
    Rational exponent{};
    bool exact_exponent = false;
    VarClass var_class = VarClass::X;
    int var_index = 0;
  };
  std::vector<Instr> tape_;
  std::vector<Expr> sources_;
  std::vector<int> roots_;
  int required_x_ = 0;
  int required_y_ = 0;
};

/// One-shot evaluation of a single expression.
double evaluate(const Expr& e, const Bindings& b);

}  // namespace finslerlab
