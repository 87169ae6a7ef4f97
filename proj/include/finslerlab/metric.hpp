#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "finslerlab/expr.hpp"
#include "finslerlab/program.hpp"

namespace finslerlab {

enum class ParseErrorKind { Syntax, UnknownIdentifier, DimensionMismatch, Structure };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, int line, int column, const std::string& message);
  ParseErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  ParseErrorKind kind_;
  int line_;
  int column_;
};

enum class CompareOp { Greater, GreaterEq, Less, LessEq, NotEq };

/// Boolean combination of comparisons between expressions.
struct Predicate {
  enum class Kind { Compare, And, Or };
  Kind kind = Kind::Compare;
  CompareOp op = CompareOp::Greater;
  Expr lhs;
  Expr rhs;
  std::vector<Predicate> children;

  static Predicate compare(Expr lhs, CompareOp op, Expr rhs);
  static Predicate both(Predicate a, Predicate b);
  static Predicate either(Predicate a, Predicate b);
  std::string to_string() const;
};

bool structurally_equal(const Predicate& a, const Predicate& b);

/// Parsed metric definition. The `energy` expression is the squared Finsler function F^2;
/// the metric tensor is g_ij = (1/2) d^2(energy)/dy^i dy^j.
struct MetricSpec {
  int dim = 0;
  Expr energy;
  std::map<std::string, double> params;
  std::optional<Predicate> domain;
  std::string label;

  /// Serializes in the metric-definition grammar; parse_metric(to_text()) round-trips.
  std::string to_text() const;
};

bool structurally_equal(const MetricSpec& a, const MetricSpec& b);

MetricSpec parse_metric(std::string_view source);

/// Parses a single expression over x1..x{dim}, y1..y{dim} and the given parameter names.
Expr parse_expression(std::string_view text, int dim, const std::set<std::string>& params);

/// Parses a boolean predicate in the same vocabulary.
Predicate parse_predicate(std::string_view text, int dim, const std::set<std::string>& params);

/// Compiled domain test. A point is inside when every side evaluates and the predicate holds.
class DomainTest {
 public:
  DomainTest() = default;
  DomainTest(const std::optional<Predicate>& predicate, const std::map<std::string, double>& params);
  bool contains(std::span<const double> x, std::span<const double> y) const;

 private:
  std::optional<Predicate> predicate_;
  std::vector<Expr> sides_;
  std::shared_ptr<const Program> program_;
};

}  // namespace finslerlab
