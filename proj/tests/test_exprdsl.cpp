#include <cmath>
#include <cstring>

#include "doctest.h"
#include "finslerlab/metric.hpp"
#include "finslerlab/model.hpp"
#include "support.hpp"

using namespace finslerlab;
using testing::Coord;

namespace {

double eval_at(const Expr& e, std::vector<double> x, std::vector<double> y, std::map<std::string, double> p = {}) {
  return evaluate(e, Bindings{std::move(x), std::move(y), std::move(p)});
}

}  // namespace

TEST_CASE("parse euclidean metric") {
  const MetricSpec s = parse_metric("dim=2\nenergy=(y1^2+y2^2)/2");
  CHECK(s.dim == 2);
  CHECK(eval_at(s.energy, {0, 0}, {3, 4}) == doctest::Approx(12.5));
  CHECK_FALSE(s.domain.has_value());
}

TEST_CASE("out-of-range variable is a dimension mismatch") {
  try {
    parse_metric("dim=2\nenergy=(y1^2+y3^2)/2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::DimensionMismatch);
    CHECK(std::string(e.what()).find("y3") != std::string::npos);
    CHECK(e.line() == 2);
  }
}

TEST_CASE("parse errors carry line and column") {
  SUBCASE("syntax") {
    try {
      parse_metric("dim = 2\n\nenergy = y1^2 + * y2");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseErrorKind::Syntax);
      CHECK(e.line() == 3);
      CHECK(e.column() > 1);
    }
  }
  SUBCASE("unknown identifier") {
    CHECK_THROWS_AS(parse_metric("dim = 2\nenergy = k*y1^2 + y2^2"), ParseError);
  }
  SUBCASE("missing energy") { CHECK_THROWS_AS(parse_metric("dim = 2\n"), ParseError); }
  SUBCASE("duplicate dim") { CHECK_THROWS_AS(parse_metric("dim = 2\ndim = 3\nenergy = y1^2"), ParseError); }
  SUBCASE("non-constant exponent") { CHECK_THROWS_AS(parse_metric("dim = 2\nenergy = y1^y2"), ParseError); }
}

TEST_CASE("conic example source reproduces its energy") {
  const MetricSpec s = parse_metric(testing::kConic);
  CHECK(s.params.at("eps") == 0.5);
  REQUIRE(s.domain.has_value());
  const std::vector<double> x{0.7, -1.1, 1.9}, y{0.3, 1.2, -0.8};
  const double eps = 0.5;
  const double rho = std::sqrt(y[0] * y[0] + x[0] * x[0] * y[1] * y[1]) + eps * y[1];
  CHECK(eval_at(s.energy, x, y, s.params) == doctest::Approx(y[2] * y[2] + x[2] * x[2] * rho * rho).epsilon(1e-14));
  // hand-evaluable point
  CHECK(eval_at(s.energy, {0, 0, 1}, {1, 0, 0}, s.params) == 1.0);
}

TEST_CASE("round trip through text is structural identity") {
  for (const std::string& src : {testing::kConic, testing::kRiemann2, testing::kRanders2, testing::kEuclid3,
                                 std::string("dim = 3\nparam a = -0.25\nlabel = \"mixed ops\"\n"
                                             "energy = exp(-x1)*(y1*y2*y3)^(2/3) + sin(x2)^2*y1^2/(1+cos(x3)^2) "
                                             "- log(2+x1^2)*y2^2 + a*y3^2\n"
                                             "domain = y1*y2*y3 > 0 and x1 >= -5 or x2 != 1\n")}) {
    const MetricSpec a = parse_metric(src);
    const MetricSpec b = parse_metric(a.to_text());
    CHECK(structurally_equal(a, b));
    CHECK(b.to_text() == a.to_text());
  }
}

TEST_CASE("differentiate a quadratic") {
  const MetricSpec s = parse_metric("dim=2\nenergy=(y1^2+y2^2)/2");
  const Expr d = differentiate(s.energy, Variable::y(0));
  CHECK(structurally_equal(d, Expr::y(0)));
}

TEST_CASE("mixed second partial of the conic energy matches its closed form") {
  const MetricSpec s = parse_metric(testing::kConic);
  const Expr g12 = differentiate(differentiate(s.energy, Variable::y(0)), Variable::y(1));
  const std::vector<double> x{1, 0, 2}, y{1, 1, 1};
  const double eps = 0.5;
  const double expected =
      eps * x[2] * x[2] * std::pow(y[0], 3) / std::pow(y[0] * y[0] + x[0] * x[0] * y[1] * y[1], 1.5);
  CHECK(0.5 * eval_at(g12, x, y, s.params) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("evaluation") {
  const Expr cube = parse_expression("(y1*y2*y3)^(1/3)", 3, {});
  CHECK(eval_at(cube, {0, 0, 0}, {1, 8, 27}) == 6.0);

  SUBCASE("domain violation names the subexpression") {
    const Expr bad = parse_expression("1 + sqrt(x1)", 1, {});
    try {
      eval_at(bad, {-1}, {0});
      FAIL("expected an evaluation error");
    } catch (const EvalError& e) {
      CHECK(e.kind() == EvalErrorKind::DomainViolation);
      CHECK(e.subexpression().find("sqrt") != std::string::npos);
    }
  }
  SUBCASE("log and division") {
    CHECK_THROWS_AS(eval_at(parse_expression("log(x1)", 1, {}), {0}, {1}), EvalError);
    CHECK_THROWS_AS(eval_at(parse_expression("1/x1", 1, {}), {0}, {1}), EvalError);
    CHECK_THROWS_AS(eval_at(parse_expression("x1^(1/2)", 1, {}), {-4}, {1}), EvalError);
  }
  SUBCASE("non-finite is distinct") {
    try {
      eval_at(parse_expression("exp(x1)", 1, {}), {1000}, {1});
      FAIL("expected an evaluation error");
    } catch (const EvalError& e) {
      CHECK(e.kind() == EvalErrorKind::NonFinite);
    }
  }
  SUBCASE("integer powers of negative bases are fine") {
    CHECK(eval_at(parse_expression("x1^3 - x1^(-2)", 1, {}), {-2}, {1}) == doctest::Approx(-8.25));
  }
  SUBCASE("deterministic") {
    const MetricSpec s = parse_metric(testing::kConic);
    const double a = eval_at(s.energy, {0.3, 0.1, 1.7}, {0.2, -0.4, 0.9}, s.params);
    const double b = eval_at(s.energy, {0.3, 0.1, 1.7}, {0.2, -0.4, 0.9}, s.params);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}

TEST_CASE("unary minus binds looser than power") {
  CHECK(eval_at(parse_expression("-y1^2", 1, {}), {0}, {3}) == -9.0);
  CHECK(eval_at(parse_expression("2^3^2", 1, {}), {0}, {1}) == 512.0);
  CHECK(eval_at(parse_expression("-2^2 + 10 - 3 - 2", 1, {}), {0}, {1}) == 1.0);
  CHECK(eval_at(parse_expression("8/4/2", 1, {}), {0}, {1}) == 1.0);
}

TEST_CASE("differentiation is linear") {
  const Expr e1 = parse_expression("x1*sqrt(y1^2 + x2^2*y2^2) + y1*y2^3/(1+y1^2)", 2, {});
  const Expr e2 = parse_expression("exp(x1*y2)*cos(y1) - log(2 + y2^2)*y1^(5/2)", 2, {});
  const double a = 1.7, b = -0.4;
  const Expr combo = Expr::constant(a) * e1 + Expr::constant(b) * e2;
  testing::Rng rng(7);
  for (int v = 0; v < 2; ++v) {
    const Variable var = Variable::y(v);
    const Expr lhs = differentiate(combo, var);
    const Expr d1 = differentiate(e1, var), d2 = differentiate(e2, var);
    for (int t = 0; t < 100; ++t) {
      const auto x = rng.vec(2, -2, 2);
      const auto y = rng.vec(2, 0.1, 2);  // y1 > 0 for the half power
      const double l = eval_at(lhs, x, y);
      const double r = a * eval_at(d1, x, y) + b * eval_at(d2, x, y);
      CHECK(std::fabs(l - r) <= 1e-12 * std::max({1.0, std::fabs(l), std::fabs(r)}));
    }
  }
}

TEST_CASE("mixed partials commute") {
  const MetricSpec s = parse_metric(testing::kConic);
  testing::Rng rng(11);
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const Expr ij = differentiate(differentiate(s.energy, Variable::y(i)), Variable::y(j));
      const Expr ji = differentiate(differentiate(s.energy, Variable::y(j)), Variable::y(i));
      for (int t = 0; t < 30; ++t) {
        const auto x = rng.xpoint(3);
        const auto y = rng.vec(3, -1, 1);
        const double a = eval_at(ij, x, y, s.params), b = eval_at(ji, x, y, s.params);
        CHECK(std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)));
      }
    }
  }
}

TEST_CASE("symbolic partials up to order 4 agree with finite differences") {
  for (const std::string& src : {testing::kConic, testing::kRanders2, testing::kRiemann2}) {
    const MetricModel model = testing::model_of(src);
    const int n = model.dim();
    testing::ScalarFn f = [&](std::span<const double> x, std::span<const double> y) {
      double v = 0.0;
      model.energy(x, y, v);
      return v;
    };
    testing::Rng rng(3);
    for (int t = 0; t < 3; ++t) {
      const auto x = rng.xpoint(n);
      auto y = rng.vec(n, 0.4, 1.2);
      // one y-order per row, all index patterns, plus one x-derivative on top
      std::vector<std::pair<std::vector<int>, int>> cases = {
          {{0}, -1}, {{1, 0}, -1}, {{0, 0, 1}, -1}, {{0, 1, 1, 0}, -1}, {{n - 1, 0, 1, 1}, -1},
          {{1}, 0},  {{0, 1}, 0},  {{1, 1, 0}, n - 1}};
      for (const auto& [ys, xi] : cases) {
        std::vector<Coord> coords;
        for (int a : ys) coords.push_back({VarClass::Y, a});
        if (xi >= 0) coords.push_back({VarClass::X, xi});
        const double fd = testing::fd_partial(f, x, y, coords, 2e-2);
        const double sym = evaluate(model.derivative(ys, xi), Bindings{x, y, model.spec().params});
        const double scale = std::max({1.0, std::fabs(sym), f(x, y)});
        CHECK_MESSAGE(std::fabs(fd - sym) <= 1e-5 * scale, src << " order " << ys.size());
      }
    }
  }
}

TEST_CASE("dag sharing keeps high-order derivatives bounded") {
  const MetricModel model = testing::model_of(testing::kConic);
  CHECK(model.tape_size(Tier::Full) < 200000);
  CHECK(model.tape_size(Tier::Fundamental) < model.tape_size(Tier::Full));
}
