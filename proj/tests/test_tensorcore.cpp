#include <array>
#include <cmath>

#include "doctest.h"
#include "finslerlab/fundamental.hpp"
#include "support.hpp"

using namespace finslerlab;
using testing::Coord;

TEST_CASE("euclidean bundle") {
  const MetricModel m = testing::model_of("dim=2\nenergy=y1^2+y2^2");
  const std::vector<double> x{0.3, -2}, y{3, 4};
  const FundamentalBundle b = fundamental_bundle(m, x, y);
  CHECK(b.F == doctest::Approx(5));
  CHECK(b.E == doctest::Approx(12.5));
  CHECK(b.g(0, 0) == 1.0);
  CHECK(b.g(0, 1) == 0.0);
  CHECK(b.g(1, 1) == 1.0);
  CHECK(b.C.max_abs() == 0.0);
  CHECK(b.C_sq == 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(b.h(i, j) == doctest::Approx((i == j ? 1.0 : 0.0) - y[i] * y[j] / 25.0));
}

TEST_CASE("product metric Cartan tensor is traceless") {
  const MetricModel m = testing::model_of("dim=3\nenergy=(y1*y2*y3)^(2/3)\ndomain = y1*y2*y3 > 0");
  const std::vector<double> x{1, 1, 1}, y{1, 1, 1};
  const FundamentalBundle b = fundamental_bundle(m, x, y);
  CHECK(b.C(0, 1, 2) == doctest::Approx(2.0 / 27.0).epsilon(1e-14));
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(b.C_vec(i)) < 1e-14);
  CHECK(b.C.max_abs() > 0.01);
}

TEST_CASE("conic metric components") {
  const MetricModel m = testing::model_of(testing::kConic);
  const double eps = 0.5;
  const std::vector<double> x{1, 0, 2}, y{1, 1, 1};
  const FundamentalBundle b = fundamental_bundle(m, x, y);
  CHECK(b.g(2, 2) == 1.0);
  const double r2 = y[0] * y[0] + x[0] * x[0] * y[1] * y[1];
  const double c222 = 1.5 * eps * x[0] * x[0] * x[2] * x[2] * std::pow(y[0], 4) / std::pow(r2, 2.5);
  CHECK(b.C(1, 1, 1) == doctest::Approx(c222).epsilon(1e-13));
}

TEST_CASE("outside the domain aborts") {
  const MetricModel m = testing::model_of(testing::kConic);
  const std::vector<double> x{1, 0, 2}, y{0, 0, 1};
  CHECK_THROWS_AS(fundamental_bundle(m, x, y), EvalError);
}

TEST_CASE("degenerate metric is flagged, not thrown") {
  const MetricModel m = testing::model_of("dim=2\nenergy=(y1+y2)^2");
  const std::vector<double> x{0, 0}, y{1, 1};
  const FundamentalBundle b = fundamental_bundle(m, x, y);
  CHECK_FALSE(b.g_inv_valid);
  CHECK(std::isnan(b.g_inv(0, 0)));
  const DomainStatus s = domain_probe(m, x, y);
  CHECK(s.in_domain);
  CHECK_FALSE(s.nondegenerate);
  CHECK_FALSE(s.positive_definite);
}

TEST_CASE("bundle identities and homogeneity") {
  for (const std::string& src : {testing::kConic, testing::kRanders2, testing::kRiemann2}) {
    const MetricModel m = testing::model_of(src);
    const int n = m.dim();
    testing::Rng rng(5);
    for (int t = 0; t < 50; ++t) {
      const auto x = rng.xpoint(n);
      const auto y = rng.vec(n, -1, 1);
      if (!m.in_domain(x, y)) continue;
      Jet jet;
      REQUIRE(m.jet(x, y, Tier::Fundamental, jet).ok);
      const FundamentalBundle b = fundamental_bundle(jet, y);
      CHECK(identity_defects(b, jet, y).worst() < 1e-10);

      const double scale_g = b.g.max_abs();
      CHECK(b.g.symmetry_defect(std::array{0, 1}) <= 1e-12 * scale_g);
      CHECK(b.C.symmetry_defect(std::array{0, 1, 2}) <= 1e-12 * b.cartan_scale());

      if (b.g_inv_valid) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double v = 0.0;
            for (int k = 0; k < n; ++k) v += b.g(i, k) * b.g_inv(k, j);
            CHECK(std::fabs(v - (i == j ? 1.0 : 0.0)) < 1e-9);
          }
      }
      for (double lambda : {0.5, 2.0, 3.0}) {
        std::vector<double> ly(y);
        for (double& v : ly) v *= lambda;
        const FundamentalBundle s = fundamental_bundle(m, x, ly);
        CHECK(s.F == doctest::Approx(lambda * b.F).epsilon(1e-9));
        CHECK(max_abs_diff(s.g, b.g) <= 1e-9 * scale_g);
        for (std::size_t k = 0; k < b.C.size(); ++k)
          CHECK(std::fabs(lambda * s.C.data()[k] - b.C.data()[k]) <= 1e-9 * b.cartan_scale());
      }
    }
  }
}

TEST_CASE("metric tensor agrees with the finite-difference Hessian") {
  for (const std::string& src : {testing::kConic, testing::kRanders2, testing::kRiemann2}) {
    const MetricModel m = testing::model_of(src);
    const int n = m.dim();
    testing::ScalarFn f = [&](std::span<const double> x, std::span<const double> y) {
      double v = 0.0;
      m.energy(x, y, v);
      return v;
    };
    testing::Rng rng(9);
    int used = 0;
    while (used < 20) {
      const auto x = rng.xpoint(n);
      const auto y = rng.vec(n, 0.3, 1.0);
      if (!m.in_domain(x, y)) continue;
      ++used;
      const FundamentalBundle b = fundamental_bundle(m, x, y);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double fd = 0.5 * testing::fd_partial(f, x, y, {Coord{VarClass::Y, i}, Coord{VarClass::Y, j}}, 1e-2);
          CHECK(std::fabs(fd - b.g(i, j)) <= 1e-5 * b.g.max_abs());
        }
    }
  }
}

TEST_CASE("quadratic energy has vanishing Cartan tensor") {
  const MetricModel m = testing::model_of(testing::kRiemann2);
  testing::Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto x = rng.xpoint(2);
    const auto y = rng.vec(2, -1, 1);
    CHECK(fundamental_bundle(m, x, y).C.max_abs() < 1e-12);
  }
}

TEST_CASE("domain probe") {
  SUBCASE("euclidean") {
    const MetricModel m = testing::model_of(testing::kEuclid3);
    const std::vector<double> x{0, 0, 0}, y{0.2, 0.3, -1};
    const DomainStatus s = domain_probe(m, x, y);
    CHECK(s.in_domain);
    CHECK(s.smooth);
    CHECK(s.positive_definite);
    for (double v : s.leading_minors) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("conic metric loses smoothness near the excluded axis") {
    const MetricModel m = testing::model_of(testing::kConic);
    const std::vector<double> x{1, 0.5, 1};
    const std::vector<double> far{1, 1, 1};
    CHECK(domain_probe(m, x, far).smooth);
    const std::vector<double> near{1e-6, 1e-6, 1};
    const DomainStatus s = domain_probe(m, x, near);
    CHECK(s.in_domain);
    CHECK_FALSE(s.smooth);
    const std::vector<double> axis{0, 0, 1};
    CHECK_FALSE(domain_probe(m, x, axis).in_domain);
  }
  SUBCASE("indefinite metric") {
    const MetricModel m = testing::model_of("dim=2\nenergy=y1^2 - 0.5*y2^2");
    const std::vector<double> x{0, 0}, y{1, 0.1};
    const DomainStatus s = domain_probe(m, x, y);
    CHECK(s.nondegenerate);
    CHECK_FALSE(s.positive_definite);
    CHECK(s.leading_minors[1] < 0);
  }
}

TEST_CASE("reversibility") {
  const MetricModel r = testing::model_of(testing::kRanders2);
  const std::vector<double> x{1, 1}, y{0.3, 0.7};
  CHECK(reversibility_residual(r, x, y).value() > 0.1);
  const MetricModel q = testing::model_of(testing::kRiemann2);
  CHECK(reversibility_residual(q, x, y).value() < 1e-15);
}
