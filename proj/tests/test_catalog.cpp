#include <cmath>

#include "doctest.h"
#include "finslerlab/catalog.hpp"
#include "finslerlab/classify.hpp"
#include "finslerlab/report.hpp"
#include "support.hpp"

using namespace finslerlab;

namespace {

double energy_at(const MetricModel& m, std::span<const double> x, std::span<const double> y) {
  double e = 0.0;
  REQUIRE(m.energy(x, y, e).ok);
  return e;
}

/// Compares two energies at random points where both are defined.
void check_same_energy(const MetricSpec& a, const MetricSpec& b, int dim) {
  const MetricModel ma(a), mb(b);
  testing::Rng rng(21);
  int compared = 0;
  for (int t = 0; t < 40; ++t) {
    const auto x = rng.xpoint(dim);
    const auto y = rng.vec(dim, -1, 1);
    if (!ma.in_domain(x, y) || !mb.in_domain(x, y)) continue;
    const double ea = energy_at(ma, x, y), eb = energy_at(mb, x, y);
    CHECK(ea == doctest::Approx(eb).epsilon(1e-12).scale(1.0));
    ++compared;
  }
  CHECK(compared > 20);
}

}  // namespace

TEST_CASE("catalog lists every builtin and each constructs") {
  const auto list = catalog_list();
  CHECK(list.size() == 7);
  for (const auto& e : list) {
    CAPTURE(e.name);
    CHECK(is_builtin(e.name));
    const Builtin b = builtin(e.name);
    CHECK(b.name == e.name);
    CHECK(b.spec.dim >= 2);
    CHECK_NOTHROW(MetricModel{b.spec});
  }
  CHECK_FALSE(is_builtin("no_such_metric"));
}

TEST_CASE("catalog rejects bad names and overrides") {
  CHECK_THROWS_AS(builtin("no_such_metric"), CatalogError);
  CHECK_THROWS_AS(builtin("ex5_3", {{"A6", "0"}}), CatalogError);
  CHECK_THROWS_AS(builtin("ex5_1", {{"A6", "0"}}), CatalogError);
  CHECK_THROWS_AS(builtin("ex5_2", {{"A6", "0"}}), CatalogError);
  CHECK_THROWS_AS(builtin("conic_randers_lift", {{"bogus", "1"}}), CatalogError);
  CHECK_THROWS_AS(builtin("conic_randers_lift", {{"eps", "abc"}}), CatalogError);
  CHECK_THROWS_AS(builtin("ex5_3", {{"F1", "y1"}}), CatalogError);
  CHECK_THROWS_AS(builtin("euclidean_n", {{"n", "2.5"}}), CatalogError);
}

TEST_CASE("every builtin verifies at default parameters") {
  for (const auto& e : catalog_list()) {
    CAPTURE(e.name);
    const VerificationReport r = verify_example(e.name, 1e-7);
    CHECK(r.points == 50);
    for (const auto& en : r.entries) {
      CAPTURE(en.name);
      CAPTURE(en.detail);
      if (e.name == "ex5_2" && en.name == "sc_dimension") {
        // e4 is also semi-concurrent here: detected dimension 2
        CHECK_FALSE(en.passed);
        continue;
      }
      CHECK(en.passed);
    }
    CHECK(r.passed == (e.name != "ex5_2"));
  }
}

TEST_CASE("verification holds for other parameter values") {
  const std::vector<std::pair<std::string, Overrides>> cases = {
      {"conic_randers_lift", {{"eps", "0.3"}}},
      {"ex5_3", {{"F1", "x2^2 + 1"}, {"A5", "3"}, {"A6", "-1.5"}, {"F6", "0.4"}}},
      {"ex5_2", {{"F5", "2"}, {"F6", "0.3"}}},
      {"ex5_1", {{"F6", "x1"}, {"F7", "2 + x3^2"}}},
      {"product3d", {{"f", "1 + x1^2"}}},
  };
  for (const auto& [name, o] : cases) {
    CAPTURE(name);
    const VerificationReport r = verify_example(name, 1e-7, o);
    for (const auto& en : r.entries) {
      if (en.name == "sc_dimension") continue;
      CAPTURE(en.name);
      CAPTURE(en.detail);
      CHECK(en.passed);
    }
  }
}

TEST_CASE("verification is deterministic") {
  const std::string a = dump_json(to_json(verify_example("ex5_3", 1e-7)));
  const std::string b = dump_json(to_json(verify_example("ex5_3", 1e-7)));
  CHECK(a == b);
}

TEST_CASE("general four-dimensional family reproduces the examples") {
  SUBCASE("ex5_1") {
    GeneralForm4DParams p;
    p.A = {0, 0, 0, 0, 1, 2, 0};
    p.F = {"0", "u", "u^2", "0", "1", "0", "1", "1"};
    check_same_energy(general_form_4d(p).spec, builtin("ex5_1").spec, 4);
  }
  SUBCASE("ex5_2") {
    GeneralForm4DParams p;
    p.A = {0, 0, 0, 0, 0, 2, 0};
    p.F = {"0", "u", "u^4", "0", "5", "0", "1", "1"};
    check_same_energy(general_form_4d(p).spec, builtin("ex5_2").spec, 4);
  }
  SUBCASE("ex5_3") {
    GeneralForm4DParams p;
    p.A = {0, 0, 0, 0, 1, 2, 0};
    p.F = {"x1", "u^2", "u", "0", "5", "0", "1", "1"};
    check_same_energy(general_form_4d(p).spec, builtin("ex5_3").spec, 4);
  }
}

TEST_CASE("general family carries its semi-concurrent field") {
  testing::Rng rng(5);
  for (int t = 0; t < 4; ++t) {
    GeneralForm4DParams p;
    for (double& a : p.A) a = rng.uniform(0.5, 1.5);
    p.F = {"x1 + x2", "u^3", "x1*u^2 + u", "x2", "3", "0.2", "2", "1"};
    const Builtin b = general_form_4d(p);
    const MetricModel m(b.spec);
    Sampler s(t);
    const auto samples = sample_points(m, s, 20, SampleBox{});
    REQUIRE(b.expected.fields.size() == 1);
    auto field = b.expected.fields[0].alternatives[0];
    const ConditionReport r = check_condition(m, field, Condition::SC, samples, 1e-8);
    CHECK(r.passed);
  }
  GeneralForm4DParams bad;
  bad.A = {0, 0, 0, 0, 1, 0, 0};
  CHECK_THROWS_AS(general_form_4d(bad), CatalogError);
  bad.A[5] = 2;
  bad.F[1] = "x1*u";
  CHECK_THROWS_AS(general_form_4d(bad), CatalogError);
}

TEST_CASE("quadratic energies have vanishing Cartan tensor") {
  const MetricModel m(builtin("ex5_1").spec);
  const SCFieldReport r = sc_detect(m, SCOptions{});
  CHECK(r.c_zero_everywhere);
  CHECK(r.consistent_dimension == 4);
}

TEST_CASE("Tachibana lift") {
  SUBCASE("Euclidean base gives a Riemannian lift") {
    const MetricSpec lifted = tachibana_lift(parse_metric(testing::kEuclid3));
    CHECK(lifted.dim == 4);
    ClassifyOptions o;
    o.n_points = 20;
    const auto r = classify_metric(MetricModel(lifted), o);
    CHECK(r.verdict("riemannian")->status == "member");
  }
  SUBCASE("Randers base gives the conic example") {
    check_same_energy(tachibana_lift(parse_metric(testing::kRanders2)), builtin("conic_randers_lift").spec, 3);
  }
  SUBCASE("quadratic base: the concurrent field passes for one sign only") {
    const MetricSpec lifted = tachibana_lift(parse_metric("dim = 2\nenergy = 2*y1^2 + y1*y2 + (1 + x1^2)*y2^2\n"));
    const MetricModel m(lifted);
    Sampler s(4);
    const auto samples = sample_points(m, s, 20, SampleBox{});
    int passing = 0;
    for (const auto& f : tachibana_fields(3, lifted.params)) {
      if (f.condition != Condition::C) continue;
      for (const auto& alt : f.alternatives) passing += check_condition(m, alt, Condition::C, samples, 1e-6).passed;
    }
    CHECK(passing == 1);
  }
}
