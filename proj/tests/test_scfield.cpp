#include <cmath>
#include <numeric>

#include "doctest.h"
#include "finslerlab/catalog.hpp"
#include "finslerlab/report.hpp"
#include "finslerlab/scfield.hpp"
#include "support.hpp"

using namespace finslerlab;

namespace {

MetricModel model_for(const std::string& name, const Overrides& o = {}) { return MetricModel(builtin(name, o).spec); }

std::vector<std::vector<double>> directions(const MetricModel& m, const std::vector<double>& x, int count,
                                            std::uint64_t seed = 5) {
  Sampler s(seed);
  return sample_directions(m, s, x, count);
}

std::vector<TangentSample> samples(const MetricModel& m, int count, std::uint64_t seed = 9) {
  Sampler s(seed);
  return sample_points(m, s, count, SampleBox{});
}

std::vector<double> normalized(std::vector<double> v) {
  const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (double& e : v) e /= n;
  return v;
}

VectorFieldSpec field(const std::string& comps, int n, std::map<std::string, double> params = {}) {
  params["f"] = 1.0;
  return VectorFieldSpec::parse(comps, n, params);
}

}  // namespace

TEST_CASE("fields reject y and wrong arity") {
  CHECK_THROWS_AS(VectorFieldSpec::parse("0;y1;0", 3, {}), std::invalid_argument);
  CHECK_THROWS_AS(VectorFieldSpec::parse("0;1", 3, {}), std::invalid_argument);
  CHECK_THROWS_AS(VectorFieldSpec::parse("0;q;1", 3, {}), ParseError);
  const auto g = VectorFieldSpec::gradient_of("x1^2*x3", 3, {}, FieldKind::Gradient);
  const std::vector<double> x{2, 5, 3};
  const auto v = g.evaluate(x);
  CHECK(v[0] == doctest::Approx(12));
  CHECK(v[1] == 0.0);
  CHECK(v[2] == doctest::Approx(4));
}

TEST_CASE("euclidean null space is everything") {
  const MetricModel m = model_for("euclidean_n", {{"n", "4"}});
  const std::vector<double> x{0.5, 1, -1, 2};
  const NullSpace ns = sc_nullspace_at(m, x, directions(m, x, 12));
  CHECK(ns.c_zero);
  CHECK(ns.basis.size() == 4);
  const SCFieldReport r = sc_detect(m, SCOptions{});
  CHECK(r.consistent_dimension == 4);
  CHECK(r.c_zero_everywhere);
}

TEST_CASE("too few directions is an error") {
  const MetricModel m = model_for("conic_randers_lift");
  const std::vector<double> x{1, 1, 1};
  CHECK_THROWS_AS(sc_nullspace_at(m, x, directions(m, x, 4)), std::invalid_argument);
}

TEST_CASE("ex5_2 null space contains e2 and e4") {
  const MetricModel m = model_for("ex5_2");
  const std::vector<double> x{1, 1, 1, 1};
  const NullSpace ns = sc_nullspace_at(m, x, directions(m, x, 40));
  REQUIRE(ns.basis.size() == 2);
  CHECK(subspace_angle(ns.basis, {{0, 1, 0, 0}, {0, 0, 0, 1}}) < 1e-8);
}

TEST_CASE("ex5_3 null space is the catalog field") {
  const MetricModel m = model_for("ex5_3");
  const std::vector<double> x{1, 1, 1, 1};
  const NullSpace ns = sc_nullspace_at(m, x, directions(m, x, 30));
  REQUIRE(ns.basis.size() == 1);
  CHECK(subspace_angle(ns.basis, {normalized({0, 1, -0.5, -1})}) < 1e-8);
}

TEST_CASE("detection across x") {
  SUBCASE("conic lift has the single direction e3") {
    const Builtin b = builtin("conic_randers_lift");
    const MetricModel m(b.spec);
    const SCFieldReport r = sc_detect(m, SCOptions{}, {{"sc", b.expected.fields[0].alternatives[0]}});
    CHECK(r.consistent_dimension == 1);
    for (const auto& px : r.per_x) CHECK(subspace_angle(px.nullspace.basis, {{0, 0, 1}}) < 1e-8);
    REQUIRE(r.candidate_field.has_value());
    CHECK(*r.candidate_field == "sc");
    REQUIRE(r.gradient_flag.has_value());
    CHECK(*r.gradient_flag);
  }
  SUBCASE("2-D Randers has none") {
    const SCFieldReport r = sc_detect(model_for("randers2d"), SCOptions{});
    CHECK(r.consistent_dimension == 0);
    CHECK_FALSE(r.candidate_field.has_value());
  }
  SUBCASE("product metric has none") {
    CHECK(sc_detect(model_for("product3d"), SCOptions{}).consistent_dimension == 0);
  }
  SUBCASE("ex5_3 direction varies with x but is locally continuous") {
    const Builtin b = builtin("ex5_3");
    const SCFieldReport r = sc_detect(MetricModel(b.spec), SCOptions{}, {{"ex3", b.expected.fields[0].alternatives[0]}});
    CHECK(r.consistent_dimension == 1);
    CHECK(r.candidate_field.has_value());
  }
}

TEST_CASE("null-space soundness on fresh directions") {
  for (const char* name : {"conic_randers_lift", "ex5_2", "ex5_3", "randers2d", "product3d"}) {
    CAPTURE(name);
    SCOptions opts;
    const SCFieldReport r = sc_detect(model_for(name), opts);
    for (const auto& px : r.per_x) CHECK(px.soundness_residual < 10 * opts.tol);
  }
}

TEST_CASE("detection is deterministic") {
  const MetricModel m = model_for("ex5_3");
  SCOptions opts;
  opts.seed = 4;
  const std::string a = dump_json(to_json(sc_detect(m, opts)));
  const std::string b = dump_json(to_json(sc_detect(m, opts)));
  CHECK(a == b);
}

TEST_CASE("concurrent field of the conic lift") {
  const MetricModel m = model_for("conic_randers_lift");
  const auto pts = samples(m, 30);
  const ConditionReport minus = check_condition(m, field("0;0;-x3", 3), Condition::C, pts, 1e-8);
  CHECK(minus.passed);
  CHECK(minus.cvf_residual < 1e-6);
  const ConditionReport plus = check_condition(m, field("0;0;x3", 3), Condition::C, pts, 1e-8);
  CHECK_FALSE(plus.passed);
  CHECK(plus.residual < 1e-8);  // still semi-concurrent
  CHECK(plus.cvf_residual == doctest::Approx(2.0));
  // C implies SC
  CHECK(check_condition(m, field("0;0;-x3", 3), Condition::SC, pts, 1e-8).passed);
  CHECK_FALSE(check_condition(m, field("1;0;0", 3), Condition::SC, pts, 1e-8).passed);
}

TEST_CASE("every field is semi-concurrent on Euclidean space") {
  const MetricModel m = model_for("euclidean_n");
  const ConditionReport r = check_condition(m, field("x1*x2;sin(x3);1", 3), Condition::SC, samples(m, 10), 1e-12);
  CHECK(r.residual == 0.0);
  CHECK(r.passed);
}

TEST_CASE("gradient conditions on ex5_2") {
  const MetricModel m = model_for("ex5_2");
  const auto pts = samples(m, 20);
  const auto grad = VectorFieldSpec::gradient_of("x2", 4, {}, FieldKind::Gradient);
  const ConditionReport f = check_condition(m, grad, Condition::F, pts, 1e-7);
  CHECK(f.passed);
  const auto conf = VectorFieldSpec::gradient_of("x2", 4, {}, FieldKind::Conformal);
  CHECK(check_condition(m, conf, Condition::CC, pts, 1e-7).passed);
  const auto bad = VectorFieldSpec::gradient_of("x1", 4, {}, FieldKind::Gradient);
  CHECK_FALSE(check_condition(m, bad, Condition::F, pts, 1e-7).passed);
  const auto bad_conf = VectorFieldSpec::gradient_of("x1", 4, {}, FieldKind::Conformal);
  CHECK_FALSE(check_condition(m, bad_conf, Condition::CC, pts, 1e-7).passed);
  CHECK_THROWS_AS(check_condition(m, field("0;1;0;0", 4), Condition::F, pts, 1e-7), std::invalid_argument);
}

TEST_CASE("F-condition implies SC for the raised gradient") {
  struct Case {
    std::string metric;
    Overrides o;
    std::string potential;
  };
  int verified = 0;
  for (const Case& c : {Case{"ex5_2", {}, "x2"}, Case{"ex5_2", {{"F7", "2 + x1^2"}}, "x2^3 + x3"},
                        Case{"conic_randers_lift", {}, "x3^2"}, Case{"euclidean_n", {}, "x1*x2"}}) {
    CAPTURE(c.metric);
    CAPTURE(c.potential);
    const MetricModel m = model_for(c.metric, c.o);
    const int n = m.dim();
    const auto pts = samples(m, 20);
    const auto grad = VectorFieldSpec::gradient_of(c.potential, n, {}, FieldKind::Gradient);
    const ConditionReport f = check_condition(m, grad, Condition::F, pts, 1e-7);
    if (!f.passed) continue;
    ++verified;
    for (const auto& s : pts) {
      const auto fi = grad.evaluate(s.x);
      auto raise = [&](const std::vector<double>& y) {
        const FundamentalBundle b = fundamental_bundle(m, s.x, y);
        std::vector<double> bj(n, 0.0);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) bj[j] += fi[i] * b.g_inv(i, j);
        return bj;
      };
      const auto b0 = raise(s.y);
      // y-independence of b^j at this x
      for (const auto& y : directions(m, s.x, 3, 17)) {
        const auto b1 = raise(y);
        for (int j = 0; j < n; ++j) CHECK(b1[j] == doctest::Approx(b0[j]).epsilon(1e-7).scale(testing::max_abs(b0)));
      }
      const double r = sc_residual_at(m, s.x, b0, {s.y});
      CHECK(r < 1e-7);
    }
  }
  CHECK(verified >= 3);
}

TEST_CASE("T-tensor reduces along semi-concurrent fields") {
  struct Case {
    std::string metric;
    std::string comps;
  };
  for (const Case& c : {Case{"conic_randers_lift", "0;0;x3"}, Case{"conic_randers_lift", "0;0;exp(x1)"},
                        Case{"ex5_2", "0;1;0;0"}, Case{"ex5_2", "0;0;0;x2"},
                        Case{"ex5_3", "0;x2;-x2/2;-x1*x2"}}) {
    CAPTURE(c.metric);
    CAPTURE(c.comps);
    const MetricModel m = model_for(c.metric);
    const int n = m.dim();
    const auto B = field(c.comps, n);
    for (const auto& s : samples(m, 20)) {
      const PointGeometry p = point_geometry(m, s.x, s.y);
      const auto b = B.evaluate(s.x);
      double B0 = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B0 += p.fb.g(i, j) * b[i] * s.y[j];
      const double scale = testing::max_abs(b) * std::max(p.cb.T4.max_abs(), p.fb.g.max_abs() * p.fb.cartan_scale());
      double worst = 0.0;
      for (int h = 0; h < n; ++h)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double bt = 0.0;
            for (int i = 0; i < n; ++i) bt += b[i] * p.cb.T4(h, i, j, k);
            worst = std::max(worst, std::fabs(bt - B0 / p.fb.F * p.fb.C(h, j, k)));
          }
      CHECK(worst < 1e-7 * scale);
    }
  }
}

TEST_CASE("independence invariants") {
  SUBCASE("conic lift at a fixed point") {
    const MetricModel m = model_for("conic_randers_lift");
    const InvariantsReport r =
        independence_invariants(m, field("0;0;x3", 3), {{{1, 1, 2}, {1, 1, 1}}});
    REQUIRE(r.samples.size() == 1);
    CHECK(r.samples[0].B0 == doctest::Approx(2.0));
    CHECK_FALSE(r.any_flagged);
  }
  SUBCASE("field parallel to y is flagged") {
    const MetricModel m = model_for("euclidean_n");
    const InvariantsReport r = independence_invariants(m, field("1;0;0", 3), {{{1, 1, 1}, {1, 0, 0}}});
    CHECK(r.samples[0].B2F2_minus_B02 == doctest::Approx(0.0));
    CHECK(r.samples[0].gram_small);
    CHECK(r.any_flagged);
  }
  SUBCASE("ex5_3 field stays away from zero") {
    const MetricModel m = model_for("ex5_3");
    const InvariantsReport r = independence_invariants(m, field("0;1;-1/2;-x1", 4), samples(m, 20));
    CHECK_FALSE(r.any_flagged);
  }
}
