#include "finslerlab/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "finslerlab/classify.hpp"
#include "finslerlab/parallel.hpp"

namespace finslerlab {

namespace {

std::string number_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fill(std::string text, const std::map<std::string, std::string>& slots) {
  for (const auto& [key, value] : slots) {
    const std::string token = "{" + key + "}";
    for (std::size_t at = text.find(token); at != std::string::npos; at = text.find(token, at)) {
      text.replace(at, token.size(), "(" + value + ")");
      at += value.size() + 2;
    }
  }
  return text;
}

std::set<std::string> names_of(const std::map<std::string, double>& params) {
  std::set<std::string> out;
  for (const auto& [k, v] : params) out.insert(k);
  return out;
}

/// Resolved override table: declared keys with their defaults, replaced by user values.
class Settings {
 public:
  Settings(std::string example, std::map<std::string, std::string> defaults, const Overrides& overrides)
      : example_(std::move(example)), values_(std::move(defaults)) {
    for (const auto& [key, value] : overrides) {
      if (!values_.count(key)) throw CatalogError("unknown parameter '" + key + "' for " + example_);
      values_[key] = value;
    }
  }

  double number(const std::string& key) const {
    const std::string& text = values_.at(key);
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0' || !std::isfinite(v)) {
      throw CatalogError("parameter " + key + " of " + example_ + " must be a number, got '" + text + "'");
    }
    return v;
  }

  int integer(const std::string& key, int lo, int hi) const {
    const double v = number(key);
    if (v != std::floor(v) || v < lo || v > hi) {
      throw CatalogError("parameter " + key + " of " + example_ + " must be an integer in [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
  }

  /// An expression in x (and the given parameter names) only.
  std::string x_function(const std::string& key, int dim, const std::set<std::string>& params) const {
    const std::string& text = values_.at(key);
    Expr e;
    try {
      e = parse_expression(text, dim, params);
    } catch (const ParseError& err) {
      throw CatalogError("parameter " + key + " of " + example_ + ": " + err.what());
    }
    if (variable_usage(e).y_count > 0) throw CatalogError("parameter " + key + " of " + example_ + " must not use y");
    return text;
  }

  const std::string& text(const std::string& key) const { return values_.at(key); }

 private:
  std::string example_;
  std::map<std::string, std::string> values_;
};

class Builder {
 public:
  Builder(std::string name, int dim, std::map<std::string, double> params, std::map<std::string, std::string> slots)
      : slots_(std::move(slots)) {
    b_.name = std::move(name);
    b_.spec.dim = dim;
    b_.spec.params = std::move(params);
    b_.spec.label = b_.name;
    names_ = names_of(b_.spec.params);
  }

  Expr expr(const std::string& text) const { return parse_expression(fill(text, slots_), b_.spec.dim, names_); }

  void energy(const std::string& text) { b_.spec.energy = expr(text); }
  void domain(const std::string& text) {
    b_.spec.domain = parse_predicate(fill(text, slots_), b_.spec.dim, names_);
  }

  ExpectedComponent component(std::vector<int> one_based, const std::string& text) const {
    for (int& i : one_based) --i;
    const std::string filled = fill(text, slots_);
    return {std::move(one_based), filled, parse_expression(filled, b_.spec.dim, names_)};
  }

  void g(std::vector<int> idx, const std::string& text) { b_.expected.g.push_back(component(std::move(idx), text)); }
  void C(std::vector<int> idx, const std::string& text) { b_.expected.C.push_back(component(std::move(idx), text)); }
  void minor(int m, const std::string& text) { b_.expected.minors.push_back(component({m}, text)); }

  VectorFieldSpec field(const std::string& components) const {
    auto params = b_.spec.params;
    params["f"] = 1.0;
    VectorFieldSpec v = VectorFieldSpec::parse(fill(components, slots_), b_.spec.dim, params);
    return v;
  }

  void expect_field(const std::string& name, Condition cond, const std::vector<std::string>& alternatives) {
    ExpectedField f{name, cond, {}};
    for (const auto& a : alternatives) {
      f.alternatives.push_back(field(a));
      f.alternatives.back().label = name;
    }
    b_.expected.fields.push_back(std::move(f));
  }

  Builtin& get() { return b_; }
  ExpectedArtifacts& expected() { return b_.expected; }

 private:
  Builtin b_;
  std::map<std::string, std::string> slots_;
  std::set<std::string> names_;
};

const std::map<std::string, std::string> kEuclidDefaults{{"n", "3"}};
const std::map<std::string, std::string> kProductDefaults{{"f", "1"}};
const std::map<std::string, std::string> kConicDefaults{{"eps", "0.5"}};
const std::map<std::string, std::string> kRandersDefaults{{"eps", "0.5"}, {"n", "2"}};
const std::map<std::string, std::string> kEx1Defaults{{"A5", "1"}, {"A6", "2"}, {"F5", "1"},
                                                      {"F6", "0"}, {"F7", "1"}, {"F8", "1"}};
const std::map<std::string, std::string> kEx2Defaults{{"A6", "2"}, {"F5", "5"}, {"F6", "0"}, {"F7", "1"}, {"F8", "1"}};
const std::map<std::string, std::string> kEx3Defaults{{"A5", "1"}, {"A6", "2"}, {"F1", "x1"}, {"F5", "5"},
                                                      {"F6", "0"}, {"F7", "1"}, {"F8", "1"}};

std::map<std::string, std::string> x_slots(const Settings& s, const std::vector<std::string>& keys, int dim) {
  std::map<std::string, std::string> out;
  for (const auto& k : keys) out[k] = s.x_function(k, dim, {});
  return out;
}

Builtin make_euclidean(const Overrides& o) {
  Settings s("euclidean_n", kEuclidDefaults, o);
  const int n = s.integer("n", 1, 8);
  Builder b("euclidean_n", n, {}, {});
  std::string energy;
  for (int i = 1; i <= n; ++i) energy += (i > 1 ? " + y" : "y") + std::to_string(i) + "^2";
  b.energy(energy);
  for (int i = 1; i <= n; ++i) b.g({i, i}, "1");
  b.expected().g_complete = true;
  b.expected().C_complete = true;
  std::vector<std::string> basis;
  for (int i = 0; i < n; ++i) {
    std::string comps;
    for (int j = 0; j < n; ++j) comps += (j ? ";" : "") + std::string(i == j ? "f" : "0");
    basis.push_back(comps);
  }
  b.expect_field("basis_vector", Condition::SC, basis);
  b.expected().sc_dimension = n;
  return b.get();
}

Builtin make_product3d(const Overrides& o) {
  Settings s("product3d", kProductDefaults, o);
  Builder b("product3d", 3, {}, x_slots(s, {"f"}, 3));
  b.energy("{f}*(y1*y2*y3)^(2/3)");
  b.domain("y1*y2*y3 > 0");
  const std::string P4 = "/(y1*y2*y3)^(4/3)";
  b.g({1, 1}, "-(1/9)*{f}*(y2*y3)^2" + P4);
  b.g({1, 2}, "(2/9)*{f}*y1*y2*y3^2" + P4);
  b.g({1, 3}, "(2/9)*{f}*y1*y2^2*y3" + P4);
  b.g({2, 2}, "-(1/9)*{f}*(y1*y3)^2" + P4);
  b.g({2, 3}, "(2/9)*{f}*y1^2*y2*y3" + P4);
  b.g({3, 3}, "-(1/9)*{f}*(y1*y2)^2" + P4);
  b.expected().g_complete = true;
  const std::string P7 = "/(y1*y2*y3)^(7/3)";
  b.C({1, 1, 1}, "(2/27)*{f}*(y2*y3)^3" + P7);
  b.C({1, 1, 2}, "-(1/27)*{f}*y1*y2^2*y3^3" + P7);
  b.C({1, 1, 3}, "-(1/27)*{f}*y1*y2^3*y3^2" + P7);
  b.C({1, 2, 2}, "-(1/27)*{f}*y1^2*y2*y3^3" + P7);
  b.C({1, 2, 3}, "(2/27)*{f}*(y1*y2*y3)^2" + P7);
  b.C({1, 3, 3}, "-(1/27)*{f}*y1^2*y2^3*y3" + P7);
  b.C({2, 2, 2}, "(2/27)*{f}*(y1*y3)^3" + P7);
  b.C({2, 2, 3}, "-(1/27)*{f}*y1^3*y2*y3^2" + P7);
  b.C({2, 3, 3}, "-(1/27)*{f}*y1^3*y2^2*y3" + P7);
  b.C({3, 3, 3}, "(2/27)*{f}*(y1*y2)^3" + P7);
  b.expected().C_complete = true;
  b.expected().y1_slice_forms.push_back(b.component({1, 2, 3}, "(2/27)*{f}*(y2*y3)^2*y1^3" + P7));
  b.expected().trace_free = true;

  ExpectedContraction obstruction;
  obstruction.name = "B^i C_i11";
  obstruction.B = {1.0, -0.6, 0.35};
  obstruction.j = 0;
  obstruction.k = 0;
  const std::string B1 = number_text(obstruction.B[0]), B2 = number_text(obstruction.B[1]),
                    B3 = number_text(obstruction.B[2]);
  obstruction.value = b.component({}, "(1/27)*{f}*(2*(" + B1 + ")*y2*y3 - (" + B2 + ")*y1*y3 - (" + B3 +
                                          ")*y1*y2)/(y1^2*(y1*y2*y3)^(1/3))");
  b.expected().contractions.push_back(obstruction);
  b.expected().sc_dimension = 0;
  b.expected().notes.push_back("energy is f*(y1*y2*y3)^(2/3) so that g and C are linear in f");
  b.expected().notes.push_back(
      "the reference C_123 carries an extra factor y1; the corrected form is stored and the reference one is "
      "checked on the slice y1 = 1");
  return b.get();
}

Builtin make_conic(const Overrides& o) {
  Settings s("conic_randers_lift", kConicDefaults, o);
  const double eps = s.number("eps");
  MetricSpec H;
  H.dim = 2;
  H.params = {{"eps", eps}};
  H.energy = parse_expression("(sqrt(y1^2 + x1^2*y2^2) + eps*y2)^2", 2, {"eps"});
  H.domain = parse_predicate("y1^2 + y2^2 > 0", 2, {});
  MetricSpec lifted = tachibana_lift(H);

  Builder b("conic_randers_lift", 3, {{"eps", eps}}, {{"R", "y1^2 + x1^2*y2^2"}});
  b.get().spec.energy = lifted.energy;
  b.get().spec.domain = lifted.domain;
  b.g({1, 1},
      "x3^2*(eps*x1^4*y2^5 + eps*x1^2*y1^2*y2^3 + sqrt({R})*(x1^2*y2^2*{R} - x1^2*y1^2*y2^2 + 2*y1^2*{R} - y1^4))"
      "/{R}^(5/2)");
  b.g({2, 2}, "x3^2*(2*eps*x1^4*y2^3 + 3*eps*x1^2*y1^2*y2 + x1^2*{R}^(3/2) + eps^2*{R}^(3/2))/{R}^(3/2)");
  b.g({1, 2}, "eps*x3^2*y1^3/{R}^(3/2)");
  b.g({3, 3}, "1");
  b.expected().g_complete = true;
  b.C({1, 1, 1}, "-(3/2)*eps*x1^2*x3^2*y1*y2^3/{R}^(5/2)");
  b.C({1, 1, 2}, "(3/2)*eps*x1^2*x3^2*y1^2*y2^2/{R}^(5/2)");
  b.C({1, 2, 2}, "-(3/2)*eps*x1^2*x3^2*y1^3*y2/{R}^(5/2)");
  b.C({2, 2, 2}, "(3/2)*eps*x1^2*x3^2*y1^4/{R}^(5/2)");
  b.expected().C_complete = true;
  for (auto& f : tachibana_fields(3, b.get().spec.params)) b.expected().fields.push_back(std::move(f));
  b.expected().sc_dimension = 1;
  b.expected().notes.push_back("domain y1^2 + y2^2 > 0 excludes the axis where the Randers part is singular");
  return b.get();
}

Builtin make_randers(const Overrides& o) {
  Settings s("randers2d", kRandersDefaults, o);
  const double eps = s.number("eps");
  const int n = s.integer("n", 2, 6);
  Builder b("randers2d", n, {{"eps", eps}}, {});
  std::string radicand = "y1^2 + x1^2*y2^2";
  for (int i = 3; i <= n; ++i) radicand += " + y" + std::to_string(i) + "^2";
  b.energy("(sqrt(" + radicand + ") + eps*y2)^2");
  b.domain("y1^2 + y2^2 > 0");
  if (n == 2) b.expected().sc_dimension = 0;
  b.expected().notes.push_back("F = sqrt(y1^2 + x1^2 y2^2 + ...) + eps*y2; n > 2 adds Euclidean directions");
  return b.get();
}

std::map<std::string, double> ex_params(const Settings& s, const std::vector<std::string>& keys) {
  std::map<std::string, double> out;
  for (const auto& k : keys) out[k] = s.number(k);
  if (out.count("A6") && out["A6"] == 0.0) throw CatalogError("A6 must be nonzero");
  return out;
}

Builtin make_ex1(const Overrides& o) {
  Settings s("ex5_1", kEx1Defaults, o);
  Builder b("ex5_1", 4, ex_params(s, {"A5", "A6"}), x_slots(s, {"F5", "F6", "F7", "F8"}, 4));
  b.energy("y4*(A5*y2 + A6*y3) + (A5*y2 + A6*y3)^2 + {F5}*y1^2 + {F6}*y1*y2 + {F7}*y2^2 + {F8}*y4^2");
  const char* g[4][4] = {{"{F5}", "{F6}/2", "0", "0"},
                         {"{F6}/2", "A5^2 + {F7}", "A5*A6", "A5/2"},
                         {"0", "A5*A6", "A6^2", "A6/2"},
                         {"0", "A5/2", "A6/2", "{F8}"}};
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) b.g({i + 1, j + 1}, g[i][j]);
  b.expected().g_complete = true;
  b.expected().C_complete = true;
  b.minor(1, "{F5}");
  b.minor(2, "A5^2*{F5} + {F5}*{F7} - {F6}^2/4");
  b.minor(3, "(A6^2/4)*(4*{F5}*{F7} - {F6}^2)");
  b.minor(4, "(A6^2/16)*(4*{F5}*{F7} - {F6}^2)*(4*{F8} - 1)");
  b.expect_field("sc", Condition::SC, {"0;f;-(A5/A6)*f;0"});
  b.expected().notes.push_back("quadratic energy; positive definite iff F5 > 0, 4 F5 F7 > F6^2 and F8 > 1/4");
  return b.get();
}

Builtin make_ex2(const Overrides& o) {
  Settings s("ex5_2", kEx2Defaults, o);
  Builder b("ex5_2", 4, ex_params(s, {"A6"}), x_slots(s, {"F5", "F6", "F7", "F8"}, 4));
  b.energy("A6*y3*y4 + A6^4*y3^4/y1^2 + {F5}*y1^2 + {F6}*y1*y2 + {F7}*y2^2 + {F8}*y4^2");
  b.domain("y1 != 0");
  const char* g[4][4] = {{"(3*A6^4*y3^4 + {F5}*y1^4)/y1^4", "{F6}/2", "-4*A6^4*y3^3/y1^3", "0"},
                         {"{F6}/2", "{F7}", "0", "0"},
                         {"-4*A6^4*y3^3/y1^3", "0", "6*A6^4*y3^2/y1^2", "A6/2"},
                         {"0", "0", "A6/2", "{F8}"}};
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) b.g({i + 1, j + 1}, g[i][j]);
  b.expected().g_complete = true;
  b.C({1, 1, 1}, "-6*A6^4*y3^4/y1^5");
  b.C({1, 1, 3}, "6*A6^4*y3^3/y1^4");
  b.C({1, 3, 3}, "-6*A6^4*y3^2/y1^3");
  b.C({3, 3, 3}, "6*A6^4*y3/y1^2");
  b.expected().C_complete = true;
  b.minor(1, "(3*A6^4*y3^4 + {F5}*y1^4)/y1^4");
  b.minor(2, "(12*A6^4*{F7}*y3^4 + 4*{F5}*{F7}*y1^4 - {F6}^2*y1^4)/(4*y1^4)");
  b.minor(3, "A6^4*y3^2*(4*A6^4*{F7}*y3^4 + 12*{F5}*{F7}*y1^4 - 3*{F6}^2*y1^4)/(2*y1^6)");
  b.minor(4,
          "A6^2*(32*A6^6*{F7}*{F8}*y3^6 - 12*A6^4*{F7}*y1^2*y3^4 + 96*A6^2*{F5}*{F7}*{F8}*y1^4*y3^2"
          " - 24*A6^2*{F6}^2*{F8}*y1^4*y3^2 - 4*{F5}*{F7}*y1^6 + {F6}^2*y1^6)/(16*y1^6)");
  b.expect_field("sc", Condition::SC, {"0;f;0;0"});
  b.expected().sc_dimension = 1;
  b.expected().notes.push_back("reference minors take F5 = 5; the stored minors keep F5 general");
  b.expected().notes.push_back("reference third minor is incorrect; the stored one is the determinant of g");
  b.expected().notes.push_back("C_4ij vanishes identically, so e4 is semi-concurrent as well as e2");
  return b.get();
}

Builtin make_ex3(const Overrides& o) {
  Settings s("ex5_3", kEx3Defaults, o);
  Builder b("ex5_3", 4, ex_params(s, {"A5", "A6"}), x_slots(s, {"F1", "F5", "F6", "F7", "F8"}, 4));
  b.energy(
      "({F1}*y2 + y4)*(A5*y2 + A6*y3)^2/y1 - (A5*y2 + A6*y3)*y1 + {F5}*y1^2 + {F6}*y1*y2 + {F7}*y2^2 + "
      "{F8}*y4^2");
  b.domain("y1 != 0");
  b.g({1, 1},
      "(A5^2*{F1}*y2^3 + A5^2*y2^2*y4 + 2*A5*A6*{F1}*y2^2*y3 + 2*A5*A6*y2*y3*y4 + A6^2*{F1}*y2*y3^2 + "
      "A6^2*y3^2*y4 + {F5}*y1^3)/y1^3");
  b.g({1, 2},
      "-(3*A5^2*{F1}*y2^2 + 2*A5^2*y2*y4 + 4*A5*A6*{F1}*y2*y3 + 2*A5*A6*y3*y4 + A5*y1^2 + A6^2*{F1}*y3^2 - "
      "{F6}*y1^2)/(2*y1^2)");
  b.g({2, 2}, "(3*A5^2*{F1}*y2 + 2*A5*A6*{F1}*y3 + A5^2*y4 + {F7}*y1)/y1");
  b.g({1, 3}, "-A6*(2*A5*{F1}*y2^2 + 2*A6*{F1}*y2*y3 + 2*A5*y2*y4 + 2*A6*y3*y4 + y1^2)/(2*y1^2)");
  b.g({2, 3}, "A6*(2*A5*{F1}*y2 + A6*{F1}*y3 + A5*y4)/y1");
  b.g({1, 4}, "-(A5*y2 + A6*y3)^2/(2*y1^2)");
  b.g({2, 4}, "A5*(A5*y2 + A6*y3)/y1");
  b.g({3, 3}, "A6^2*({F1}*y2 + y4)/y1");
  b.g({3, 4}, "A6*(A5*y2 + A6*y3)/y1");
  b.g({4, 4}, "{F8}");
  b.expected().g_complete = true;
  b.C({1, 1, 1},
      "-(3/2)*(A5*y2^2*({F1}*(A5*y2 + 2*A6*y3) + A5*y4) + A6^2*y3^2*({F1}*y2 + y4) + 2*A5*A6*y2*y3*y4)/y1^4");
  b.C({1, 1, 2},
      "(3*A5^2*{F1}*y2^2 + 4*A5*A6*{F1}*y2*y3 + A6^2*{F1}*y3^2 + 2*A5^2*y2*y4 + 2*A5*A6*y3*y4)/(2*y1^3)");
  b.C({1, 1, 3}, "A6*(A5*{F1}*y2^2 + A6*{F1}*y2*y3 + A5*y2*y4 + A6*y3*y4)/y1^3");
  b.C({1, 2, 2}, "-A5*(3*A5*{F1}*y2 + 2*A6*{F1}*y3 + A5*y4)/(2*y1^2)");
  b.C({1, 2, 3}, "-A6*(2*A5*{F1}*y2 + A6*{F1}*y3 + A5*y4)/(2*y1^2)");
  b.C({1, 2, 4}, "-A5*(A5*y2 + A6*y3)/(2*y1^2)");
  b.C({1, 3, 3}, "-A6^2*({F1}*y2 + y4)/(2*y1^2)");
  b.C({1, 3, 4}, "-A6*(A5*y2 + A6*y3)/(2*y1^2)");
  b.C({2, 2, 2}, "(3/2)*A5^2*{F1}/y1");
  b.C({2, 2, 3}, "A6*A5*{F1}/y1");
  b.C({2, 2, 4}, "A5^2/(2*y1)");
  b.C({2, 3, 3}, "A6^2*{F1}/(2*y1)");
  b.C({2, 3, 4}, "A6*A5/(2*y1)");
  b.C({1, 1, 4}, "(A5^2*y2^2 + 2*A5*A6*y2*y3 + A6^2*y3^2)/(2*y1^3)");
  b.C({3, 3, 4}, "A6^2/(2*y1)");
  b.expected().C_complete = true;
  b.expect_field("sc", Condition::SC, {"0;f;-(A5/A6)*f;-f*{F1}"});
  b.expected().sc_dimension = 1;
  b.expected().notes.push_back("reference g11 and g12 are incorrect; the stored forms are the Hessian of the energy");
  return b.get();
}

}  // namespace

std::vector<CatalogEntry> catalog_list() {
  return {
      {"conic_randers_lift", "y3^2 + x3^2 (sqrt(y1^2 + x1^2 y2^2) + eps y2)^2, a conic metric with a concurrent field",
       kConicDefaults},
      {"euclidean_n", "sum of y_i^2 in dimension n", kEuclidDefaults},
      {"ex5_1", "quadratic member of the general 4-D family", kEx1Defaults},
      {"ex5_2", "conic member of the general 4-D family with SC field e2", kEx2Defaults},
      {"ex5_3", "conic member of the general 4-D family with SC field (0, 1, -A5/A6, -F1)", kEx3Defaults},
      {"product3d", "f(x) (y1 y2 y3)^(2/3): C_i = 0 but not Riemannian", kProductDefaults},
      {"randers2d", "(sqrt(y1^2 + x1^2 y2^2) + eps y2)^2", kRandersDefaults},
  };
}

bool is_builtin(const std::string& name) {
  const auto list = catalog_list();
  return std::any_of(list.begin(), list.end(), [&](const CatalogEntry& e) { return e.name == name; });
}

Builtin builtin(const std::string& name, const Overrides& overrides) {
  if (name == "euclidean_n") return make_euclidean(overrides);
  if (name == "product3d") return make_product3d(overrides);
  if (name == "conic_randers_lift") return make_conic(overrides);
  if (name == "randers2d") return make_randers(overrides);
  if (name == "ex5_1") return make_ex1(overrides);
  if (name == "ex5_2") return make_ex2(overrides);
  if (name == "ex5_3") return make_ex3(overrides);
  throw CatalogError("unknown catalog metric '" + name + "'");
}

MetricSpec tachibana_lift(const MetricSpec& H) {
  if (H.dim < 1) throw std::invalid_argument("tachibana_lift: H must have dim >= 1");
  const VariableUsage use = variable_usage(H.energy);
  if (use.x_count > H.dim || use.y_count > H.dim) {
    throw std::invalid_argument("tachibana_lift: H references coordinates beyond its dimension");
  }
  const int n = H.dim + 1;
  MetricSpec out;
  out.dim = n;
  out.params = H.params;
  out.domain = H.domain;
  out.energy = pow(Expr::y(n - 1), 2) + pow(Expr::x(n - 1), 2) * H.energy;
  out.label = H.label.empty() ? "" : "lift of " + H.label;
  return out;
}

std::vector<ExpectedField> tachibana_fields(int n, const std::map<std::string, double>& params) {
  auto with_f = params;
  with_f["f"] = 1.0;
  std::string zeros;
  for (int i = 1; i < n; ++i) zeros += "0;";
  const std::string xn = "x" + std::to_string(n);
  ExpectedField sc{"sc", Condition::SC, {VectorFieldSpec::parse(zeros + "f", n, with_f)}};
  ExpectedField c{"concurrent",
                  Condition::C,
                  {VectorFieldSpec::parse(zeros + xn, n, params), VectorFieldSpec::parse(zeros + "-" + xn, n, params)}};
  sc.alternatives[0].label = "sc";
  c.alternatives[0].label = "concurrent(+)";
  c.alternatives[1].label = "concurrent(-)";
  return {sc, c};
}

Builtin general_form_4d(const GeneralForm4DParams& p) {
  const double A5 = p.A[4], A6 = p.A[5];
  if (A6 == 0.0 && A5 != 0.0) throw CatalogError("general_form_4d: A6 = 0 with A5 != 0");
  std::map<std::string, double> params;
  for (int i = 0; i < 7; ++i) params["A" + std::to_string(i + 1)] = p.A[i];
  const auto names = names_of(params);
  auto with_u = names;
  with_u.insert("u");

  auto x_only = [&](int i) {
    const Expr e = parse_expression(p.F[i], 4, names);
    if (variable_usage(e).y_count > 0) throw CatalogError("F" + std::to_string(i + 1) + " must not use y");
    return e;
  };
  auto shape = [&](int i, bool allow_x, const Expr& u) {
    const Expr e = parse_expression(p.F[i], 4, with_u);
    const VariableUsage use = variable_usage(e);
    if (use.y_count > 0 || (!allow_x && use.x_count > 0)) {
      throw CatalogError("F" + std::to_string(i + 1) + (allow_x ? " must not use y" : " must depend on u only"));
    }
    return substitute_params(e, {{"u", u}});
  };

  const Expr u = parse_expression("((A1*x1 + A2*x2 + A3*x3 + A4*x4 + A7)*y1 + A5*y2 + A6*y3)/y1", 4, names);
  const Expr v = parse_expression("-(A5*y2 + A6*y3)/y1", 4, names);
  const Expr y1 = Expr::y(0), y2 = Expr::y(1), y3 = Expr::y(2), y4 = Expr::y(3);
  const Expr F1 = x_only(0), F4 = x_only(3), F5 = x_only(4), F6 = x_only(5), F7 = x_only(6), F8 = x_only(7);
  const Expr F2 = shape(1, false, u), F3 = shape(2, true, v);

  Builtin b;
  b.name = "general_form_4d";
  b.spec.dim = 4;
  b.spec.params = params;
  b.spec.label = b.name;
  b.spec.energy = y1 * (F1 * y2 + y4) * F2 + F3 * pow(y1, 2) -
                  F4 * (Expr::param("A5") * pow(y2, 2) + Expr::param("A6") * y2 * y3) + F5 * pow(y1, 2) +
                  F6 * y1 * y2 + F7 * pow(y2, 2) + F8 * pow(y4, 2);
  b.spec.domain = parse_predicate("y1 != 0", 4, {});

  auto with_f = params;
  with_f["f"] = 1.0;
  const std::string b3 = A6 == 0.0 ? "0" : "-(A5/A6)*f";
  ExpectedField sc{"sc", Condition::SC, {VectorFieldSpec::parse("0;f;" + b3 + ";-f*(" + p.F[0] + ")", 4, with_f)}};
  sc.alternatives[0].label = "sc";
  b.expected.fields.push_back(std::move(sc));
  return b;
}

namespace {

struct PointData {
  std::vector<double> computed;  // g, C, minors, contractions, slice values, in expectation order
  std::vector<double> expected;
  std::vector<double> floor;
  double unlisted_g = 0.0;
  double unlisted_C = 0.0;
  std::vector<double> listed_C_magnitude;
  double trace = 0.0;
  std::vector<double> obstruction_size;
};

std::string index_text(const std::vector<int>& idx) {
  std::string s;
  for (int i : idx) s += std::to_string(i + 1);
  return s;
}

bool listed(const std::vector<ExpectedComponent>& list, std::vector<int> idx) {
  std::sort(idx.begin(), idx.end());
  for (const auto& c : list) {
    auto k = c.index;
    std::sort(k.begin(), k.end());
    if (k == idx) return true;
  }
  return false;
}

}  // namespace

VerificationReport verify_example(const std::string& name, double tol, const Overrides& overrides) {
  VerificationReport r;
  r.example = name;
  r.tol = tol;
  Builtin b;
  try {
    b = builtin(name, overrides);
  } catch (const std::exception& e) {
    r.entries.push_back({"builtin", "check", 0.0, tol, false, e.what()});
    return r;
  }
  return verify_builtin(b, tol);
}

VerificationReport verify_builtin(const Builtin& b, double tol) {
  VerificationReport r;
  r.example = b.name;
  r.tol = tol;
  const ExpectedArtifacts& ex = b.expected;
  const MetricModel model(b.spec);
  const int n = b.spec.dim;

  std::vector<TangentSample> pts;
  try {
    Sampler sampler(0);
    pts = sample_points(model, sampler, 50, SampleBox{});
  } catch (const std::exception& e) {
    r.entries.push_back({"sampling", "check", 0.0, tol, false, e.what()});
    return r;
  }
  r.points = static_cast<int>(pts.size());

  // Expected-value programs: g, C, minors, contraction values, slice values.
  std::vector<Expr> roots;
  for (const auto& c : ex.g) roots.push_back(c.expr);
  for (const auto& c : ex.C) roots.push_back(c.expr);
  for (const auto& c : ex.minors) roots.push_back(c.expr);
  for (const auto& c : ex.contractions) roots.push_back(c.value.expr);
  const std::size_t slice_offset = roots.size();
  for (const auto& c : ex.y1_slice_forms) roots.push_back(c.expr);
  const Program program(roots, b.spec.params);

  std::vector<PointData> data(pts.size());
  parallel_for(pts.size(), [&](std::size_t p) {
    const auto& x = pts[p].x;
    const auto& y = pts[p].y;
    PointData& d = data[p];
    const FundamentalBundle fb = fundamental_bundle(model, x, y);
    std::vector<double> scratch, vals(roots.size());
    program.evaluate(x, y, vals, scratch);
    const double gmax = fb.g.max_abs();
    const double cmax = std::max(fb.C.max_abs(), fb.cartan_scale());
    std::size_t at = 0;
    for (const auto& c : ex.g) {
      d.computed.push_back(fb.g(c.index[0], c.index[1]));
      d.expected.push_back(vals[at++]);
      d.floor.push_back(1e-6 * gmax);
    }
    for (const auto& c : ex.C) {
      d.computed.push_back(fb.C(c.index[0], c.index[1], c.index[2]));
      d.expected.push_back(vals[at++]);
      d.floor.push_back(1e-6 * cmax);
      d.listed_C_magnitude.push_back(std::fabs(d.computed.back()) / fb.cartan_scale());
    }
    const auto minors = leading_minors(fb.g);
    for (const auto& c : ex.minors) {
      const int m = c.index[0];
      d.computed.push_back(minors[m]);
      d.expected.push_back(vals[at++]);
      d.floor.push_back(1e-6 * std::pow(gmax, m + 1));
    }
    for (const auto& c : ex.contractions) {
      double v = 0.0, bmax = 0.0;
      for (int i = 0; i < n; ++i) {
        v += c.B[i] * fb.C(i, c.j, c.k);
        bmax = std::max(bmax, std::fabs(c.B[i]));
      }
      d.computed.push_back(v);
      d.expected.push_back(vals[at++]);
      d.floor.push_back(1e-6 * bmax * cmax);
      d.obstruction_size.push_back(std::fabs(v) / (bmax * fb.cartan_scale()));
    }
    if (!ex.y1_slice_forms.empty() && y[0] > 0) {
      std::vector<double> ys(y);
      for (double& v : ys) v /= y[0];
      if (model.in_domain(x, ys)) {
        const FundamentalBundle fs = fundamental_bundle(model, x, ys);
        std::vector<double> svals(roots.size());
        program.evaluate(x, ys, svals, scratch);
        for (std::size_t s = 0; s < ex.y1_slice_forms.size(); ++s) {
          const auto& idx = ex.y1_slice_forms[s].index;
          d.computed.push_back(fs.C(idx[0], idx[1], idx[2]));
          d.expected.push_back(svals[slice_offset + s]);
          d.floor.push_back(1e-6 * std::max(fs.C.max_abs(), fs.cartan_scale()));
        }
      }
    }
    if (ex.g_complete)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          if (!listed(ex.g, {i, j})) d.unlisted_g = std::max(d.unlisted_g, std::fabs(fb.g(i, j)) / gmax);
    if (ex.C_complete)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
          for (int k = j; k < n; ++k)
            if (!listed(ex.C, {i, j, k}))
              d.unlisted_C = std::max(d.unlisted_C, std::fabs(fb.C(i, j, k)) / fb.cartan_scale());
    if (ex.trace_free) d.trace = fb.C_vec.max_abs() * fb.F / (fb.g_inv.max_abs() * gmax * n);
  });

  auto deviation_entry = [&](const std::string& entry_name, const std::string& kind, std::size_t slot) {
    VerificationEntry e{entry_name, kind, 0.0, tol, true, ""};
    int evaluated = 0;
    for (const auto& d : data) {
      if (slot >= d.computed.size()) continue;
      const double denom = std::max({std::fabs(d.expected[slot]), d.floor[slot], 1e-300});
      const double dev = std::fabs(d.computed[slot] - d.expected[slot]) / denom;
      e.max_deviation = std::isnan(dev) ? INFINITY : std::max(e.max_deviation, dev);
      ++evaluated;
    }
    e.passed = evaluated > 0 && e.max_deviation <= tol;
    if (evaluated == 0) e.detail = "no samples";
    r.entries.push_back(e);
  };

  std::size_t slot = 0;
  for (const auto& c : ex.g) deviation_entry("g_" + index_text(c.index), "component", slot++);
  for (const auto& c : ex.C) deviation_entry("C_" + index_text(c.index), "component", slot++);
  for (const auto& c : ex.minors) deviation_entry("minor_" + std::to_string(c.index[0] + 1), "minor", slot++);
  for (const auto& c : ex.contractions) deviation_entry(c.name, "component", slot++);
  for (const auto& c : ex.y1_slice_forms)
    deviation_entry("C_" + index_text(c.index) + "_on_y1_slice", "component", slot++);

  auto worst = [&](auto member) {
    double w = 0.0;
    for (const auto& d : data) w = std::max(w, d.*member);
    return w;
  };
  if (ex.g_complete) {
    const double w = worst(&PointData::unlisted_g);
    r.entries.push_back({"g_unlisted_vanish", "check", w, tol, w <= tol, ""});
  }
  if (ex.C_complete) {
    const double w = worst(&PointData::unlisted_C);
    r.entries.push_back({"C_unlisted_vanish", "check", w, tol, w <= tol, ""});
    if (!ex.C.empty()) {
      double smallest = INFINITY;
      for (std::size_t c = 0; c < ex.C.size(); ++c) {
        double biggest = 0.0;
        for (const auto& d : data) biggest = std::max(biggest, d.listed_C_magnitude[c]);
        smallest = std::min(smallest, biggest);
      }
      r.entries.push_back({"C_listed_nonzero", "check", smallest, 1e-9, smallest > 1e-9,
                           "smallest over listed components of the largest scaled magnitude"});
    }
  }
  if (ex.trace_free) {
    const double w = worst(&PointData::trace);
    r.entries.push_back({"C_trace_vanishes", "check", w, tol, w <= tol, ""});
  }
  for (std::size_t c = 0; c < ex.contractions.size(); ++c) {
    double smallest = INFINITY;
    for (const auto& d : data) smallest = std::min(smallest, d.obstruction_size[c]);
    r.entries.push_back({ex.contractions[c].name + "_nonzero", "check", smallest, 1e-6, smallest > 1e-6,
                         "evidence that no semi-concurrent field exists"});
  }

  for (const auto& f : ex.fields) {
    VerificationEntry e{"field_" + f.name, "field", INFINITY, tol, false, ""};
    for (const auto& alt : f.alternatives) {
      try {
        const ConditionReport cr = check_condition(model, alt, f.condition, pts, tol);
        const double res = std::max(cr.residual, cr.cvf_residual);
        if (cr.passed && !e.passed) e.detail = alt.to_text() + " passes " + to_string(f.condition);
        if (res < e.max_deviation) e.max_deviation = res;
        e.passed = e.passed || cr.passed;
      } catch (const std::exception& err) {
        e.detail = err.what();
      }
    }
    if (!e.passed && e.detail.empty()) e.detail = "no alternative passes " + to_string(f.condition);
    r.entries.push_back(e);
  }

  if (ex.sc_dimension) {
    VerificationEntry e{"sc_dimension", "check", 0.0, 0.0, false, ""};
    try {
      const SCFieldReport sr = sc_detect(model, SCOptions{});
      e.max_deviation = std::abs(sr.consistent_dimension - *ex.sc_dimension);
      e.passed = sr.consistent_dimension == *ex.sc_dimension;
      e.detail = "detected " + std::to_string(sr.consistent_dimension) + ", expected " +
                 std::to_string(*ex.sc_dimension);
    } catch (const std::exception& err) {
      e.detail = err.what();
    }
    r.entries.push_back(e);
  }

  r.passed = std::all_of(r.entries.begin(), r.entries.end(), [](const VerificationEntry& e) { return e.passed; });
  return r;
}

}  // namespace finslerlab
