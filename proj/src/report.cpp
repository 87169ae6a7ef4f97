#include "finslerlab/report.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <cstdio>

namespace finslerlab {

namespace {

std::string number_text(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write(const Json& v, int depth, std::string& out) {
  const std::string pad(2 * depth + 2, ' ');
  const std::string close(2 * depth, ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // nlohmann::json keeps keys sorted
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        write(it.value(), depth + 1, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write(v[i], depth + 1, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float:
      out += number_text(v.get<double>());
      return;
    default:
      out += v.dump();
  }
}

void flatten(const Json& v, const std::string& path, std::string& out) {
  if (v.is_object() && !v.empty()) {
    for (auto it = v.begin(); it != v.end(); ++it) flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
    return;
  }
  if (v.is_array() && !v.empty()) {
    const bool scalars = std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_primitive(); });
    if (scalars) {
      out += path + ": ";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += " ";
        out += v[i].is_number_float() ? number_text(v[i].get<double>()) : v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
      }
      out += "\n";
      return;
    }
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], path + "[" + std::to_string(i) + "]", out);
    return;
  }
  out += path + ": ";
  if (v.is_number_float()) out += number_text(v.get<double>());
  else if (v.is_string()) out += v.get<std::string>();
  else out += v.dump();
  out += "\n";
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string dump_json(const Json& value) {
  std::string out;
  write(value, 0, out);
  out += "\n";
  return out;
}

std::string dump_text(const Json& value) {
  std::string out;
  flatten(value, "", out);
  return out;
}

Json to_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double d : v) a.push_back(d);
  return a;
}

Json to_json(const Tensor& t) {
  if (t.rank() == 0) return t.data()[0];
  std::function<Json(int, std::size_t)> level = [&](int r, std::size_t offset) -> Json {
    Json a = Json::array();
    std::size_t stride = 1;
    for (int k = r + 1; k < t.rank(); ++k) stride *= static_cast<std::size_t>(t.dim());
    for (int i = 0; i < t.dim(); ++i) {
      const std::size_t at = offset + static_cast<std::size_t>(i) * stride;
      if (r + 1 == t.rank()) a.push_back(t.data()[at]);
      else a.push_back(level(r + 1, at));
    }
    return a;
  };
  return level(0, 0);
}

Json to_json(const ClassificationReport& r) {
  Json points = Json::array();
  for (const auto& p : r.points) {
    Json j;
    j["x"] = to_json(p.x);
    j["y"] = to_json(p.y);
    j["F"] = p.F;
    j["riemannian_residual"] = p.riemannian_residual;
    j["berwald_residual"] = p.berwald_residual;
    j["landsberg_residual"] = p.landsberg_residual;
    j["c_reducible_residual"] = optional_number(p.c_reducible_residual);
    j["c2like_residual"] = optional_number(p.c2like_residual);
    j["semi_c"] = p.semi_c.defined
                      ? Json{{"r", p.semi_c.r},
                             {"t", p.semi_c.t},
                             {"residual", p.semi_c.residual},
                             {"degenerate_split", p.semi_c.degenerate_split}}
                      : Json(nullptr);
    j["reversible_residual"] = optional_number(p.reversible_residual);
    j["main_scalar"] = optional_number(p.main_scalar_2d);
    j["main_scalar_residual"] = optional_number(p.main_scalar_residual);
    j["cartan_scale"] = p.cartan_scale;
    j["landsberg_scale"] = p.landsberg_scale;
    points.push_back(std::move(j));
  }
  Json verdicts = Json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back(
        {{"name", v.name}, {"status", v.status}, {"worst", v.worst}, {"threshold", v.threshold}, {"evaluated", v.evaluated}});
  }
  return {{"seed", r.options.seed}, {"n_points", r.options.n_points}, {"tol", r.options.tol},
          {"points", points},        {"verdicts", verdicts}};
}

Json to_json(const SCFieldReport& r) {
  Json per_x = Json::array();
  for (const auto& p : r.per_x) {
    Json basis = Json::array();
    for (const auto& b : p.nullspace.basis) basis.push_back(to_json(b));
    per_x.push_back({{"x", to_json(p.x)},
                     {"basis", basis},
                     {"singular_values", to_json(p.nullspace.singular_values)},
                     {"sigma_max", p.nullspace.sigma_max},
                     {"c_zero", p.nullspace.c_zero},
                     {"samples", p.nullspace.samples},
                     {"local_dimension", p.local_dimension},
                     {"soundness_residual", p.soundness_residual},
                     {"lambda_y_variation", optional_number(p.lambda_y_variation)},
                     {"frobenius_defect", optional_number(p.frobenius_defect)}});
  }
  Json j{{"per_x", per_x},
         {"consistent_dimension", r.consistent_dimension},
         {"c_zero_everywhere", r.c_zero_everywhere},
         {"candidate_field", r.candidate_field ? Json(*r.candidate_field) : Json("none")},
         {"candidate_text", r.candidate_text ? Json(*r.candidate_text) : Json(nullptr)},
         {"gradient_flag", r.gradient_flag ? Json(*r.gradient_flag) : Json(nullptr)}};
  return j;
}

Json to_json(const ConditionReport& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    Json j{{"x", to_json(s.x)}, {"y", to_json(s.y)}, {"residual", s.residual}};
    if (r.condition == Condition::C) j["cvf_residual"] = s.cvf_residual;
    samples.push_back(std::move(j));
  }
  Json j{{"condition", to_string(r.condition)},
         {"tol", r.tol},
         {"residual", r.residual},
         {"passed", r.passed},
         {"samples", samples}};
  if (r.condition == Condition::C) j["cvf_residual"] = r.cvf_residual;
  return j;
}

Json to_json(const InvariantsReport& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"x", to_json(s.x)},
                       {"y", to_json(s.y)},
                       {"B0", s.B0},
                       {"B2F2_minus_B02", s.B2F2_minus_B02},
                       {"det_h_cov", s.det_h_cov},
                       {"B0_small", s.B0_small},
                       {"gram_small", s.gram_small}});
  }
  return {{"samples", samples}, {"any_flagged", r.any_flagged}};
}

Json to_json(const VerificationReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name},
                       {"kind", e.kind},
                       {"max_deviation", e.max_deviation},
                       {"threshold", e.threshold},
                       {"passed", e.passed},
                       {"detail", e.detail}});
  }
  return {{"example", r.example}, {"tol", r.tol}, {"points", r.points}, {"entries", entries}, {"passed", r.passed}};
}

Json to_json(const CatalogEntry& e) {
  Json defaults = Json::object();
  for (const auto& [k, v] : e.defaults) defaults[k] = v;
  return {{"name", e.name}, {"description", e.description}, {"defaults", defaults}};
}

}  // namespace finslerlab
