#include "finslerlab/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "finslerlab/catalog.hpp"
#include "finslerlab/classify.hpp"
#include "finslerlab/fundamental.hpp"
#include "finslerlab/report.hpp"
#include "finslerlab/scfield.hpp"

namespace finslerlab {

namespace {

/// Bad input detected after argument parsing; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string metric;
  std::string example;
  std::vector<std::string> points;
  std::vector<std::string> xs;
  std::vector<std::string> tensors;
  std::vector<std::string> sets;
  std::string field;
  std::string kind = "sc";
  std::string potential;
  std::uint64_t seed = 0;
  double tol = 0.0;
  bool tol_given = false;
  int xsamples = 0;
  bool xsamples_given = false;
  int ysamples = 0;
  std::string format = "json";
  std::string out;
};

struct LoadedMetric {
  MetricSpec spec;
  std::optional<Builtin> builtin;
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    char* end = nullptr;
    const double d = std::strtod(part.c_str(), &end);
    while (end && *end == ' ') ++end;
    if (part.empty() || *end != '\0') throw UsageError("bad number '" + part + "' in " + what);
    v.push_back(d);
  }
  if (v.empty()) throw UsageError("empty list in " + what);
  return v;
}

TangentSample parse_point(const std::string& text, int dim) {
  TangentSample s;
  bool have_x = false, have_y = false;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw UsageError("point '" + text + "': expected x=...;y=...");
    std::string key = part.substr(0, eq);
    key.erase(0, key.find_first_not_of(' '));
    key.erase(key.find_last_not_of(' ') + 1);
    if (key == "x") {
      s.x = parse_list(part.substr(eq + 1), "point '" + text + "'");
      have_x = true;
    } else if (key == "y") {
      s.y = parse_list(part.substr(eq + 1), "point '" + text + "'");
      have_y = true;
    } else {
      throw UsageError("point '" + text + "': unknown key '" + key + "'");
    }
  }
  if (!have_x || !have_y) throw UsageError("point '" + text + "' needs both x and y");
  if (static_cast<int>(s.x.size()) != dim || static_cast<int>(s.y.size()) != dim) {
    throw UsageError("point '" + text + "' does not have " + std::to_string(dim) + " coordinates");
  }
  return s;
}

Overrides parse_sets(const std::vector<std::string>& sets) {
  Overrides o;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return o;
}

LoadedMetric load_metric(const RunConfig& cfg) {
  const std::string& source = cfg.metric.empty() ? cfg.example : cfg.metric;
  if (source.empty()) throw UsageError("a metric is required (--metric PATH|NAME or --example NAME)");
  if (!cfg.metric.empty() && !cfg.example.empty()) throw UsageError("give either --metric or --example, not both");
  std::error_code ec;
  if (cfg.example.empty() && std::filesystem::is_regular_file(source, ec)) {
    if (!cfg.sets.empty()) throw UsageError("--set applies to catalog metrics only");
    std::ifstream in(source);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      return {parse_metric(buf.str()), std::nullopt};
    } catch (const ParseError& e) {
      throw UsageError(source + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what());
    }
  }
  if (!is_builtin(source)) throw UsageError("'" + source + "' is neither a metric file nor a catalog name");
  Builtin b = builtin(source, parse_sets(cfg.sets));
  MetricSpec spec = b.spec;
  return {std::move(spec), std::move(b)};
}

std::vector<TangentSample> samples_for(const RunConfig& cfg, const MetricModel& model, int default_count) {
  std::vector<TangentSample> pts;
  for (const auto& p : cfg.points) pts.push_back(parse_point(p, model.dim()));
  if (pts.empty()) {
    Sampler sampler(cfg.seed);
    pts = sample_points(model, sampler, cfg.xsamples_given ? cfg.xsamples : default_count, SampleBox{});
  }
  return pts;
}

Json tensor_map(const PointGeometry& p, const std::vector<std::string>& names) {
  Json out = Json::object();
  for (const auto& name : names) {
    const bool all = name == "all";
    bool known = all;
    auto put = [&](const char* key, const Tensor& t) {
      if (all || name == key) {
        out[key] = to_json(t);
        known = true;
      }
    };
    put("metric", p.fb.g);
    put("inverse", p.fb.g_inv);
    put("cartan", p.fb.C);
    put("cartan_trace", p.fb.C_vec);
    put("angular", p.fb.h);
    put("spray", p.cb.G);
    put("nonlinear", p.cb.N);
    put("berwald_connection", p.cb.G_conn);
    put("berwald", p.cb.G_tensor);
    put("christoffel", p.cb.Gamma);
    put("landsberg", p.cb.L);
    put("t4", p.cb.T4);
    put("t2", p.cb.T2);
    if (!known) throw UsageError("unknown tensor '" + name + "'");
  }
  return out;
}

Json domain_json(const DomainStatus& d) {
  return {{"in_domain", d.in_domain},
          {"smooth", d.smooth},
          {"nondegenerate", d.nondegenerate},
          {"positive_definite", d.positive_definite},
          {"leading_minors", to_json(d.leading_minors)},
          {"detail", d.detail}};
}

Json verdict(const std::string& name, bool passed, double residual) {
  return {{"name", name}, {"status", passed ? "pass" : "fail"}, {"worst", residual}};
}

struct Outcome {
  Json results;
  Json verdicts = Json::array();
  int code = 0;
};

Outcome cmd_eval(const RunConfig& cfg) {
  const LoadedMetric m = load_metric(cfg);
  const MetricModel model(m.spec);
  if (cfg.points.empty()) throw UsageError("eval needs at least one --point");
  std::vector<TangentSample> pts;
  for (const auto& p : cfg.points) pts.push_back(parse_point(p, model.dim()));
  const std::vector<std::string> names = cfg.tensors.empty() ? std::vector<std::string>{"metric"} : cfg.tensors;
  Outcome o;
  o.results = {{"points", Json::array()}};
  for (const auto& s : pts) {
    Json j{{"x", to_json(s.x)}, {"y", to_json(s.y)}};
    const DomainStatus ds = domain_probe(model, s.x, s.y);
    j["domain"] = domain_json(ds);
    try {
      const PointGeometry p = point_geometry(model, s.x, s.y);
      j["F"] = p.fb.F;
      j["tensors"] = tensor_map(p, names);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      j["error"] = e.what();
      o.code = 1;
    }
    o.results["points"].push_back(std::move(j));
  }
  return o;
}

Outcome cmd_classify(const RunConfig& cfg) {
  const LoadedMetric m = load_metric(cfg);
  const MetricModel model(m.spec);
  ClassifyOptions opts;
  opts.seed = cfg.seed;
  if (cfg.xsamples_given) opts.n_points = cfg.xsamples;
  if (cfg.tol_given) opts.tol = cfg.tol;
  const ClassificationReport r = classify_metric(model, opts);
  Outcome o;
  o.results = to_json(r);
  o.verdicts = o.results["verdicts"];
  o.results.erase("verdicts");
  return o;
}

std::vector<CandidateField> candidates_of(const LoadedMetric& m) {
  std::vector<CandidateField> out;
  if (!m.builtin) return out;
  for (const auto& f : m.builtin->expected.fields)
    if (f.condition == Condition::SC)
      for (const auto& alt : f.alternatives) out.push_back({m.builtin->name + ":" + f.name, alt});
  return out;
}

Outcome cmd_scfind(const RunConfig& cfg) {
  const LoadedMetric m = load_metric(cfg);
  const MetricModel model(m.spec);
  SCOptions opts;
  opts.seed = cfg.seed;
  if (cfg.xsamples_given) opts.xsamples = cfg.xsamples;
  opts.ysamples = cfg.ysamples;
  if (cfg.tol_given) opts.tol = cfg.tol;
  const auto cands = candidates_of(m);
  SCFieldReport r;
  if (!cfg.xs.empty()) {
    std::vector<std::vector<double>> xs;
    for (const auto& x : cfg.xs) {
      xs.push_back(parse_list(x, "--x"));
      if (static_cast<int>(xs.back().size()) != model.dim()) throw UsageError("--x needs " + std::to_string(model.dim()) + " values");
    }
    r = sc_detect(model, xs, opts, cands);
  } else {
    r = sc_detect(model, opts, cands);
  }
  Outcome o;
  o.results = to_json(r);
  if (r.candidate_field) {
    for (const auto& c : cands) {
      if (c.name != *r.candidate_field) continue;
      Sampler sampler(cfg.seed);
      const auto pts = sample_points(model, sampler, 20, SampleBox{});
      const ConditionReport cr = check_condition(model, c.field, Condition::SC, pts, opts.tol);
      o.results["residual_stats"] = {{"sc", to_json(cr)}};
      o.results["invariants_check"] = to_json(independence_invariants(model, c.field, pts, opts.tol));
      break;
    }
  }
  return o;
}

Outcome cmd_check(const RunConfig& cfg) {
  const LoadedMetric m = load_metric(cfg);
  const MetricModel model(m.spec);
  Condition cond;
  try {
    cond = parse_condition(cfg.kind);
  } catch (const std::exception&) {
    throw UsageError("--kind must be sc, c, f or cc");
  }
  auto params = m.spec.params;
  VectorFieldSpec field;
  if (!cfg.potential.empty()) {
    const FieldKind kind = cond == Condition::CC ? FieldKind::Conformal : FieldKind::Gradient;
    field = VectorFieldSpec::gradient_of(cfg.potential, model.dim(), params, kind);
  } else if (!cfg.field.empty()) {
    field = VectorFieldSpec::parse(cfg.field, model.dim(), params,
                                   cond == Condition::C ? FieldKind::Concurrent : FieldKind::Generic);
  } else {
    throw UsageError("check needs --field or --potential");
  }
  if ((cond == Condition::F || cond == Condition::CC) && !field.potential) {
    throw UsageError("kind " + cfg.kind + " requires --potential");
  }
  const double tol = cfg.tol_given ? cfg.tol : 1e-8;
  const auto pts = samples_for(cfg, model, 20);
  const ConditionReport cr = check_condition(model, field, cond, pts, tol);
  Outcome o;
  o.results = to_json(cr);
  o.results["field"] = field.to_text();
  if (cond == Condition::SC || cond == Condition::C) {
    o.results["invariants"] = to_json(independence_invariants(model, field, pts, tol));
  }
  o.verdicts.push_back(verdict(cfg.kind, cr.passed, std::max(cr.residual, cr.cvf_residual)));
  o.code = cr.passed ? 0 : 1;
  return o;
}

Outcome cmd_verify(const RunConfig& cfg) {
  const LoadedMetric m = load_metric(cfg);
  if (!m.builtin) throw UsageError("verify needs a catalog example");
  const VerificationReport r = verify_builtin(*m.builtin, cfg.tol_given ? cfg.tol : 1e-7);
  Outcome o;
  o.results = to_json(r);
  o.results["notes"] = m.builtin->expected.notes;
  for (const auto& e : r.entries) o.verdicts.push_back(verdict(e.name, e.passed, e.max_deviation));
  o.code = r.passed ? 0 : 1;
  return o;
}

Outcome cmd_catalog() {
  Outcome o;
  Json list = Json::array();
  for (const auto& e : catalog_list()) {
    Json j = to_json(e);
    j["dim"] = builtin(e.name).spec.dim;
    list.push_back(std::move(j));
  }
  o.results = {{"metrics", list}};
  return o;
}

Json config_echo(const RunConfig& cfg) {
  Json j{{"command", cfg.command}, {"seed", cfg.seed}, {"format", cfg.format}};
  if (!cfg.metric.empty()) j["metric"] = cfg.metric;
  if (!cfg.example.empty()) j["example"] = cfg.example;
  if (!cfg.points.empty()) j["points"] = cfg.points;
  if (!cfg.xs.empty()) j["x"] = cfg.xs;
  if (!cfg.tensors.empty()) j["tensors"] = cfg.tensors;
  if (!cfg.sets.empty()) j["set"] = cfg.sets;
  if (!cfg.field.empty()) j["field"] = cfg.field;
  if (!cfg.potential.empty()) j["potential"] = cfg.potential;
  if (cfg.command == "check") j["kind"] = cfg.kind;
  if (cfg.tol_given) j["tol"] = cfg.tol;
  if (cfg.xsamples_given) j["xsamples"] = cfg.xsamples;
  if (cfg.ysamples) j["ysamples"] = cfg.ysamples;
  return j;
}

const char* kCatalogHelp =
    "catalog metrics (override parameters with --set KEY=VALUE):\n"
    "  conic_randers_lift  eps=0.5\n"
    "  euclidean_n         n=3\n"
    "  ex5_1               A5=1 A6=2 F5=1 F6=0 F7=1 F8=1\n"
    "  ex5_2               A6=2 F5=5 F6=0 F7=1 F8=1\n"
    "  ex5_3               A5=1 A6=2 F1=x1 F5=5 F6=0 F7=1 F8=1\n"
    "  product3d           f=1\n"
    "  randers2d           eps=0.5 n=2\n";

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Finsler metric analysis: tensors, classification and semi-concurrent fields", "finslerlab"};
  app.footer(kCatalogHelp);
  app.require_subcommand(1);

  auto metric_opts = [&](CLI::App* sub) {
    sub->add_option("--metric", cfg.metric, "metric file or catalog name");
    sub->add_option("--set", cfg.sets, "catalog parameter override KEY=VALUE")->take_all();
  };
  auto output_opts = [&](CLI::App* sub) {
    sub->add_option("--format", cfg.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--out", cfg.out, "write the report to this file");
  };
  auto tol_opt = [&](CLI::App* sub) { sub->add_option("--tol", cfg.tol, "tolerance"); };

  CLI::App* eval = app.add_subcommand("eval", "evaluate tensors at points");
  metric_opts(eval);
  eval->add_option("--point", cfg.points, "x=a1,..,an;y=b1,..,bn (repeatable)");
  eval->add_option("--tensor", cfg.tensors,
                   "metric, inverse, cartan, cartan_trace, angular, spray, nonlinear, berwald_connection, berwald, "
                   "christoffel, landsberg, t4, t2 or all");
  output_opts(eval);

  CLI::App* classify = app.add_subcommand("classify", "sampled class verdicts");
  metric_opts(classify);
  classify->add_option("--seed", cfg.seed, "sampling seed");
  classify->add_option("--xsamples", cfg.xsamples, "number of tangent samples");
  tol_opt(classify);
  output_opts(classify);

  CLI::App* scfind = app.add_subcommand("scfind", "null-space search for semi-concurrent fields");
  metric_opts(scfind);
  scfind->add_option("--x", cfg.xs, "base point a1,..,an (repeatable)");
  scfind->add_option("--xsamples", cfg.xsamples, "number of base points");
  scfind->add_option("--ysamples", cfg.ysamples, "directions per base point");
  scfind->add_option("--seed", cfg.seed, "sampling seed");
  tol_opt(scfind);
  output_opts(scfind);

  CLI::App* check = app.add_subcommand("check", "check a field against sc, c, f or cc");
  metric_opts(check);
  check->add_option("--field", cfg.field, "components B1;B2;..");
  check->add_option("--potential", cfg.potential, "potential f or sigma");
  check->add_option("--kind", cfg.kind, "sc, c, f or cc");
  check->add_option("--point", cfg.points, "x=..;y=.. (repeatable; default: sampled)");
  check->add_option("--xsamples", cfg.xsamples, "number of tangent samples");
  check->add_option("--seed", cfg.seed, "sampling seed");
  tol_opt(check);
  output_opts(check);

  CLI::App* verify = app.add_subcommand("verify", "compare a catalog example with its closed forms");
  verify->add_option("--example", cfg.example, "catalog name");
  metric_opts(verify);
  tol_opt(verify);
  output_opts(verify);

  CLI::App* catalog = app.add_subcommand("catalog-list", "list catalog metrics");
  output_opts(catalog);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    cfg.command = sub->get_name();
    if (auto* o = sub->get_option_no_throw("--tol")) cfg.tol_given = o->count() > 0;
    if (auto* o = sub->get_option_no_throw("--xsamples")) cfg.xsamples_given = o->count() > 0;
  }
  if (cfg.xsamples_given && cfg.xsamples < 1) {
    err << "error: --xsamples must be positive\n";
    return 2;
  }

  Outcome o;
  try {
    if (cfg.command == "eval") o = cmd_eval(cfg);
    else if (cfg.command == "classify") o = cmd_classify(cfg);
    else if (cfg.command == "scfind") o = cmd_scfind(cfg);
    else if (cfg.command == "check") o = cmd_check(cfg);
    else if (cfg.command == "verify") o = cmd_verify(cfg);
    else o = cmd_catalog();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const Json doc{{"tool_version", kToolVersion},
                 {"command", cfg.command},
                 {"config_echo", config_echo(cfg)},
                 {"results", o.results},
                 {"verdicts", o.verdicts}};
  const std::string text = cfg.format == "json" ? dump_json(doc) : dump_text(doc);
  if (cfg.out.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) {
      err << "error: cannot write " << cfg.out << "\n";
      return 2;
    }
    f << text;
  }
  return o.code;
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace finslerlab
