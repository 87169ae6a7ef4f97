#include "finslerlab/scfield.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "finslerlab/metric.hpp"
#include "finslerlab/parallel.hpp"

namespace finslerlab {

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Generic: return "generic";
    case FieldKind::Gradient: return "gradient";
    case FieldKind::Conformal: return "conformal";
    case FieldKind::Concurrent: return "concurrent";
  }
  return "generic";
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::SC: return "sc";
    case Condition::C: return "c";
    case Condition::F: return "f";
    case Condition::CC: return "cc";
  }
  return "sc";
}

Condition parse_condition(const std::string& text) {
  if (text == "sc") return Condition::SC;
  if (text == "c") return Condition::C;
  if (text == "f") return Condition::F;
  if (text == "cc") return Condition::CC;
  throw std::invalid_argument("unknown condition '" + text + "' (expected sc, c, f or cc)");
}

namespace {

std::set<std::string> names_of(const std::map<std::string, double>& params) {
  std::set<std::string> s;
  for (const auto& [k, v] : params) s.insert(k);
  return s;
}

void require_x_only(const Expr& e) {
  if (variable_usage(e).y_count > 0) {
    throw std::invalid_argument("vector field component depends on y: " + e.to_string());
  }
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::fabs(e));
  return m;
}

Eigen::MatrixXd to_columns(const std::vector<std::vector<double>>& basis, int n) {
  Eigen::MatrixXd m(n, static_cast<long>(basis.size()));
  for (std::size_t c = 0; c < basis.size(); ++c)
    for (int r = 0; r < n; ++r) m(r, static_cast<long>(c)) = basis[c][r];
  return m;
}

struct Block {
  Tensor C;
  Tensor g;
  double scale = 0.0;  // max|g| / F
};

Block cartan_at(const MetricModel& model, std::span<const double> x, std::span<const double> y) {
  const FundamentalBundle b = fundamental_bundle(model, x, y);
  return {b.C, b.g, b.cartan_scale()};
}

NullSpace nullspace_from_blocks(int n, const std::vector<Block>& blocks, double tol) {
  NullSpace ns;
  ns.samples = static_cast<int>(blocks.size());
  std::vector<const Block*> live;
  for (const auto& b : blocks)
    if (b.C.max_abs() > 1e-12 * b.scale) live.push_back(&b);
  if (live.empty()) {
    ns.c_zero = true;
    for (int i = 0; i < n; ++i) {
      std::vector<double> e(n, 0.0);
      e[i] = 1.0;
      ns.basis.push_back(e);
    }
    ns.singular_values.assign(n, 0.0);
    return ns;
  }
  const int per_block = n * (n + 1) / 2;
  Eigen::MatrixXd M(static_cast<long>(live.size()) * per_block, n);
  long row = 0;
  for (const Block* b : live) {
    const double s = 1.0 / b->C.max_abs();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j, ++row)
        for (int h = 0; h < n; ++h) M(row, h) = s * b->C(h, i, j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  ns.sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  ns.singular_values.assign(n, 0.0);
  for (long k = 0; k < sv.size(); ++k) ns.singular_values[k] = sv(k);
  const Eigen::MatrixXd& V = svd.matrixV();
  for (int k = 0; k < n; ++k) {
    if (ns.singular_values[k] < tol * ns.sigma_max) {
      std::vector<double> v(n);
      for (int r = 0; r < n; ++r) v[r] = V(r, k);
      // deterministic sign: largest component positive
      int arg = 0;
      for (int r = 1; r < n; ++r)
        if (std::fabs(v[r]) > std::fabs(v[arg]) + 1e-12) arg = r;
      if (v[arg] < 0)
        for (double& e : v) e = -e;
      ns.basis.push_back(std::move(v));
    }
  }
  return ns;
}

std::vector<Block> blocks_at(const MetricModel& model, std::span<const double> x,
                             const std::vector<std::vector<double>>& ys) {
  std::vector<Block> blocks;
  blocks.reserve(ys.size());
  for (const auto& y : ys) blocks.push_back(cartan_at(model, x, y));
  return blocks;
}

bool all_usable(const MetricModel& model, std::span<const double> x, const std::vector<std::vector<double>>& ys) {
  for (const auto& y : ys)
    if (!usable_sample(model, x, y)) return false;
  return true;
}

double contraction_residual(const Block& b, std::span<const double> v) {
  const int n = b.C.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int h = 0; h < n; ++h) s += v[h] * b.C(h, i, j);
      worst = std::max(worst, std::fabs(s));
    }
  return worst / b.scale;
}

}  // namespace

VectorFieldSpec VectorFieldSpec::parse(const std::string& components, int dim,
                                       const std::map<std::string, double>& params, FieldKind kind) {
  VectorFieldSpec f;
  f.dim = dim;
  f.kind = kind;
  f.params = params;
  std::stringstream ss(components);
  std::string part;
  const auto names = names_of(params);
  while (std::getline(ss, part, ';')) {
    f.components.push_back(parse_expression(part, dim, names));
    require_x_only(f.components.back());
  }
  if (static_cast<int>(f.components.size()) != dim) {
    throw std::invalid_argument("vector field has " + std::to_string(f.components.size()) +
                                " components, metric dimension is " + std::to_string(dim));
  }
  f.label = f.to_text();
  return f;
}

VectorFieldSpec VectorFieldSpec::gradient_of(const std::string& potential, int dim,
                                             const std::map<std::string, double>& params, FieldKind kind) {
  VectorFieldSpec f;
  f.dim = dim;
  f.kind = kind;
  f.params = params;
  f.potential = parse_expression(potential, dim, names_of(params));
  require_x_only(*f.potential);
  Differentiator diff;
  for (int i = 0; i < dim; ++i) f.components.push_back(diff(*f.potential, Variable::x(i)));
  f.label = "grad(" + f.potential->to_string() + ")";
  return f;
}

std::vector<double> VectorFieldSpec::evaluate(std::span<const double> x) const {
  const Program p(components, params);
  std::vector<double> out(components.size()), scratch;
  const std::vector<double> y(dim, 0.0);
  p.evaluate(x, y, out, scratch);
  return out;
}

TensorField VectorFieldSpec::as_tensor_field() const {
  return TensorField::symbolic(dim, {Variance::Upper}, components, params, label);
}

std::string VectorFieldSpec::to_text() const {
  std::string s;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) s += ";";
    s += components[i].to_string();
  }
  return s;
}

double sc_residual_at(const MetricModel& model, std::span<const double> x, std::span<const double> v,
                      const std::vector<std::vector<double>>& ys) {
  double worst = 0.0;
  const double vn = norm_inf(v);
  if (vn == 0.0) return 0.0;
  for (const auto& y : ys) worst = std::max(worst, contraction_residual(cartan_at(model, x, y), v) / vn);
  return worst;
}

NullSpace sc_nullspace_at(const MetricModel& model, std::span<const double> x,
                          const std::vector<std::vector<double>>& ys, double tol) {
  const int n = model.dim();
  const int needed = n * (n + 1) / 2;
  std::vector<std::vector<double>> valid;
  for (const auto& y : ys)
    if (usable_sample(model, x, y)) valid.push_back(y);
  if (static_cast<int>(valid.size()) < needed) {
    throw std::invalid_argument("too few valid y-samples at x: " + std::to_string(valid.size()) + " < " +
                                std::to_string(needed));
  }
  return nullspace_from_blocks(n, blocks_at(model, x, valid), tol);
}

std::vector<double> principal_angles(const std::vector<std::vector<double>>& a,
                                     const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty()) return {};
  const int n = static_cast<int>(a[0].size());
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(to_columns(a, n)).householderQ() *
                             Eigen::MatrixXd::Identity(n, static_cast<long>(a.size()));
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(to_columns(b, n)).householderQ() *
                             Eigen::MatrixXd::Identity(n, static_cast<long>(b.size()));
  const Eigen::MatrixXd m = qa.transpose() * qb;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  std::vector<double> out;
  for (long k = 0; k < svd.singularValues().size(); ++k) {
    const double c = std::min(1.0, svd.singularValues()(k));
    // sin of the angle from the complement is better conditioned for small angles
    out.push_back(std::asin(std::sqrt(std::max(0.0, 1.0 - c * c))));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double subspace_angle(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) return std::numbers::pi / 2;
  if (a.empty()) return 0.0;
  const auto angles = principal_angles(a, b);
  return angles.back();
}

namespace {

double containment_angle(const std::vector<std::vector<double>>& basis, std::vector<double> d) {
  const double nrm = std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0));
  if (nrm == 0.0) return std::numbers::pi / 2;
  for (double& e : d) e /= nrm;
  double proj2 = 0.0;
  for (const auto& v : basis) {
    const double c = std::inner_product(v.begin(), v.end(), d.begin(), 0.0);
    proj2 += c * c;
  }
  return std::asin(std::sqrt(std::max(0.0, 1.0 - std::min(1.0, proj2))));
}

struct XJob {
  std::vector<double> x;
  std::vector<std::vector<double>> ys;
  std::vector<std::vector<double>> fresh;
  std::vector<double> x_near;
  std::vector<std::vector<double>> ys_near;
};

}  // namespace

SCFieldReport sc_detect(const MetricModel& model, const std::vector<std::vector<double>>& xs, const SCOptions& options,
                        const std::vector<CandidateField>& candidates) {
  const int n = model.dim();
  const int ycount = options.ysamples > 0 ? options.ysamples : std::max(12, 3 * n * (n + 1) / 2);
  Sampler sampler(options.seed);

  std::vector<XJob> jobs;
  for (const auto& x : xs) {
    XJob job;
    job.x = x;
    job.ys = sample_directions(model, sampler, x, ycount);
    job.fresh = sample_directions(model, sampler, x, options.fresh_samples);
    const auto u = sampler.y_unit(n);
    job.x_near = x;
    for (int i = 0; i < n; ++i) job.x_near[i] += options.continuity_step * u[i];
    job.ys_near = all_usable(model, job.x_near, job.ys) ? job.ys
                                                        : sample_directions(model, sampler, job.x_near, ycount);
    jobs.push_back(std::move(job));
  }

  SCFieldReport report;
  report.per_x.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t idx) {
    const XJob& job = jobs[idx];
    SCAtX& out = report.per_x[idx];
    out.x = job.x;
    out.nullspace = nullspace_from_blocks(n, blocks_at(model, job.x, job.ys), options.tol);
    const NullSpace near = nullspace_from_blocks(n, blocks_at(model, job.x_near, job.ys_near), options.tol);
    if (out.nullspace.c_zero && near.c_zero) {
      out.local_dimension = n;
    } else {
      int count = 0;
      for (double a : principal_angles(out.nullspace.basis, near.basis))
        if (a < options.angle_threshold) ++count;
      out.local_dimension = count;
    }
    const auto fresh_blocks = blocks_at(model, job.x, job.fresh);
    for (const auto& v : out.nullspace.basis)
      for (const auto& b : fresh_blocks) out.soundness_residual = std::max(out.soundness_residual, contraction_residual(b, v));

    if (out.nullspace.basis.size() == 1 && !out.nullspace.c_zero) {
      const auto& bvec = out.nullspace.basis[0];
      auto lower = [&](const std::vector<double>& b, const Tensor& g) {
        std::vector<double> lam(n, 0.0);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) lam[i] += g(i, j) * b[j];
        const double s = std::sqrt(std::inner_product(lam.begin(), lam.end(), lam.begin(), 0.0));
        for (double& e : lam) e /= s;
        return lam;
      };
      const auto blocks = blocks_at(model, job.x, job.ys);
      const auto lam0 = lower(bvec, blocks[0].g);
      double variation = 0.0;
      for (const auto& b : fresh_blocks) {
        const auto lam = lower(bvec, b.g);
        const double c = std::fabs(std::inner_product(lam.begin(), lam.end(), lam0.begin(), 0.0));
        variation = std::max(variation, std::asin(std::sqrt(std::max(0.0, 1.0 - std::min(1.0, c * c)))));
      }
      out.lambda_y_variation = variation;

      // lambda(x) at the first direction, sign-aligned, differentiated by central differences
      const auto& y0 = job.ys[0];
      std::vector<std::vector<double>> dlam(n);
      bool ok = true;
      for (int k = 0; k < n && ok; ++k) {
        const double h = 1e-4 * (1.0 + std::fabs(job.x[k]));
        std::vector<double> sides[2];
        for (int s = 0; s < 2 && ok; ++s) {
          std::vector<double> xp = job.x;
          xp[k] += s == 0 ? h : -h;
          if (!all_usable(model, xp, job.ys)) {
            ok = false;
            break;
          }
          const NullSpace ns = nullspace_from_blocks(n, blocks_at(model, xp, job.ys), options.tol);
          if (ns.basis.size() != 1) {
            ok = false;
            break;
          }
          auto b = ns.basis[0];
          if (std::inner_product(b.begin(), b.end(), bvec.begin(), 0.0) < 0)
            for (double& e : b) e = -e;
          sides[s] = lower(b, cartan_at(model, xp, y0).g);
        }
        if (!ok) break;
        dlam[k].resize(n);
        for (int i = 0; i < n; ++i) dlam[k][i] = (sides[0][i] - sides[1][i]) / (2 * h);
      }
      if (ok) {
        const auto lam = lower(bvec, cartan_at(model, job.x, y0).g);
        auto curl = [&](int a, int b) { return dlam[a][b] - dlam[b][a]; };  // d_a lambda_b - d_b lambda_a
        double defect = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
              defect = std::max(defect, std::fabs(lam[i] * curl(j, k) + lam[j] * curl(k, i) + lam[k] * curl(i, j)));
        out.frobenius_defect = defect;
      }
    }
  });

  report.c_zero_everywhere = !report.per_x.empty();
  report.consistent_dimension = report.per_x.empty() ? 0 : n;
  for (const auto& px : report.per_x) {
    report.c_zero_everywhere = report.c_zero_everywhere && px.nullspace.c_zero;
    report.consistent_dimension = std::min(report.consistent_dimension, px.local_dimension);
  }

  if (report.consistent_dimension == 1) {
    bool all = true;
    for (const auto& px : report.per_x) {
      if (!px.lambda_y_variation || !px.frobenius_defect) {
        all = false;
        break;
      }
      all = all && *px.lambda_y_variation < 1e-6 && *px.frobenius_defect < 1e-4;
    }
    report.gradient_flag = all;
  }

  if (report.consistent_dimension >= 1 && !report.c_zero_everywhere) {
    for (const auto& cand : candidates) {
      VectorFieldSpec f = cand.field;
      f.params["f"] = 1.0;
      bool match = true;
      for (const auto& px : report.per_x) {
        std::vector<double> d;
        try {
          d = f.evaluate(px.x);
        } catch (const EvalError&) {
          match = false;
          break;
        }
        if (containment_angle(px.nullspace.basis, d) > options.angle_threshold) {
          match = false;
          break;
        }
      }
      if (match) {
        report.candidate_field = cand.name;
        report.candidate_text = cand.field.to_text();
        break;
      }
    }
  }
  return report;
}

SCFieldReport sc_detect(const MetricModel& model, const SCOptions& options,
                        const std::vector<CandidateField>& candidates) {
  Sampler sampler(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < options.xsamples; ++i) xs.push_back(sampler.x_point(model.dim(), options.box));
  return sc_detect(model, xs, options, candidates);
}

ConditionReport check_condition(const MetricModel& model, const VectorFieldSpec& field, Condition condition,
                                const std::vector<TangentSample>& samples, double tol) {
  if (field.dim != model.dim()) throw std::invalid_argument("field dimension does not match the metric");
  if ((condition == Condition::F || condition == Condition::CC) && !field.potential) {
    throw std::invalid_argument("condition " + to_string(condition) + " needs a potential (--potential)");
  }
  const int n = model.dim();
  ConditionReport rep;
  rep.condition = condition;
  rep.tol = tol;
  const TensorField tf = field.as_tensor_field();
  rep.samples.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t s) {
    const auto& smp = samples[s];
    ConditionSample& out = rep.samples[s];
    out.x = smp.x;
    out.y = smp.y;
    const auto v = field.evaluate(smp.x);
    const double vn = norm_inf(v);
    if (condition == Condition::C) {
      const PointGeometry p = point_geometry(model, smp.x, smp.y);
      out.residual = vn == 0.0 ? 0.0 : contraction_residual({p.fb.C, p.fb.g, p.fb.cartan_scale()}, v) / vn;
      const Tensor d = h_cov_deriv(p, tf);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.cvf_residual = std::max(out.cvf_residual, std::fabs(d(i, j) + (i == j)));
      return;
    }
    const FundamentalBundle b = fundamental_bundle(model, smp.x, smp.y);
    if (!b.g_inv_valid) throw DegenerateMetric("degenerate metric tensor at a condition sample");
    if (vn == 0.0) return;
    double worst = 0.0;
    switch (condition) {
      case Condition::SC:
        worst = contraction_residual({b.C, b.g, b.cartan_scale()}, v) / vn;
        break;
      case Condition::F: {
        // f_i dg^ij/dy^k = -2 f_i g^ia g^jb C_abk
        std::vector<double> fa(n, 0.0);
        for (int a = 0; a < n; ++a)
          for (int i = 0; i < n; ++i) fa[a] += v[i] * b.g_inv(i, a);
        const double gi = b.g_inv.max_abs();
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int a = 0; a < n; ++a)
              for (int bb = 0; bb < n; ++bb) s += fa[a] * b.g_inv(j, bb) * b.C(a, bb, k);
            worst = std::max(worst, std::fabs(2.0 * s) / (vn * gi * gi * b.cartan_scale()));
          }
        break;
      }
      case Condition::CC:
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int h = 0; h < n; ++h) s += v[h] * b.C_mixed(h, i, j);
            worst = std::max(worst, std::fabs(s) / (vn * b.g_inv.max_abs() * b.cartan_scale()));
          }
        break;
      case Condition::C:
        break;
    }
    out.residual = worst;
  });
  for (const auto& s : rep.samples) {
    rep.residual = std::max(rep.residual, s.residual);
    rep.cvf_residual = std::max(rep.cvf_residual, s.cvf_residual);
  }
  rep.passed = rep.residual < tol && (condition != Condition::C || rep.cvf_residual < tol);
  return rep;
}

InvariantsReport independence_invariants(const MetricModel& model, const VectorFieldSpec& field,
                                         const std::vector<TangentSample>& samples, double tol) {
  const int n = model.dim();
  InvariantsReport rep;
  const TensorField tf = field.as_tensor_field();
  rep.samples.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t s) {
    const auto& smp = samples[s];
    const PointGeometry p = point_geometry(model, smp.x, smp.y);
    const auto B = field.evaluate(smp.x);
    InvariantSample& out = rep.samples[s];
    out.x = smp.x;
    out.y = smp.y;
    double B0 = 0.0, B2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        B0 += p.fb.g(i, j) * B[i] * smp.y[j];
        B2 += p.fb.g(i, j) * B[i] * B[j];
      }
    out.B0 = B0;
    out.B2F2_minus_B02 = B2 * p.fb.F * p.fb.F - B0 * B0;
    const Tensor d = h_cov_deriv(p, tf);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = d(i, j);
    out.det_h_cov = m.determinant();
    const double ref = norm_inf(B) * norm_inf(smp.y) * p.fb.g.max_abs() * n;
    out.B0_small = std::fabs(B0) <= tol * ref;
    out.gram_small = std::fabs(out.B2F2_minus_B02) <= tol * ref * ref;
  });
  for (const auto& s : rep.samples) rep.any_flagged = rep.any_flagged || s.B0_small || s.gram_small;
  return rep;
}

}  // namespace finslerlab
