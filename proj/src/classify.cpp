#include "finslerlab/classify.hpp"

#include <cmath>

#include "finslerlab/parallel.hpp"

namespace finslerlab {

namespace {

double trace_scale(const FundamentalBundle& b) {
  // bound on |C_i| implied by the size of C_ijk and g^ij
  return b.C.max_abs() * b.g_inv.max_abs() * b.dim;
}

bool trace_negligible(const FundamentalBundle& b, double tol) {
  const double ref = std::max(trace_scale(b), 1.0 / b.F);
  return b.C_vec.max_abs() <= tol * ref;
}

}  // namespace

Tensor c_reducible_model(const FundamentalBundle& b) {
  const int n = b.dim;
  Tensor m = Tensor::covariant(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        m(i, j, k) = (b.h(i, j) * b.C_vec(k) + b.h(k, i) * b.C_vec(j) + b.h(j, k) * b.C_vec(i)) / (n + 1);
  return m;
}

Tensor c2like_model(const FundamentalBundle& b) {
  const int n = b.dim;
  Tensor m = Tensor::covariant(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) m(i, j, k) = b.C_vec(i) * b.C_vec(j) * b.C_vec(k) / b.C_sq;
  return m;
}

SemiCFit semi_c_fit(const FundamentalBundle& b, double tol) {
  SemiCFit fit;
  const double ref = std::max(trace_scale(b), 1.0 / b.F);
  if (!(std::sqrt(std::fabs(b.C_sq)) > tol * ref)) return fit;
  fit.defined = true;
  const Tensor A = c_reducible_model(b);
  const Tensor B = c2like_model(b);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double d = A.data()[k] - B.data()[k];
    num += (b.C.data()[k] - B.data()[k]) * d;
    den += d * d;
  }
  const double model_gap = std::sqrt(den);
  if (model_gap <= tol * std::max(b.cartan_scale(), A.max_abs())) {
    fit.degenerate_split = true;
    fit.r = 0.0;
  } else {
    fit.r = num / den;
  }
  fit.t = 1.0 - fit.r;
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double model = fit.r * A.data()[k] + fit.t * B.data()[k];
    fit.residual = std::max(fit.residual, std::fabs(b.C.data()[k] - model));
  }
  return fit;
}

PointClassification classify_point(const PointGeometry& p, double tol) {
  const FundamentalBundle& b = p.fb;
  const int n = p.dim;
  if (n < 2) throw std::invalid_argument("classification needs dim >= 2");
  PointClassification pc;
  pc.x = p.x;
  pc.y = p.y;
  pc.F = b.F;
  pc.cartan_scale = b.cartan_scale();
  pc.landsberg_scale = b.g.max_abs();
  pc.riemannian_residual = b.C.max_abs();
  pc.berwald_residual = p.cb.G_tensor.max_abs();
  pc.landsberg_residual = p.cb.L.max_abs();

  if (n >= 3) pc.c_reducible_residual = max_abs_diff(b.C, c_reducible_model(b));

  const double ref = std::max(trace_scale(b), 1.0 / b.F);
  if (std::sqrt(std::fabs(b.C_sq)) > tol * ref) {
    pc.c2like_residual = max_abs_diff(b.C, c2like_model(b));
  } else if (trace_negligible(b, tol)) {
    pc.c2like_residual = b.C.max_abs();  // the model's limit as C_i -> 0 is the zero tensor
  }
  pc.semi_c = semi_c_fit(b, tol);

  if (n == 2) {
    // eta_i = sqrt|det g| (-l^2, l^1) is g-orthogonal to l with eta_i eta^i = sign(det g); orient (l, eta) positively.
    const double s = std::sqrt(std::fabs(b.det_g));
    double eta[2] = {-s * b.l_up(1), s * b.l_up(0)};
    double up[2] = {b.g_inv(0, 0) * eta[0] + b.g_inv(0, 1) * eta[1], b.g_inv(1, 0) * eta[0] + b.g_inv(1, 1) * eta[1]};
    if (b.l_up(0) * up[1] - b.l_up(1) * up[0] < 0) {
      for (int i = 0; i < 2; ++i) {
        eta[i] = -eta[i];
        up[i] = -up[i];
      }
    }
    double J = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) J += b.C(i, j, k) * up[i] * up[j] * up[k];
    // eta_i eta^i is -1 when g is indefinite
    const double norm = eta[0] * up[0] + eta[1] * up[1];
    J *= b.F / (norm * norm * norm);
    double res = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) res = std::max(res, std::fabs(b.F * b.C(i, j, k) - J * eta[i] * eta[j] * eta[k]));
    pc.main_scalar_2d = J;
    pc.main_scalar_residual = res;
  }
  return pc;
}

PointClassification classify_point(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                                   double tol) {
  PointClassification pc = classify_point(point_geometry(model, x, y), tol);
  pc.reversible_residual = reversibility_residual(model, x, y);
  return pc;
}

const Verdict* ClassificationReport::verdict(const std::string& name) const {
  for (const auto& v : verdicts)
    if (v.name == name) return &v;
  return nullptr;
}

ClassificationReport classify_metric(const MetricModel& model, const ClassifyOptions& options) {
  ClassificationReport report;
  report.options = options;
  Sampler sampler(options.seed);
  const auto samples = sample_points(model, sampler, options.n_points, options.box);
  report.points.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    report.points[i] = classify_point(model, samples[i].x, samples[i].y, options.tol);
  });

  const double tol = options.tol;
  auto aggregate = [&](const std::string& name, auto value_of) {
    Verdict v{name, "n/a", 0.0, tol, 0};
    bool all_defined = true;
    for (const auto& p : report.points) {
      const std::optional<double> scaled = value_of(p);
      if (!scaled) {
        all_defined = false;
        continue;
      }
      ++v.evaluated;
      v.worst = std::max(v.worst, *scaled);
    }
    if (v.evaluated > 0) v.status = all_defined && v.worst <= tol ? "member" : "non-member";
    report.verdicts.push_back(v);
  };
  using P = PointClassification;
  auto opt_scaled = [](const std::optional<double>& r, double scale) -> std::optional<double> {
    if (!r) return std::nullopt;
    return *r / scale;
  };
  aggregate("riemannian", [](const P& p) -> std::optional<double> { return p.riemannian_residual / p.cartan_scale; });
  aggregate("berwald", [](const P& p) -> std::optional<double> { return p.berwald_residual / p.cartan_scale; });
  aggregate("landsberg", [](const P& p) -> std::optional<double> { return p.landsberg_residual / p.landsberg_scale; });
  aggregate("c_reducible", [&](const P& p) { return opt_scaled(p.c_reducible_residual, p.cartan_scale); });
  aggregate("c2like", [&](const P& p) { return opt_scaled(p.c2like_residual, p.cartan_scale); });
  aggregate("semi_c_reducible", [&](const P& p) -> std::optional<double> {
    if (!p.semi_c.defined) return std::nullopt;
    return p.semi_c.residual / p.cartan_scale;
  });
  aggregate("reversible", [&](const P& p) { return opt_scaled(p.reversible_residual, p.F); });
  return report;
}

}  // namespace finslerlab
