#include "finslerlab/fundamental.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace finslerlab {

namespace {

Eigen::MatrixXd to_matrix(const Tensor& t) {
  const int n = t.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = t(i, j);
  return m;
}

[[noreturn]] void outside(const std::string& what) {
  throw EvalError(EvalErrorKind::DomainViolation, what, "point outside the metric domain: " + what);
}

}  // namespace

std::vector<double> leading_minors(const Tensor& g) {
  const Eigen::MatrixXd m = to_matrix(g);
  std::vector<double> out;
  for (int k = 1; k <= g.dim(); ++k) out.push_back(m.topLeftCorner(k, k).determinant());
  return out;
}

FundamentalBundle fundamental_bundle(const Jet& jet, std::span<const double> y, const Tolerances& tol) {
  const int n = jet.n;
  const double L = jet.L();
  if (!(L > 0.0)) outside("F^2 = " + std::to_string(L) + " is not positive");

  FundamentalBundle b;
  b.dim = n;
  b.F = std::sqrt(L);
  b.E = 0.5 * L;
  b.g = Tensor::covariant(n, 2);
  b.C = Tensor::covariant(n, 3);
  b.l = Tensor::covariant(n, 1);
  b.l_up = Tensor::contravariant(n, 1);
  b.l_der = Tensor::covariant(n, 2);
  b.h = Tensor::covariant(n, 2);
  for (int i = 0; i < n; ++i) {
    b.l(i) = jet.Ly(i) / (2.0 * b.F);
    b.l_up(i) = y[i] / b.F;
    for (int j = 0; j < n; ++j) {
      b.g(i, j) = 0.5 * jet.Lyy(i, j);
      for (int k = 0; k < n; ++k) b.C(i, j, k) = 0.25 * jet.Lyyy(i, j, k);
    }
  }
  // l_ij = d/dy^i (L_j / 2F) = L_ij / 2F - L_i L_j / 4F^3, independent of the h = g - l l route.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      b.l_der(i, j) = jet.Lyy(i, j) / (2.0 * b.F) - jet.Ly(i) * jet.Ly(j) / (4.0 * L * b.F);
      b.h(i, j) = b.g(i, j) - b.l(i) * b.l(j);
    }
  }

  const Eigen::MatrixXd gm = to_matrix(b.g);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(gm);
  b.det_g = lu.determinant();
  const double gmax = b.g.max_abs();
  b.g_inv = Tensor::contravariant(n, 2);
  b.g_inv_valid = std::isfinite(b.det_g) && std::fabs(b.det_g) > tol.nondegenerate * std::pow(gmax, n);
  b.C_mixed = Tensor::mixed(n, 2);
  b.C_vec = Tensor::covariant(n, 1);
  if (!b.g_inv_valid) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double& v : b.g_inv.data()) v = nan;
    for (double& v : b.C_mixed.data()) v = nan;
    for (double& v : b.C_vec.data()) v = nan;
    b.C_sq = nan;
    return b;
  }
  const Eigen::MatrixXd gi = lu.inverse();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b.g_inv(i, j) = gi(i, j);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int r = 0; r < n; ++r) s += b.g_inv(i, r) * b.C(r, j, k);
        b.C_mixed(i, j, k) = s;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += b.C(i, j, k) * b.g_inv(j, k);
    b.C_vec(i) = s;
  }
  b.C_sq = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b.C_sq += b.C_vec(i) * b.g_inv(i, j) * b.C_vec(j);
  return b;
}

FundamentalBundle fundamental_bundle(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                                     const Tolerances& tol) {
  if (!model.in_domain(x, y)) outside(model.spec().domain ? model.spec().domain->to_string() : "domain");
  Jet jet;
  const EvalStatus st = model.jet(x, y, Tier::Fundamental, jet);
  if (!st.ok) model.raise(Tier::Fundamental, st);
  return fundamental_bundle(jet, y, tol);
}

FundamentalBundle fundamental_bundle(const MetricSpec& spec, const Bindings& p, const Tolerances& tol) {
  MetricSpec bound = spec;
  for (const auto& [k, v] : p.params) bound.params[k] = v;
  const MetricModel model(std::move(bound));
  return fundamental_bundle(model, p.x, p.y, tol);
}

DomainStatus domain_probe(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                          const Tolerances& tol) {
  DomainStatus s;
  const int n = model.dim();
  if (!model.in_domain(x, y)) {
    s.detail = "domain predicate fails";
    return s;
  }
  Jet jet;
  EvalStatus st = model.jet(x, y, Tier::Fundamental, jet);
  if (!st.ok) {
    s.detail = "evaluation failed at " + model.describe_failure(Tier::Fundamental, st);
    return s;
  }
  if (!(jet.L() > 0.0)) {
    s.detail = "F^2 is not positive";
    return s;
  }
  s.in_domain = true;
  const FundamentalBundle b = fundamental_bundle(jet, y, tol);
  s.nondegenerate = b.g_inv_valid;
  s.leading_minors = leading_minors(b.g);
  bool minors_positive = true;
  for (double m : s.leading_minors) minors_positive = minors_positive && m > 0.0;
  s.positive_definite = minors_positive && s.nondegenerate;

  s.smooth = true;
  double ynorm = 0.0;
  for (double v : y) ynorm += v * v;
  ynorm = std::sqrt(ynorm);
  const double radius = tol.probe_radius * ynorm;
  const double gscale = b.g.max_abs();
  std::vector<double> yp(y.begin(), y.end());
  for (int axis = 0; axis < n && s.smooth; ++axis) {
    for (double sign : {1.0, -1.0}) {
      yp.assign(y.begin(), y.end());
      yp[axis] += sign * radius;
      Jet pj;
      if (!model.in_domain(x, yp)) {
        s.smooth = false;
        s.detail = "domain boundary within probe radius";
        break;
      }
      st = model.jet(x, yp, Tier::Fundamental, pj);
      if (!st.ok) {
        s.smooth = false;
        s.detail = "non-finite partial near the point: " + model.describe_failure(Tier::Fundamental, st);
        break;
      }
      double jump = 0.0;
      for (int i = 0; i < n * n; ++i) jump = std::max(jump, std::fabs(0.5 * pj.y[2][i] - 0.5 * jet.y[2][i]));
      if (jump > tol.probe_jump * gscale) {
        s.smooth = false;
        s.detail = "metric varies faster than the probe resolution (blow-up)";
        break;
      }
    }
  }
  if (s.detail.empty() && !s.nondegenerate) s.detail = "degenerate metric";
  return s;
}

std::optional<double> reversibility_residual(const MetricModel& model, std::span<const double> x,
                                             std::span<const double> y) {
  std::vector<double> neg(y.begin(), y.end());
  for (double& v : neg) v = -v;
  if (!model.in_domain(x, y) || !model.in_domain(x, neg)) return std::nullopt;
  double a = 0.0, b = 0.0;
  if (!model.energy(x, y, a).ok || !model.energy(x, neg, b).ok) return std::nullopt;
  if (a < 0.0 || b < 0.0) return std::nullopt;
  return std::fabs(std::sqrt(a) - std::sqrt(b));
}

double IdentityDefects::worst() const {
  return std::max({energy_euler, metric_norm, cartan_y, angular_y, unit_l, angular_split});
}

IdentityDefects identity_defects(const FundamentalBundle& b, const Jet& jet, std::span<const double> y) {
  const int n = b.dim;
  IdentityDefects d;
  const double gscale = b.g.max_abs();
  double ynorm = 0.0;
  for (double v : y) ynorm = std::max(ynorm, std::fabs(v));

  double euler = 0.0, euler_mag = 0.0;
  for (int i = 0; i < n; ++i) {
    euler += y[i] * 0.5 * jet.Ly(i);
    euler_mag += std::fabs(y[i] * 0.5 * jet.Ly(i));
  }
  d.energy_euler = std::fabs(euler - 2.0 * b.E) / std::max(euler_mag, 2.0 * b.E);

  double norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) norm += b.g(i, j) * y[i] * y[j];
  d.metric_norm = std::fabs(norm - b.F * b.F) / (gscale * ynorm * ynorm * n * n);

  const double cscale = b.cartan_scale() * ynorm * n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += b.C(i, j, k) * y[k];
      d.cartan_y = std::max(d.cartan_y, std::fabs(s) / cscale);
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += b.h(i, j) * y[j];
    d.angular_y = std::max(d.angular_y, std::fabs(s) / (gscale * ynorm * n));
  }
  double ll = 0.0;
  for (int i = 0; i < n; ++i) ll += b.l(i) * b.l_up(i);
  d.unit_l = std::fabs(ll - 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d.angular_split = std::max(d.angular_split, std::fabs(b.h(i, j) - b.F * b.l_der(i, j)) / gscale);
  return d;
}

}  // namespace finslerlab
