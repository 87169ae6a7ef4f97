#include "finslerlab/connections.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

namespace finslerlab {

namespace {

// Solves g G_out = rhs through the precomputed inverse.
void apply_inverse(const FundamentalBundle& fb, const std::vector<double>& rhs, std::vector<double>& out) {
  const int n = fb.dim;
  out.assign(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) out[i] += fb.g_inv(i, l) * rhs[l];
}

void check_valence(const std::vector<Variance>& v) {
  const int upper = static_cast<int>(std::count(v.begin(), v.end(), Variance::Upper));
  const int lower = static_cast<int>(v.size()) - upper;
  const bool ok = (upper == 1 && lower == 0) || (upper == 0 && lower >= 1 && lower <= 3) ||
                  (upper == 1 && lower == 1 && v[0] == Variance::Upper);
  if (!ok) {
    throw std::invalid_argument("unsupported valence (" + std::to_string(upper) + "," + std::to_string(lower) +
                                ") for a covariant derivative");
  }
}

std::vector<Variance> with_lower(std::vector<Variance> v) {
  v.push_back(Variance::Lower);
  return v;
}

// Shared by both covariant derivatives: `partial(idx, k)` is the derivative part and `coef(a, m, k)` the
// connection coefficient playing the role of Gamma^a_mk.
template <typename Partial, typename Coef>
Tensor covariant(int n, const TensorField& field, const FieldSample& s, Partial partial, Coef coef) {
  Tensor out(n, with_lower(field.variance()));
  const int r = s.value.rank();
  std::vector<int> idx(r), moved(r), full(r + 1);
  for (std::size_t f = 0; f < s.value.size(); ++f) {
    s.value.unflatten(f, idx);
    for (int k = 0; k < n; ++k) {
      double v = partial(idx, k);
      for (int slot = 0; slot < r; ++slot) {
        moved = idx;
        for (int m = 0; m < n; ++m) {
          moved[slot] = m;
          const double x = s.value.at(moved);
          if (x == 0.0) continue;
          if (field.variance()[slot] == Variance::Upper) {
            v += x * coef(idx[slot], m, k);
          } else {
            v -= x * coef(m, idx[slot], k);
          }
        }
      }
      std::copy(idx.begin(), idx.end(), full.begin());
      full[r] = k;
      out.at(full) = v;
    }
  }
  return out;
}

}  // namespace

ConnectionBundle connection_bundle(const Jet& J, const FundamentalBundle& fb, std::span<const double> y) {
  if (!J.full) throw std::invalid_argument("connection bundle needs a full-tier jet");
  if (!fb.g_inv_valid) throw DegenerateMetric("degenerate metric tensor: connections undefined");
  const int n = fb.dim;
  const Tensor& C = fb.C;
  auto dg = [&](int l, int m, int a) { return 2.0 * C(l, m, a); };
  auto dg2 = [&](int l, int m, int a, int b) { return 0.5 * J.Ly4(l, m, a, b); };
  auto dg3 = [&](int l, int m, int a, int b, int c) { return 0.5 * J.Ly5(l, m, a, b, c); };

  ConnectionBundle cb;
  cb.G = Tensor::contravariant(n, 1);
  cb.N = Tensor::mixed(n, 1);
  cb.G_conn = Tensor::mixed(n, 2);
  cb.G_tensor = Tensor::mixed(n, 3);

  std::vector<double> rhs(n), sol;
  for (int l = 0; l < n; ++l) {
    double s = -J.Lx(l);
    for (int k = 0; k < n; ++k) s += y[k] * J.Lxy(k, l);
    rhs[l] = 0.25 * s;
  }
  apply_inverse(fb, rhs, sol);
  for (int i = 0; i < n; ++i) cb.G(i) = sol[i];
  const Tensor& G = cb.G;

  for (int a = 0; a < n; ++a) {
    for (int l = 0; l < n; ++l) {
      double s = J.Lxy(a, l) - J.Lxy(l, a);
      for (int k = 0; k < n; ++k) s += y[k] * J.Lxyy(k, l, a);
      s *= 0.25;
      for (int m = 0; m < n; ++m) s -= dg(l, m, a) * G(m);
      rhs[l] = s;
    }
    apply_inverse(fb, rhs, sol);
    for (int i = 0; i < n; ++i) cb.N(i, a) = sol[i];
  }
  const Tensor& G1 = cb.N;

  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int l = 0; l < n; ++l) {
        double s = J.Lxyy(a, l, b) + J.Lxyy(b, l, a) - J.Lxyy(l, a, b);
        for (int k = 0; k < n; ++k) s += y[k] * J.Lxy3(k, l, a, b);
        s *= 0.25;
        for (int m = 0; m < n; ++m) s -= dg2(l, m, a, b) * G(m) + dg(l, m, a) * G1(m, b) + dg(l, m, b) * G1(m, a);
        rhs[l] = s;
      }
      apply_inverse(fb, rhs, sol);
      for (int i = 0; i < n; ++i) cb.G_conn(i, a, b) = sol[i];
    }
  }
  const Tensor& G2 = cb.G_conn;

  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        for (int l = 0; l < n; ++l) {
          double s = J.Lxy3(a, l, b, c) + J.Lxy3(b, l, a, c) + J.Lxy3(c, l, a, b) - J.Lxy3(l, a, b, c);
          for (int k = 0; k < n; ++k) s += y[k] * J.Lxy4(k, l, a, b, c);
          s *= 0.25;
          for (int m = 0; m < n; ++m) {
            s -= dg3(l, m, a, b, c) * G(m);
            s -= dg2(l, m, a, b) * G1(m, c) + dg2(l, m, a, c) * G1(m, b) + dg2(l, m, b, c) * G1(m, a);
            s -= dg(l, m, a) * G2(m, b, c) + dg(l, m, b) * G2(m, a, c) + dg(l, m, c) * G2(m, a, b);
          }
          rhs[l] = s;
        }
        apply_inverse(fb, rhs, sol);
        for (int i = 0; i < n; ++i) cb.G_tensor(i, a, b, c) = sol[i];
      }
    }
  }

  // delta_j g_kr = d_j g_kr - N^s_j dg_kr/dy^s
  Tensor dgx = Tensor::covariant(n, 3);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int r = 0; r < n; ++r) {
        double v = 0.5 * J.Lxyy(j, k, r);
        for (int s = 0; s < n; ++s) v -= cb.N(s, j) * 2.0 * C(k, r, s);
        dgx(j, k, r) = v;
      }
  cb.Gamma = Tensor::mixed(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int r = 0; r < n; ++r) v += fb.g_inv(i, r) * (dgx(j, k, r) + dgx(k, j, r) - dgx(r, j, k));
        cb.Gamma(i, j, k) = 0.5 * v;
      }

  cb.L = Tensor::covariant(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int h = 0; h < n; ++h) v += fb.l(h) * cb.G_tensor(h, i, j, k);
        cb.L(i, j, k) = 0.5 * fb.F * v;
      }

  cb.dC = Tensor::covariant(n, 4);
  cb.C_vcov = Tensor::covariant(n, 4);
  cb.T4 = Tensor::covariant(n, 4);
  const Tensor& Cm = fb.C_mixed;
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double d = 0.25 * J.Ly4(h, i, j, k);
          double v = d;
          for (int m = 0; m < n; ++m)
            v -= C(m, i, j) * Cm(m, h, k) + C(h, m, j) * Cm(m, i, k) + C(h, i, m) * Cm(m, j, k);
          cb.dC(h, i, j, k) = d;
          cb.C_vcov(h, i, j, k) = v;
          cb.T4(h, i, j, k) = fb.F * v + C(h, i, j) * fb.l(k) + C(h, i, k) * fb.l(j) + C(h, j, k) * fb.l(i) +
                              C(i, j, k) * fb.l(h);
        }
  cb.T2 = Tensor::covariant(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int h = 0; h < n; ++h)
        for (int k = 0; k < n; ++k) v += cb.T4(i, j, h, k) * fb.g_inv(h, k);
      cb.T2(i, j) = v;
    }
  return cb;
}

PointGeometry point_geometry(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                             const Tolerances& tol) {
  if (!model.in_domain(x, y)) {
    throw EvalError(EvalErrorKind::DomainViolation, model.spec().domain ? model.spec().domain->to_string() : "",
                    "point outside the metric domain");
  }
  PointGeometry p;
  p.dim = model.dim();
  p.x.assign(x.begin(), x.end());
  p.y.assign(y.begin(), y.end());
  const EvalStatus st = model.jet(x, y, Tier::Full, p.jet);
  if (!st.ok) model.raise(Tier::Full, st);
  p.fb = fundamental_bundle(p.jet, y, tol);
  if (!p.fb.g_inv_valid) throw DegenerateMetric("degenerate metric tensor: connections undefined");
  p.cb = connection_bundle(p.jet, p.fb, y);
  return p;
}

ConnectionBundle connection_bundle(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                                   const Tolerances& tol) {
  return point_geometry(model, x, y, tol).cb;
}

TensorField TensorField::symbolic(int dim, std::vector<Variance> variance, const std::vector<Expr>& components,
                                  const std::map<std::string, double>& params, std::string name) {
  const Tensor shape(dim, variance);
  if (components.size() != shape.size()) throw std::invalid_argument("component count does not match valence");
  std::vector<Expr> roots(components);
  Differentiator diff;
  for (int k = 0; k < dim; ++k)
    for (const Expr& e : components) roots.push_back(diff(e, Variable::x(k)));
  for (int k = 0; k < dim; ++k)
    for (const Expr& e : components) roots.push_back(diff(e, Variable::y(k)));
  auto program = std::make_shared<const Program>(roots, params);
  auto sampler = [program, shape, dim](const PointGeometry& p) {
    std::vector<double> out(program->root_count()), scratch;
    program->evaluate(p.x, p.y, out, scratch);
    FieldSample s;
    const std::size_t m = shape.size();
    auto fill = [&](std::size_t block) {
      Tensor t = shape;
      std::copy(out.begin() + static_cast<long>(block * m), out.begin() + static_cast<long>((block + 1) * m),
                t.data().begin());
      return t;
    };
    s.value = fill(0);
    for (int k = 0; k < dim; ++k) s.dx.push_back(fill(1 + k));
    for (int k = 0; k < dim; ++k) s.dy.push_back(fill(1 + dim + k));
    return s;
  };
  return TensorField(std::move(variance), sampler, std::move(name));
}

TensorField TensorField::numeric(int dim, std::vector<Variance> variance,
                                 std::function<Tensor(std::span<const double>, std::span<const double>)> fn,
                                 std::string name) {
  auto sampler = [fn, dim](const PointGeometry& p) {
    FieldSample s;
    s.value = fn(p.x, p.y);
    auto central = [&](bool along_x, int k) {
      std::vector<double> xp = p.x, xm = p.x, yp = p.y, ym = p.y;
      auto& plus = along_x ? xp : yp;
      auto& minus = along_x ? xm : ym;
      const double h = 1e-5 * (1.0 + std::fabs(plus[k]));
      plus[k] += h;
      minus[k] -= h;
      Tensor a = fn(xp, yp);
      const Tensor b = fn(xm, ym);
      for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = (a.data()[i] - b.data()[i]) / (2.0 * h);
      return a;
    };
    for (int k = 0; k < dim; ++k) s.dx.push_back(central(true, k));
    for (int k = 0; k < dim; ++k) s.dy.push_back(central(false, k));
    return s;
  };
  return TensorField(std::move(variance), sampler, std::move(name));
}

TensorField TensorField::metric(int dim) {
  auto sampler = [dim](const PointGeometry& p) {
    const Jet& J = p.jet;
    FieldSample s;
    s.value = p.fb.g;
    for (int k = 0; k < dim; ++k) {
      Tensor dx = Tensor::covariant(dim, 2), dy = Tensor::covariant(dim, 2);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          dx(i, j) = 0.5 * J.Lxyy(k, i, j);
          dy(i, j) = 0.5 * J.Lyyy(i, j, k);
        }
      s.dx.push_back(std::move(dx));
      s.dy.push_back(std::move(dy));
    }
    return s;
  };
  return TensorField(std::vector<Variance>(2, Variance::Lower), sampler, "g");
}

TensorField TensorField::cartan(int dim) {
  auto sampler = [dim](const PointGeometry& p) {
    const Jet& J = p.jet;
    FieldSample s;
    s.value = p.fb.C;
    for (int k = 0; k < dim; ++k) {
      Tensor dx = Tensor::covariant(dim, 3), dy = Tensor::covariant(dim, 3);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          for (int c = 0; c < dim; ++c) {
            dx(a, b, c) = 0.25 * J.Lxy3(k, a, b, c);
            dy(a, b, c) = 0.25 * J.Ly4(a, b, c, k);
          }
      s.dx.push_back(std::move(dx));
      s.dy.push_back(std::move(dy));
    }
    return s;
  };
  return TensorField(std::vector<Variance>(3, Variance::Lower), sampler, "C");
}

Tensor h_cov_deriv(const PointGeometry& p, const TensorField& field) {
  check_valence(field.variance());
  const FieldSample s = field.sample(p);
  const int n = p.dim;
  const Tensor& N = p.cb.N;
  const Tensor& Gamma = p.cb.Gamma;
  auto partial = [&](const std::vector<int>& idx, int k) {
    double v = s.dx[k].at(idx);
    for (int r = 0; r < n; ++r) v -= N(r, k) * s.dy[r].at(idx);
    return v;
  };
  auto coef = [&](int a, int m, int k) { return Gamma(a, m, k); };
  return covariant(n, field, s, partial, coef);
}

Tensor v_cov_deriv(const PointGeometry& p, const TensorField& field) {
  check_valence(field.variance());
  const FieldSample s = field.sample(p);
  const Tensor& Cm = p.fb.C_mixed;
  auto partial = [&](const std::vector<int>& idx, int k) { return s.dy[k].at(idx); };
  auto coef = [&](int a, int m, int k) { return Cm(a, m, k); };
  return covariant(p.dim, field, s, partial, coef);
}

Tensor h_cov_deriv(const MetricModel& model, const TensorField& field, std::span<const double> x,
                   std::span<const double> y) {
  return h_cov_deriv(point_geometry(model, x, y), field);
}

Tensor v_cov_deriv(const MetricModel& model, const TensorField& field, std::span<const double> x,
                   std::span<const double> y) {
  return v_cov_deriv(point_geometry(model, x, y), field);
}

std::pair<Tensor, Tensor> t_tensor(const MetricModel& model, std::span<const double> x, std::span<const double> y) {
  PointGeometry p = point_geometry(model, x, y);
  return {std::move(p.cb.T4), std::move(p.cb.T2)};
}

}  // namespace finslerlab
