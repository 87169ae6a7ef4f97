#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finslerlab/fundamental.hpp"

namespace finslerlab {

struct ConnectionBundle {
  Tensor G;         ///< G^i
  Tensor N;         ///< N^i_j = d G^i / dy^j
  Tensor G_conn;    ///< G^i_jh = d N^i_j / dy^h
  Tensor G_tensor;  ///< G^h_ijk
  Tensor Gamma;     ///< Gamma^i_jk with respect to delta_i
  Tensor L;         ///< L_ijk
  Tensor dC;        ///< d C_hij / dy^k
  Tensor C_vcov;    ///< C_hij|k
  Tensor T4;        ///< T_hijk
  Tensor T2;        ///< T_ij = T_ijhk g^hk
};

/// Everything known at one tangent sample: the full jet, the fundamental bundle and the connections.
struct PointGeometry {
  int dim = 0;
  std::vector<double> x;
  std::vector<double> y;
  Jet jet;
  FundamentalBundle fb;
  ConnectionBundle cb;
};

/// Throws EvalError outside the domain and DegenerateMetric when g is not invertible.
PointGeometry point_geometry(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                             const Tolerances& tol = {});

ConnectionBundle connection_bundle(const Jet& jet, const FundamentalBundle& fb, std::span<const double> y);
ConnectionBundle connection_bundle(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                                   const Tolerances& tol = {});

/// A tensor field's value with its first x- and y-partials at one point.
struct FieldSample {
  Tensor value;
  std::vector<Tensor> dx;  ///< dx[k] = d value / dx^k
  std::vector<Tensor> dy;  ///< dy[k] = d value / dy^k
};

/// A tensor-valued map over (x, y) that can supply first partials at a point.
class TensorField {
 public:
  using Sampler = std::function<FieldSample(const PointGeometry&)>;

  TensorField(std::vector<Variance> variance, Sampler sampler, std::string name)
      : variance_(std::move(variance)), sampler_(std::move(sampler)), name_(std::move(name)) {}

  const std::vector<Variance>& variance() const { return variance_; }
  const std::string& name() const { return name_; }
  FieldSample sample(const PointGeometry& p) const { return sampler_(p); }

  /// Components given as expressions (row-major over the multi-index); partials are symbolic.
  static TensorField symbolic(int dim, std::vector<Variance> variance, const std::vector<Expr>& components,
                              const std::map<std::string, double>& params, std::string name = "symbolic");
  /// Partials by central differences with step 1e-5 * (1 + |coordinate|).
  static TensorField numeric(int dim, std::vector<Variance> variance,
                             std::function<Tensor(std::span<const double>, std::span<const double>)> fn,
                             std::string name = "numeric");
  /// g_ij of the metric under study, exact partials from the jet.
  static TensorField metric(int dim);
  /// C_ijk of the metric under study, exact partials from the jet.
  static TensorField cartan(int dim);

 private:
  std::vector<Variance> variance_;
  Sampler sampler_;
  std::string name_;
};

/// X_{..|k}: the result carries one extra lower index in last position.
/// Supported valences: (1,0), (0,1), (1,1), (0,2), (0,3).
Tensor h_cov_deriv(const PointGeometry& p, const TensorField& field);
/// X_{..}|_k with the Cartan tensor as connection coefficients.
Tensor v_cov_deriv(const PointGeometry& p, const TensorField& field);

Tensor h_cov_deriv(const MetricModel& model, const TensorField& field, std::span<const double> x,
                   std::span<const double> y);
Tensor v_cov_deriv(const MetricModel& model, const TensorField& field, std::span<const double> x,
                   std::span<const double> y);

std::pair<Tensor, Tensor> t_tensor(const MetricModel& model, std::span<const double> x, std::span<const double> y);

}  // namespace finslerlab
