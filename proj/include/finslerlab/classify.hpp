#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "finslerlab/connections.hpp"
#include "finslerlab/sampling.hpp"

namespace finslerlab {

struct SemiCFit {
  bool defined = false;
  double r = 0.0;
  double t = 0.0;
  double residual = 0.0;
  bool degenerate_split = false;  ///< both models coincide, so r is arbitrary; reported as r = 0
};

struct PointClassification {
  std::vector<double> x;
  std::vector<double> y;
  double riemannian_residual = 0.0;  ///< max|C_ijk|
  double berwald_residual = 0.0;     ///< max|G^h_ijk|
  double landsberg_residual = 0.0;   ///< max|L_ijk|
  std::optional<double> c_reducible_residual;  ///< dim >= 3 only
  std::optional<double> c2like_residual;       ///< undefined when C^2 ~ 0 with C_i != 0
  SemiCFit semi_c;
  std::optional<double> reversible_residual;  ///< |F(x,y) - F(x,-y)|; none when -y is outside the domain
  std::optional<double> main_scalar_2d;       ///< J with F C_ijk = J eta_i eta_j eta_k
  std::optional<double> main_scalar_residual;
  /// Scales the residuals are compared against: max|g|/F for degree -1 quantities, max|g| for
  /// Landsberg and the main-scalar decomposition, F for reversibility.
  double cartan_scale = 0.0;
  double landsberg_scale = 0.0;
  double F = 0.0;
};

/// Cartan-tensor models built from the trace C_i.
Tensor c_reducible_model(const FundamentalBundle& b);
Tensor c2like_model(const FundamentalBundle& b);
SemiCFit semi_c_fit(const FundamentalBundle& b, double tol);

PointClassification classify_point(const PointGeometry& p, double tol);
PointClassification classify_point(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                                   double tol);

struct ClassifyOptions {
  std::uint64_t seed = 0;
  int n_points = 50;
  SampleBox box;
  double tol = 1e-8;
};

struct Verdict {
  std::string name;
  std::string status;  ///< "member", "non-member" or "n/a"
  double worst = 0.0;  ///< largest residual/scale over the samples that define it
  double threshold = 0.0;
  int evaluated = 0;
};

struct ClassificationReport {
  ClassifyOptions options;
  std::vector<PointClassification> points;
  std::vector<Verdict> verdicts;
  const Verdict* verdict(const std::string& name) const;
};

ClassificationReport classify_metric(const MetricModel& model, const ClassifyOptions& options);

}  // namespace finslerlab
