#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finslerlab/model.hpp"
#include "finslerlab/tensor.hpp"

namespace finslerlab {

/// Raised when an operation needs g^ij at a point where g is degenerate.
class DegenerateMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double nondegenerate = 1e-10;  ///< |det g| must exceed this times (max|g_ij|)^n
  double probe_radius = 1e-4;    ///< relative y-perturbation of the smoothness probe
  double probe_jump = 1e-2;      ///< max relative change of g across the probe neighborhood
};

/// Zeroth-layer tensors at one tangent sample.
struct FundamentalBundle {
  int dim = 0;
  double F = 0.0;
  double E = 0.0;  ///< F^2 / 2
  Tensor g;        ///< g_ij
  Tensor g_inv;    ///< g^ij, valid only when g_inv_valid
  bool g_inv_valid = false;
  double det_g = 0.0;
  Tensor l;        ///< l_i = dF/dy^i
  Tensor l_up;     ///< l^i = y^i / F
  Tensor l_der;    ///< l_ij = d l_j / dy^i
  Tensor h;        ///< h_ij = g_ij - l_i l_j
  Tensor C;        ///< C_ijk
  Tensor C_mixed;  ///< C^i_jk
  Tensor C_vec;    ///< C_i = C_ijk g^jk
  double C_sq = 0.0;

  /// max|g_ij| / F: the natural magnitude of degree -1 quantities such as C_ijk.
  double cartan_scale() const { return g.max_abs() / F; }
};

struct DomainStatus {
  bool in_domain = false;
  bool smooth = false;
  bool nondegenerate = false;
  bool positive_definite = false;
  std::vector<double> leading_minors;
  std::string detail;  ///< reason for the first failing flag, empty when all hold
};

/// Builds the bundle from an evaluated jet (any tier). Throws EvalError when F^2 <= 0.
FundamentalBundle fundamental_bundle(const Jet& jet, std::span<const double> y, const Tolerances& tol = {});

/// Evaluates the model at (x, y). Throws EvalError on a domain violation or when the point lies
/// outside the declared domain.
FundamentalBundle fundamental_bundle(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                                     const Tolerances& tol = {});

FundamentalBundle fundamental_bundle(const MetricSpec& spec, const Bindings& p, const Tolerances& tol = {});

DomainStatus domain_probe(const MetricModel& model, std::span<const double> x, std::span<const double> y,
                          const Tolerances& tol = {});

/// Successive leading principal minors of a square tensor of rank 2.
std::vector<double> leading_minors(const Tensor& g);

/// |F(x, y) - F(x, -y)|, or nullopt when -y is outside the domain.
std::optional<double> reversibility_residual(const MetricModel& model, std::span<const double> x,
                                             std::span<const double> y);

/// Checks the Euler/homogeneity identities of the bundle; returns the worst absolute defect
/// scaled by the magnitude of each identity's terms.
struct IdentityDefects {
  double energy_euler = 0.0;   ///< y^i dE/dy^i - 2E
  double metric_norm = 0.0;    ///< g_ij y^i y^j - F^2
  double cartan_y = 0.0;       ///< C_ijk y^k
  double angular_y = 0.0;      ///< h_ij y^j
  double unit_l = 0.0;         ///< l_i l^i - 1
  double angular_split = 0.0;  ///< h_ij - F l_ij
  double worst() const;
};
IdentityDefects identity_defects(const FundamentalBundle& b, const Jet& jet, std::span<const double> y);

}  // namespace finslerlab
