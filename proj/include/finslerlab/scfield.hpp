#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finslerlab/connections.hpp"
#include "finslerlab/sampling.hpp"

namespace finslerlab {

enum class FieldKind { Generic, Gradient, Conformal, Concurrent };
enum class Condition { SC, C, F, CC };

std::string to_string(FieldKind k);
std::string to_string(Condition c);
Condition parse_condition(const std::string& text);

/// Components B^i(x) (or f_i / sigma_h for the gradient kinds), never depending on y.
struct VectorFieldSpec {
  int dim = 0;
  std::vector<Expr> components;
  FieldKind kind = FieldKind::Generic;
  std::optional<Expr> potential;
  std::map<std::string, double> params;
  std::string label;

  /// Parses "B1;B2;...". Throws ParseError, or std::invalid_argument when a component uses y.
  static VectorFieldSpec parse(const std::string& components, int dim, const std::map<std::string, double>& params,
                               FieldKind kind = FieldKind::Generic);
  /// Gradient of a potential: components d(potential)/dx^i.
  static VectorFieldSpec gradient_of(const std::string& potential, int dim, const std::map<std::string, double>& params,
                                     FieldKind kind);

  std::vector<double> evaluate(std::span<const double> x) const;
  TensorField as_tensor_field() const;
  std::string to_text() const;  ///< "B1;B2;..."
};

struct NullSpace {
  std::vector<std::vector<double>> basis;  ///< orthonormal columns
  std::vector<double> singular_values;     ///< descending
  double sigma_max = 0.0;
  bool c_zero = false;  ///< C vanished at every sample; the basis is the whole space
  int samples = 0;
};

/// max |v^h C_hij| over the given directions, relative to max|g|/F, for a unit vector v.
double sc_residual_at(const MetricModel& model, std::span<const double> x, std::span<const double> v,
                      const std::vector<std::vector<double>>& ys);

NullSpace sc_nullspace_at(const MetricModel& model, std::span<const double> x,
                          const std::vector<std::vector<double>>& ys, double tol = 1e-8);

/// Largest principal angle between span(a) and span(b) when dims match, otherwise pi/2.
double subspace_angle(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);
/// Principal angles between two subspaces, ascending.
std::vector<double> principal_angles(const std::vector<std::vector<double>>& a,
                                     const std::vector<std::vector<double>>& b);

struct CandidateField {
  std::string name;
  VectorFieldSpec field;  ///< may use the placeholder parameter f, taken as 1 when matching
};

struct SCOptions {
  std::uint64_t seed = 0;
  int xsamples = 10;
  int ysamples = 0;  ///< 0: 3 * n(n+1)/2, at least 12
  SampleBox box;
  double tol = 1e-8;
  double angle_threshold = 1e-3;  ///< radians
  double continuity_step = 1e-4;
  int fresh_samples = 10;
};

struct SCAtX {
  std::vector<double> x;
  NullSpace nullspace;
  int local_dimension = 0;          ///< null directions that persist at a nearby x
  double soundness_residual = 0.0;  ///< worst sc_residual_at of the basis on fresh directions
  /// One-dimensional null spaces only: lambda_i = b^j g_ij tested for y-independence of its
  /// direction and for lambda ^ d lambda = 0.
  std::optional<double> lambda_y_variation;
  std::optional<double> frobenius_defect;
};

struct SCFieldReport {
  std::vector<SCAtX> per_x;
  int consistent_dimension = 0;
  bool c_zero_everywhere = false;
  std::optional<std::string> candidate_field;  ///< name of the matching candidate
  std::optional<std::string> candidate_text;
  std::optional<bool> gradient_flag;
};

SCFieldReport sc_detect(const MetricModel& model, const std::vector<std::vector<double>>& xs, const SCOptions& options,
                        const std::vector<CandidateField>& candidates = {});
/// Draws the x-samples from the options' box.
SCFieldReport sc_detect(const MetricModel& model, const SCOptions& options,
                        const std::vector<CandidateField>& candidates = {});

struct ConditionSample {
  std::vector<double> x;
  std::vector<double> y;
  double residual = 0.0;       ///< scaled residual of the condition's contraction
  double cvf_residual = 0.0;   ///< C only: max|B^i_|j + delta^i_j|
};

struct ConditionReport {
  Condition condition = Condition::SC;
  double tol = 0.0;
  double residual = 0.0;      ///< worst contraction residual over samples
  double cvf_residual = 0.0;  ///< C only
  bool passed = false;
  std::vector<ConditionSample> samples;
};

ConditionReport check_condition(const MetricModel& model, const VectorFieldSpec& field, Condition condition,
                                const std::vector<TangentSample>& samples, double tol);

struct InvariantSample {
  std::vector<double> x;
  std::vector<double> y;
  double B0 = 0.0;
  double B2F2_minus_B02 = 0.0;
  double det_h_cov = 0.0;
  bool B0_small = false;
  bool gram_small = false;
};

struct InvariantsReport {
  std::vector<InvariantSample> samples;
  bool any_flagged = false;
};

InvariantsReport independence_invariants(const MetricModel& model, const VectorFieldSpec& field,
                                         const std::vector<TangentSample>& samples, double tol = 1e-8);

}  // namespace finslerlab
