#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "finslerlab/metric.hpp"
#include "finslerlab/program.hpp"

namespace finslerlab {

/// Derivative depth compiled into a tape.
enum class Tier {
  Fundamental,  ///< y-derivatives of the energy up to order 3 (g, C)
  Full,         ///< y-derivatives up to order 5 and one x-derivative on top of orders 0..4
};

/// Dense derivative arrays of the energy L = F^2 at one point.
/// y[k] holds the n^k components of d^k L / dy^a1..dy^ak;
/// xy[k] holds n^(k+1) components, d/dx^j d^k L / dy^a1..dy^ak with j as the leading index.
struct Jet {
  int n = 0;
  bool full = false;
  std::array<std::vector<double>, 6> y;
  std::array<std::vector<double>, 5> xy;

  double L() const { return y[0][0]; }
  double Ly(int a) const { return y[1][a]; }
  double Lyy(int a, int b) const { return y[2][a * n + b]; }
  double Lyyy(int a, int b, int c) const { return y[3][(a * n + b) * n + c]; }
  double Ly4(int a, int b, int c, int d) const { return y[4][((a * n + b) * n + c) * n + d]; }
  double Ly5(int a, int b, int c, int d, int e) const { return y[5][(((a * n + b) * n + c) * n + d) * n + e]; }
  double Lx(int j) const { return xy[0][j]; }
  double Lxy(int j, int a) const { return xy[1][j * n + a]; }
  double Lxyy(int j, int a, int b) const { return xy[2][(j * n + a) * n + b]; }
  double Lxy3(int j, int a, int b, int c) const { return xy[3][((j * n + a) * n + b) * n + c]; }
  double Lxy4(int j, int a, int b, int c, int d) const { return xy[4][(((j * n + a) * n + b) * n + c) * n + d]; }
};

/// A MetricSpec with its symbolic derivative tables compiled to evaluation tapes.
/// Built once; afterwards read-only and safe to share between threads.
class MetricModel {
 public:
  explicit MetricModel(MetricSpec spec);

  const MetricSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }

  /// Symbolic partial: y-multi-index `ys` (any order) and optional x index (-1 for none).
  /// Only orders compiled into the model are available.
  const Expr& derivative(std::span<const int> ys, int x_index = -1) const;

  bool in_domain(std::span<const double> x, std::span<const double> y) const { return domain_.contains(x, y); }

  /// Evaluates the energy only.
  EvalStatus energy(std::span<const double> x, std::span<const double> y, double& out) const;

  /// Evaluates all partials of the requested tier; on failure `status.failed_at` refers to
  /// describe_failure().
  EvalStatus jet(std::span<const double> x, std::span<const double> y, Tier tier, Jet& out) const;
  std::string describe_failure(Tier tier, const EvalStatus& st) const;
  [[noreturn]] void raise(Tier tier, const EvalStatus& st) const;

  std::size_t tape_size(Tier tier) const;

 private:
  struct Table;
  MetricSpec spec_;
  DomainTest domain_;
  std::shared_ptr<const Table> table_;
};

}  // namespace finslerlab
