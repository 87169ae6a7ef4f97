#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "finslerlab/metric.hpp"
#include "finslerlab/model.hpp"

namespace testing {

using finslerlab::MetricModel;
using finslerlab::VarClass;

inline MetricModel model_of(const std::string& source) { return MetricModel(finslerlab::parse_metric(source)); }

const std::string kConic =
    "dim = 3\n"
    "param eps = 0.5\n"
    "energy = y3^2 + x3^2*(sqrt(y1^2 + x1^2*y2^2) + eps*y2)^2\n"
    "domain = y1^2 + y2^2 > 0\n";

const std::string kRiemann2 =
    "dim = 2\n"
    "energy = (1 + x1^2)*y1^2 + exp(x2)*y2^2 + x1*y1*y2\n";

const std::string kRanders2 =
    "dim = 2\n"
    "param eps = 0.5\n"
    "energy = (sqrt(y1^2 + x1^2*y2^2) + eps*y2)^2\n"
    "domain = y1^2 + y2^2 > 0\n";

const std::string kEuclid3 = "dim = 3\nenergy = y1^2 + y2^2 + y3^2\n";

using ScalarFn = std::function<double(std::span<const double>, std::span<const double>)>;

struct Coord {
  VarClass cls;
  int index;
};

/// Nested sixth-order central differences; `h` is the step per coordinate.
inline double fd_partial(const ScalarFn& f, std::vector<double> x, std::vector<double> y, std::vector<Coord> coords,
                         double h) {
  if (coords.empty()) return f(x, y);
  const Coord c = coords.back();
  coords.pop_back();
  static constexpr double w[] = {-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0};
  auto& v = c.cls == VarClass::X ? x : y;
  const double base = v[c.index];
  double acc = 0.0;
  for (int s = -3; s <= 3; ++s) {
    if (s == 0) continue;
    v[c.index] = base + s * h;
    acc += w[s + 3] * fd_partial(f, x, y, coords, h);
  }
  return acc / (60.0 * h);
}

/// First derivative of a vector-valued function by the same stencil.
inline std::vector<double> fd_vector(const std::function<std::vector<double>(std::span<const double>)>& f,
                                     std::vector<double> at, int index, double h) {
  static constexpr double w[] = {-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0};
  const double base = at[index];
  std::vector<double> acc;
  for (int s = -3; s <= 3; ++s) {
    if (s == 0) continue;
    at[index] = base + s * h;
    const auto v = f(at);
    if (acc.empty()) acc.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += w[s + 3] * v[i];
  }
  for (double& a : acc) a /= 60.0 * h;
  return acc;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
  std::vector<double> vec(int n, double a, double b) {
    std::vector<double> v(n);
    for (double& e : v) e = uniform(a, b);
    return v;
  }
  /// Away from the coordinate planes, where several metrics degenerate.
  std::vector<double> xpoint(int n) {
    std::vector<double> v(n);
    for (double& e : v) e = (uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uniform(0.3, 1.8);
    return v;
  }
};

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::fabs(e));
  return m;
}

}  // namespace testing
