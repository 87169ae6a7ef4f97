#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "finslerlab/model.hpp"

namespace finslerlab {

struct SampleBox {
  double lo = -2.0;
  double hi = 2.0;
  double exclude = 0.1;  ///< coordinates with |x_i| below this are redrawn
};

/// Raised when rejection sampling exhausts its budget.
class NoSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded source of sample points. Uses its own double conversion so streams are identical
/// across standard libraries.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  std::vector<double> x_point(int n, const SampleBox& box);
  /// Uniform on the unit sphere.
  std::vector<double> y_unit(int n);

 private:
  std::mt19937_64 gen_;
};

struct TangentSample {
  std::vector<double> x;
  std::vector<double> y;
};

/// A sample is usable when the domain predicate holds, F^2 > 0, and g is nondegenerate.
bool usable_sample(const MetricModel& model, std::span<const double> x, std::span<const double> y);

/// Draws `count` usable samples, giving up after `max_rejections` consecutive failures.
std::vector<TangentSample> sample_points(const MetricModel& model, Sampler& sampler, int count, const SampleBox& box,
                                         int max_rejections = 10000);

/// Draws `count` usable directions at a fixed x.
std::vector<std::vector<double>> sample_directions(const MetricModel& model, Sampler& sampler,
                                                   std::span<const double> x, int count, int max_rejections = 10000);

std::string domain_text(const MetricModel& model);

}  // namespace finslerlab
