#include "finslerlab/sampling.hpp"

#include <cmath>

#include "finslerlab/fundamental.hpp"

namespace finslerlab {

std::vector<double> Sampler::x_point(int n, const SampleBox& box) {
  std::vector<double> x(n);
  for (double& v : x) {
    do {
      v = uniform(box.lo, box.hi);
    } while (std::fabs(v) < box.exclude);
  }
  return x;
}

std::vector<double> Sampler::y_unit(int n) {
  std::vector<double> y(n);
  for (;;) {
    double r2 = 0.0;
    for (double& v : y) {
      v = uniform(-1.0, 1.0);
      r2 += v * v;
    }
    if (r2 > 1e-4 && r2 <= 1.0) {
      const double r = std::sqrt(r2);
      for (double& v : y) v /= r;
      return y;
    }
  }
}

bool usable_sample(const MetricModel& model, std::span<const double> x, std::span<const double> y) {
  if (!model.in_domain(x, y)) return false;
  Jet jet;
  if (!model.jet(x, y, Tier::Fundamental, jet).ok) return false;
  if (!(jet.L() > 0.0)) return false;
  return fundamental_bundle(jet, y).g_inv_valid;
}

std::string domain_text(const MetricModel& model) {
  return model.spec().domain ? model.spec().domain->to_string() : "(whole slit tangent bundle)";
}

std::vector<TangentSample> sample_points(const MetricModel& model, Sampler& sampler, int count, const SampleBox& box,
                                         int max_rejections) {
  std::vector<TangentSample> out;
  int misses = 0;
  while (static_cast<int>(out.size()) < count) {
    TangentSample s{sampler.x_point(model.dim(), box), sampler.y_unit(model.dim())};
    if (usable_sample(model, s.x, s.y)) {
      out.push_back(std::move(s));
      misses = 0;
    } else if (++misses > max_rejections) {
      throw NoSamples("no usable samples found in the sampling box; domain: " + domain_text(model));
    }
  }
  return out;
}

std::vector<std::vector<double>> sample_directions(const MetricModel& model, Sampler& sampler,
                                                   std::span<const double> x, int count, int max_rejections) {
  std::vector<std::vector<double>> out;
  int misses = 0;
  while (static_cast<int>(out.size()) < count) {
    auto y = sampler.y_unit(model.dim());
    if (usable_sample(model, x, y)) {
      out.push_back(std::move(y));
      misses = 0;
    } else if (++misses > max_rejections) {
      throw NoSamples("no usable directions at this x; domain: " + domain_text(model));
    }
  }
  return out;
}

}  // namespace finslerlab
