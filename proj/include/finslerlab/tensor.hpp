#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace finslerlab {

enum class Variance { Upper, Lower };

/// Dense tensor with per-slot variance; components stored row-major over the multi-index.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, std::vector<Variance> variance)
      : dim_(dim), variance_(std::move(variance)), data_(ipow(dim, static_cast<int>(variance_.size())), 0.0) {}

  /// Lower indices only.
  static Tensor covariant(int dim, int rank) { return Tensor(dim, std::vector<Variance>(rank, Variance::Lower)); }
  /// Upper index first, then `lower` lower indices.
  static Tensor mixed(int dim, int lower) {
    std::vector<Variance> v{Variance::Upper};
    v.insert(v.end(), lower, Variance::Lower);
    return Tensor(dim, std::move(v));
  }
  static Tensor contravariant(int dim, int rank) { return Tensor(dim, std::vector<Variance>(rank, Variance::Upper)); }

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(variance_.size()); }
  const std::vector<Variance>& variance() const { return variance_; }
  int upper_count() const { return static_cast<int>(std::count(variance_.begin(), variance_.end(), Variance::Upper)); }
  int lower_count() const { return rank() - upper_count(); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  template <typename... I>
  double& operator()(I... idx) {
    return data_[flat({static_cast<int>(idx)...})];
  }
  template <typename... I>
  double operator()(I... idx) const {
    return data_[flat({static_cast<int>(idx)...})];
  }
  double& at(std::span<const int> idx) { return data_[flat(idx)]; }
  double at(std::span<const int> idx) const { return data_[flat(idx)]; }

  std::size_t flat(std::initializer_list<int> idx) const { return flat(std::span<const int>(idx.begin(), idx.size())); }
  std::size_t flat(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != rank()) throw std::out_of_range("tensor index arity");
    std::size_t k = 0;
    for (int i : idx) k = k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return k;
  }
  /// Inverse of flat(): fills `idx` (size rank()) from a flat offset.
  void unflatten(std::size_t k, std::span<int> idx) const {
    for (int s = rank() - 1; s >= 0; --s) {
      idx[s] = static_cast<int>(k % static_cast<std::size_t>(dim_));
      k /= static_cast<std::size_t>(dim_);
    }
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
  }

  /// Largest |T(idx) - T(permuted idx)| over all index transpositions of the given slots.
  double symmetry_defect(std::span<const int> slots) const;

  static int ipow(int base, int e) {
    int r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
  }

 private:
  int dim_ = 0;
  std::vector<Variance> variance_;
  std::vector<double> data_;
};

/// max |a - b| over components; tensors must share shape.
double max_abs_diff(const Tensor& a, const Tensor& b);

std::string variance_signature(const Tensor& t);  // e.g. "(1,2)"

}  // namespace finslerlab
