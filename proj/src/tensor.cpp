#include "finslerlab/tensor.hpp"

namespace finslerlab {

double Tensor::symmetry_defect(std::span<const int> slots) const {
  double worst = 0.0;
  std::vector<int> idx(rank()), swapped(rank());
  for (std::size_t k = 0; k < data_.size(); ++k) {
    unflatten(k, idx);
    for (std::size_t a = 0; a < slots.size(); ++a) {
      for (std::size_t b = a + 1; b < slots.size(); ++b) {
        swapped = idx;
        std::swap(swapped[slots[a]], swapped[slots[b]]);
        worst = std::max(worst, std::fabs(data_[k] - at(swapped)));
      }
    }
  }
  return worst;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw std::invalid_argument("tensor shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

std::string variance_signature(const Tensor& t) {
  return "(" + std::to_string(t.upper_count()) + "," + std::to_string(t.lower_count()) + ")";
}

}  // namespace finslerlab
