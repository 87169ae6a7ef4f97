#include "finslerlab/model.hpp"

#include <algorithm>
#include <map>

namespace finslerlab {

namespace {

constexpr int kMaxY = 5;   // y-order of the Berwald tensor: three on top of g
constexpr int kMaxXY = 4;  // y-order under one x-derivative (spray needs d_x d^4_y)

// All non-decreasing tuples over [0, n) of length k.
void sorted_tuples(int n, int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  const int start = cur.empty() ? 0 : cur.back();
  for (int a = start; a < n; ++a) {
    cur.push_back(a);
    sorted_tuples(n, k, cur, out);
    cur.pop_back();
  }
}

int ipow(int base, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

std::vector<std::vector<int>> sorted_tuples(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  sorted_tuples(n, k, cur, out);
  return out;
}

}  // namespace

struct MetricModel::Table {
  using Key = std::pair<int, std::vector<int>>;  // (x index or -1, sorted y tuple)
  std::map<Key, Expr> exprs;

  struct Compiled {
    Program program;
    std::vector<Key> keys;
    std::array<std::vector<int>, 6> ymap;  // dense y index -> root
    std::array<std::vector<int>, 5> xmap;  // dense (x, y...) index -> root
  };
  Compiled fundamental;
  Compiled full;
  Program energy;
};

MetricModel::MetricModel(MetricSpec spec) : spec_(std::move(spec)), domain_(spec_.domain, spec_.params) {
  const int n = spec_.dim;
  auto table = std::make_shared<Table>();
  Differentiator diff;

  table->exprs[{-1, {}}] = spec_.energy;
  for (int k = 1; k <= kMaxY; ++k) {
    for (const auto& t : sorted_tuples(n, k)) {
      std::vector<int> parent(t.begin(), t.end() - 1);
      table->exprs[{-1, t}] = diff(table->exprs.at({-1, parent}), Variable::y(t.back()));
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k <= kMaxXY; ++k) {
      for (const auto& t : sorted_tuples(n, k)) {
        table->exprs[{j, t}] = diff(table->exprs.at({-1, t}), Variable::x(j));
      }
    }
  }

  auto compile = [&](Table::Compiled& c, int max_y, int max_xy) {
    std::map<Table::Key, int> root_of;
    std::vector<Expr> roots;
    for (const auto& [key, e] : table->exprs) {
      const int order = static_cast<int>(key.second.size());
      const bool wanted = key.first < 0 ? order <= max_y : order <= max_xy;
      if (!wanted) continue;
      root_of[key] = static_cast<int>(roots.size());
      roots.push_back(e);
      c.keys.push_back(key);
    }
    c.program = Program(roots, spec_.params);
    std::vector<int> idx;
    for (int k = 0; k <= max_y; ++k) {
      const int count = ipow(n, k);
      c.ymap[k].resize(count);
      for (int f = 0; f < count; ++f) {
        idx.assign(k, 0);
        for (int s = k - 1, r = f; s >= 0; --s, r /= n) idx[s] = r % n;
        std::sort(idx.begin(), idx.end());
        c.ymap[k][f] = root_of.at({-1, idx});
      }
    }
    for (int k = 0; k <= max_xy; ++k) {
      const int count = ipow(n, k + 1);
      c.xmap[k].resize(count);
      for (int f = 0; f < count; ++f) {
        idx.assign(k, 0);
        int r = f;
        for (int s = k - 1; s >= 0; --s, r /= n) idx[s] = r % n;
        std::sort(idx.begin(), idx.end());
        c.xmap[k][f] = root_of.at({r, idx});
      }
    }
  };
  compile(table->fundamental, 3, -1);
  compile(table->full, kMaxY, kMaxXY);
  table->energy = Program({spec_.energy}, spec_.params);
  table_ = std::move(table);
}

const Expr& MetricModel::derivative(std::span<const int> ys, int x_index) const {
  std::vector<int> t(ys.begin(), ys.end());
  std::sort(t.begin(), t.end());
  auto it = table_->exprs.find({x_index, t});
  if (it == table_->exprs.end()) throw std::out_of_range("derivative order not compiled into the model");
  return it->second;
}

EvalStatus MetricModel::energy(std::span<const double> x, std::span<const double> y, double& out) const {
  std::vector<double> scratch;
  return table_->energy.run(x, y, std::span<double>(&out, 1), scratch);
}

EvalStatus MetricModel::jet(std::span<const double> x, std::span<const double> y, Tier tier, Jet& out) const {
  const auto& c = tier == Tier::Full ? table_->full : table_->fundamental;
  std::vector<double> roots(c.program.root_count()), scratch;
  EvalStatus st = c.program.run(x, y, roots, scratch);
  if (!st.ok) return st;
  const int n = spec_.dim;
  out.n = n;
  out.full = tier == Tier::Full;
  for (std::size_t k = 0; k < out.y.size(); ++k) {
    out.y[k].clear();
    for (int r : c.ymap[k]) out.y[k].push_back(roots[r]);
  }
  for (std::size_t k = 0; k < out.xy.size(); ++k) {
    out.xy[k].clear();
    for (int r : c.xmap[k]) out.xy[k].push_back(roots[r]);
  }
  return st;
}

std::string MetricModel::describe_failure(Tier tier, const EvalStatus& st) const {
  const auto& c = tier == Tier::Full ? table_->full : table_->fundamental;
  return c.program.describe(st.failed_at);
}

void MetricModel::raise(Tier tier, const EvalStatus& st) const {
  const auto& c = tier == Tier::Full ? table_->full : table_->fundamental;
  c.program.raise(st);
}

std::size_t MetricModel::tape_size(Tier tier) const {
  return tier == Tier::Full ? table_->full.program.size() : table_->fundamental.program.size();
}

}  // namespace finslerlab
