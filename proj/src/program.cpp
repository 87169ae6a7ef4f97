#include "finslerlab/program.hpp"

#include <cmath>
#include <unordered_map>

namespace finslerlab {

namespace {

double power(double base, const Rational& q, bool& ok) {
  if (q.den == 1) {
    if (base == 0.0 && q.num < 0) {
      ok = false;
      return 0.0;
    }
    if (q.num == 2) return base * base;
    if (q.num == 3) return base * base * base;
    return std::pow(base, static_cast<double>(q.num));
  }
  if (base <= 0.0) {
    ok = false;
    return 0.0;
  }
  if (q.den == 2) return std::pow(std::sqrt(base), static_cast<double>(q.num));
  if (q.den == 3) {
    double r = std::cbrt(base);
    if (r != 0.0 && std::isfinite(r)) r -= (r * r * r - base) / (3.0 * r * r);
    return std::pow(r, static_cast<double>(q.num));
  }
  return std::pow(base, q.to_double());
}

}  // namespace

Program::Program(const std::vector<Expr>& roots, const std::map<std::string, double>& params) {
  std::unordered_map<const Node*, int> slot;
  // Iterative post-order DFS so deep derivative trees cannot overflow the stack.
  for (const Expr& root : roots) {
    std::vector<std::pair<Expr, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [e, expanded] = stack.back();
      stack.pop_back();
      if (slot.count(e.id())) continue;
      const Node& n = e.node();
      if (!expanded) {
        stack.emplace_back(e, true);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
          if (!slot.count(it->id())) stack.emplace_back(*it, false);
        }
        continue;
      }
      Instr in{};
      in.op = n.kind;
      switch (n.kind) {
        case NodeKind::Constant: in.constant = n.value.value(); break;
        case NodeKind::Variable:
          if (n.variable.cls == VarClass::Param) {
            auto it = params.find(n.variable.name);
            if (it == params.end()) {
              throw EvalError(EvalErrorKind::Unbound, n.variable.name, "unbound parameter '" + n.variable.name + "'");
            }
            in.op = NodeKind::Constant;
            in.constant = it->second;
          } else {
            in.var_class = n.variable.cls;
            in.var_index = n.variable.index;
            if (n.variable.cls == VarClass::X) required_x_ = std::max(required_x_, n.variable.index + 1);
            if (n.variable.cls == VarClass::Y) required_y_ = std::max(required_y_, n.variable.index + 1);
          }
          break;
        case NodeKind::Pow:
          in.a = slot.at(n.children[0].id());
          in.exact_exponent = n.exponent.is_exact();
          in.exponent = n.exponent.rational();
          in.constant = n.exponent.value();
          break;
        default:
          in.a = slot.at(n.children[0].id());
          if (n.children.size() > 1) in.b = slot.at(n.children[1].id());
          break;
      }
      slot.emplace(e.id(), static_cast<int>(tape_.size()));
      tape_.push_back(in);
      sources_.push_back(e);
    }
    roots_.push_back(slot.at(root.id()));
  }
}

EvalStatus Program::run(std::span<const double> x, std::span<const double> y, std::span<double> out,
                        std::vector<double>& scratch) const {
  EvalStatus st;
  if (static_cast<int>(x.size()) < required_x_ || static_cast<int>(y.size()) < required_y_) {
    st.ok = false;
    st.kind = EvalErrorKind::Unbound;
    return st;
  }
  scratch.resize(tape_.size());
  double* r = scratch.data();
  const int n = static_cast<int>(tape_.size());
  for (int i = 0; i < n; ++i) {
    const Instr& in = tape_[i];
    double v = 0.0;
    bool ok = true;
    switch (in.op) {
      case NodeKind::Constant: v = in.constant; break;
      case NodeKind::Variable: v = in.var_class == VarClass::X ? x[in.var_index] : y[in.var_index]; break;
      case NodeKind::Neg: v = -r[in.a]; break;
      case NodeKind::Sqrt:
        if (r[in.a] < 0.0) ok = false;
        else v = std::sqrt(r[in.a]);
        break;
      case NodeKind::Sin: v = std::sin(r[in.a]); break;
      case NodeKind::Cos: v = std::cos(r[in.a]); break;
      case NodeKind::Exp: v = std::exp(r[in.a]); break;
      case NodeKind::Log:
        if (r[in.a] <= 0.0) ok = false;
        else v = std::log(r[in.a]);
        break;
      case NodeKind::Add: v = r[in.a] + r[in.b]; break;
      case NodeKind::Sub: v = r[in.a] - r[in.b]; break;
      case NodeKind::Mul: v = r[in.a] * r[in.b]; break;
      case NodeKind::Div:
        if (r[in.b] == 0.0) ok = false;
        else v = r[in.a] / r[in.b];
        break;
      case NodeKind::Pow:
        if (in.exact_exponent) {
          v = power(r[in.a], in.exponent, ok);
        } else if (r[in.a] <= 0.0) {
          ok = false;
        } else {
          v = std::pow(r[in.a], in.constant);
        }
        break;
    }
    if (!ok) {
      st.ok = false;
      st.kind = EvalErrorKind::DomainViolation;
      st.failed_at = i;
      return st;
    }
    if (!std::isfinite(v)) {
      st.ok = false;
      st.kind = EvalErrorKind::NonFinite;
      st.failed_at = i;
      return st;
    }
    r[i] = v;
  }
  for (std::size_t k = 0; k < roots_.size(); ++k) out[k] = r[roots_[k]];
  return st;
}

void Program::evaluate(std::span<const double> x, std::span<const double> y, std::span<double> out,
                       std::vector<double>& scratch) const {
  const EvalStatus st = run(x, y, out, scratch);
  if (!st.ok) raise(st);
}

std::string Program::describe(int instruction) const {
  if (instruction < 0 || instruction >= static_cast<int>(sources_.size())) return {};
  return sources_[instruction].to_string();
}

void Program::raise(const EvalStatus& status) const {
  const std::string sub = describe(status.failed_at);
  switch (status.kind) {
    case EvalErrorKind::DomainViolation:
      throw EvalError(status.kind, sub, "domain violation in " + sub);
    case EvalErrorKind::NonFinite:
      throw EvalError(status.kind, sub, "non-finite result in " + sub);
    case EvalErrorKind::Unbound:
      throw EvalError(status.kind, sub, "variable vector shorter than the expression requires");
  }
  throw EvalError(status.kind, sub, "evaluation failed");
}

double evaluate(const Expr& e, const Bindings& b) {
  const Program prog({e}, b.params);
  std::vector<double> scratch;
  double out = 0.0;
  prog.evaluate(b.x, b.y, std::span<double>(&out, 1), scratch);
  return out;
}

}  // namespace finslerlab
