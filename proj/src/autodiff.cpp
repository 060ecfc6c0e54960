#include "neucredit/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace neucredit {

ParamVars::ParamVars(Tape& tape, const ParamSet& p, bool differentiable) : tape_(&tape) {
  for (const auto& e : p) {
    vars_.emplace(e.name, differentiable ? tape.leaf(e.value) : tape.constant(e.value));
  }
}

Var ParamVars::at(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("ParamVars: no parameter named " + name);
  return it->second;
}

ParamSet ParamVars::gradients(const ParamSet& layout) const {
  ParamSet out;
  for (const auto& e : layout) out.add(e.name, tape_->grad(at(e.name)));
  return out;
}

namespace {

Var checked_root(const ScalarObjective& f, const ParamVars& vars) {
  Var root = f(vars);
  if (root.rows() != 1 || root.cols() != 1) {
    throw DimensionError("objective must return (1, 1), got " + root.value().shape_string());
  }
  return root;
}

}  // namespace

double evaluate(const ScalarObjective& f, const ParamSet& p) {
  Tape tape;
  ParamVars vars(tape, p, false);
  return checked_root(f, vars).value()(0, 0);
}

ParamSet grad(const ScalarObjective& f, const ParamSet& p, double& value) {
  Tape tape;
  ParamVars vars(tape, p, true);
  Var root = checked_root(f, vars);
  value = root.value()(0, 0);
  tape.backward(root);
  return vars.gradients(p);
}

ParamSet grad(const ScalarObjective& f, const ParamSet& p) {
  double unused = 0.0;
  return grad(f, p, unused);
}

ParamSet finite_diff_grad(const ScalarObjective& f, const ParamSet& p, double h) {
  ParamSet work = p;
  ParamSet out = p.zeros_like();
  for (std::size_t e = 0; e < work.size(); ++e) {
    Matrix& m = work.entry(e).value;
    Matrix& g = out.entry(e).value;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double original = m[i];
      m[i] = original + h;
      const double plus = evaluate(f, work);
      m[i] = original - h;
      const double minus = evaluate(f, work);
      m[i] = original;
      g[i] = (plus - minus) / (2.0 * h);
    }
  }
  return out;
}

double max_relative_error(const ParamSet& a, const ParamSet& b) {
  if (!a.same_layout(b)) throw DimensionError("max_relative_error: parameter layouts differ");
  double worst = 0.0;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const Matrix& x = a.entry(e).value;
    const Matrix& y = b.entry(e).value;
    for (std::size_t i = 0; i < x.size(); ++i) {
      worst = std::max(worst, std::abs(x[i] - y[i]) / std::max(1.0, std::abs(y[i])));
    }
  }
  return worst;
}

}  // namespace neucredit
