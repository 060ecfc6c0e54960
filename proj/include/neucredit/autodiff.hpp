#pragma once

#include <functional>
#include <string>
#include <unordered_map>

#include "neucredit/param_set.hpp"
#include "neucredit/tape.hpp"

namespace neucredit {

/// A ParamSet placed on a tape: name -> Var.
class ParamVars {
 public:
  ParamVars() = default;
  /// Records every entry of p on the tape, as leaves when differentiable is set
  /// and as constants otherwise.
  ParamVars(Tape& tape, const ParamSet& p, bool differentiable);

  Var at(const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  Tape& tape() const { return *tape_; }

  /// Gradient of every bound parameter after tape.backward(), in p's layout.
  ParamSet gradients(const ParamSet& layout) const;

 private:
  Tape* tape_ = nullptr;
  std::unordered_map<std::string, Var> vars_;
};

/// Scalar objective built from tape primitives; must return a (1, 1) Var.
using ScalarObjective = std::function<Var(const ParamVars&)>;

double evaluate(const ScalarObjective& f, const ParamSet& p);

/// Reverse-mode gradient of f at p; result has p's names and shapes.
ParamSet grad(const ScalarObjective& f, const ParamSet& p);
/// Same, also returning f(p).
ParamSet grad(const ScalarObjective& f, const ParamSet& p, double& value);

/// Central differences (f(p + h e_k) - f(p - h e_k)) / 2h per coordinate.
ParamSet finite_diff_grad(const ScalarObjective& f, const ParamSet& p, double h = 1e-5);

/// max over coordinates of |a - b| / max(1, |b|).
double max_relative_error(const ParamSet& a, const ParamSet& b);

}  // namespace neucredit
