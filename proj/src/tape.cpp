#include "neucredit/tape.hpp"

#include <cmath>

namespace neucredit {

namespace {

using Op = Tape::Op;

std::size_t broadcast_extent(std::size_t a, std::size_t b, const char* op, const Matrix& x,
                             const Matrix& y) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw DimensionError(std::string(op) + ": cannot broadcast " + x.shape_string() + " with " +
                       y.shape_string());
}

// Applies f to aligned entries of a and b under broadcasting.
template <typename F>
Matrix broadcast_binary(const Matrix& a, const Matrix& b, const char* op, F f) {
  const std::size_t rows = broadcast_extent(a.rows(), b.rows(), op, a, b);
  const std::size_t cols = broadcast_extent(a.cols(), b.cols(), op, a, b);
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t ai = a.rows() == 1 ? 0 : i;
    const std::size_t bi = b.rows() == 1 ? 0 : i;
    for (std::size_t j = 0; j < cols; ++j) {
      out(i, j) = f(a(ai, a.cols() == 1 ? 0 : j), b(bi, b.cols() == 1 ? 0 : j));
    }
  }
  return out;
}

// Adds weight(i, j) * g(i, j) into target, folding broadcast axes.
template <typename W>
void accumulate_reduced(Matrix& target, const Matrix& g, W weight) {
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const std::size_t ti = target.rows() == 1 ? 0 : i;
    for (std::size_t j = 0; j < g.cols(); ++j) {
      target(ti, target.cols() == 1 ? 0 : j) += weight(i, j) * g(i, j);
    }
  }
}

double at_broadcast(const Matrix& m, std::size_t i, std::size_t j) {
  return m(m.rows() == 1 ? 0 : i, m.cols() == 1 ? 0 : j);
}

template <typename F>
Matrix unary(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw std::invalid_argument(std::string(op) + ": operands must live on the same tape");
  }
  return *a.tape();
}

Tape& tape_of(Var a, const char* op) {
  if (!a.valid()) throw std::invalid_argument(std::string(op) + ": invalid Var");
  return *a.tape();
}

}  // namespace

Var Tape::leaf(Matrix value) {
  Var v = record(Op::leaf, std::move(value), {});
  nodes_[v.id()].needs_grad = true;
  return v;
}

Var Tape::constant(Matrix value) { return record(Op::constant, std::move(value), {}); }

Var Tape::record(Op op, Matrix value, std::vector<std::size_t> inputs, double p0, double p1,
                 std::size_t k0, std::size_t k1) {
  Node node{op, std::move(value), Matrix(), false, std::move(inputs), p0, p1, k0, k1};
  for (std::size_t in : node.inputs) node.needs_grad = node.needs_grad || nodes_[in].needs_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::invalid_argument("backward: root belongs to another tape");
  const Node& r = nodes_[root.id()];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw DimensionError("backward: root must be (1, 1), got " + r.value.shape_string());
  }
  for (auto& n : nodes_) n.grad = Matrix();
  grad_slot(root.id())(0, 0) = 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty() || n.inputs.empty()) continue;
    propagate(n);
  }
}

void Tape::propagate(const Node& n) {
  const Matrix& g = n.grad;
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].needs_grad; };
  auto in_value = [&](std::size_t k) -> const Matrix& { return nodes_[n.inputs[k]].value; };

  switch (n.op) {
    case Op::leaf:
    case Op::constant:
      break;
    case Op::matmul: {
      const Matrix& a = in_value(0);
      const Matrix& b = in_value(1);
      if (wants(0)) {
        Matrix& ga = grad_slot(n.inputs[0]);  // g (m,n) * b^T (n,k)
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t k = 0; k < a.cols(); ++k) {
            double acc = 0.0;
            const double* gr = g.row(i).data();
            const double* br = b.row(k).data();
            for (std::size_t j = 0; j < b.cols(); ++j) acc += gr[j] * br[j];
            ga(i, k) += acc;
          }
      }
      if (wants(1)) {
        Matrix& gb = grad_slot(n.inputs[1]);  // a^T (k,m) * g (m,n)
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            double* dst = gb.row(k).data();
            const double* gr = g.row(i).data();
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * gr[j];
          }
      }
      break;
    }
    case Op::add:
    case Op::sub: {
      if (wants(0)) accumulate_reduced(grad_slot(n.inputs[0]), g, [](auto, auto) { return 1.0; });
      const double sign = n.op == Op::add ? 1.0 : -1.0;
      if (wants(1))
        accumulate_reduced(grad_slot(n.inputs[1]), g, [sign](auto, auto) { return sign; });
      break;
    }
    case Op::mul: {
      const Matrix& a = in_value(0);
      const Matrix& b = in_value(1);
      if (wants(0))
        accumulate_reduced(grad_slot(n.inputs[0]), g,
                           [&b](std::size_t i, std::size_t j) { return at_broadcast(b, i, j); });
      if (wants(1))
        accumulate_reduced(grad_slot(n.inputs[1]), g,
                           [&a](std::size_t i, std::size_t j) { return at_broadcast(a, i, j); });
      break;
    }
    case Op::affine: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.p0 * g[i];
      break;
    }
    case Op::sigmoid: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        ga[i] += g[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::tanh: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        ga[i] += g[i] * (1.0 - y * y);
      }
      break;
    }
    case Op::exp: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
      break;
    }
    case Op::log: {
      const Matrix& a = in_value(0);
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a[i];
      break;
    }
    case Op::square: {
      const Matrix& a = in_value(0);
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * a[i] * g[i];
      break;
    }
    case Op::clamp: {
      const Matrix& a = in_value(0);
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a[i] >= n.p0 && a[i] <= n.p1) ga[i] += g[i];
      break;
    }
    case Op::concat_rows: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Matrix& part = in_value(k);
        if (wants(k)) {
          Matrix& gp = grad_slot(n.inputs[k]);
          for (std::size_t i = 0; i < part.rows(); ++i)
            for (std::size_t j = 0; j < part.cols(); ++j) gp(i, j) += g(offset + i, j);
        }
        offset += part.rows();
      }
      break;
    }
    case Op::concat_cols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Matrix& part = in_value(k);
        if (wants(k)) {
          Matrix& gp = grad_slot(n.inputs[k]);
          for (std::size_t i = 0; i < part.rows(); ++i)
            for (std::size_t j = 0; j < part.cols(); ++j) gp(i, j) += g(i, offset + j);
        }
        offset += part.cols();
      }
      break;
    }
    case Op::slice_rows: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(n.k0 + i, j) += g(i, j);
      break;
    }
    case Op::slice_cols: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i, n.k0 + j) += g(i, j);
      break;
    }
    case Op::repeat_rows: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i / n.k0, j) += g(i, j);
      break;
    }
    case Op::tile_rows: {
      Matrix& ga = grad_slot(n.inputs[0]);
      const std::size_t base = ga.rows();
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(i % base, j) += g(i, j);
      break;
    }
    case Op::group_sum_rows: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += g(i / n.k0, j);
      break;
    }
    case Op::reshape: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      break;
    }
    case Op::transpose: {
      Matrix& ga = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
      break;
    }
    case Op::sum: {
      Matrix& ga = grad_slot(n.inputs[0]);
      const double s = g(0, 0);
      for (auto& v : ga.values()) v += s;
      break;
    }
    case Op::select: {
      const Matrix& mask = in_value(0);
      for (std::size_t k = 1; k <= 2; ++k) {
        if (!wants(k)) continue;
        Matrix& gk = grad_slot(n.inputs[k]);
        const bool take_on = k == 1;
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j)
            if ((at_broadcast(mask, i, j) != 0.0) == take_on) gk(i, j) += g(i, j);
      }
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  return t.record(Op::matmul, matmul(a.value(), b.value()), {a.id(), b.id()});
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  return t.record(Op::add,
                  broadcast_binary(a.value(), b.value(), "add", [](double x, double y) { return x + y; }),
                  {a.id(), b.id()});
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  return t.record(Op::sub,
                  broadcast_binary(a.value(), b.value(), "sub", [](double x, double y) { return x - y; }),
                  {a.id(), b.id()});
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b, "hadamard");
  return t.record(
      Op::mul,
      broadcast_binary(a.value(), b.value(), "hadamard", [](double x, double y) { return x * y; }),
      {a.id(), b.id()});
}

Var affine(Var a, double alpha, double beta) {
  Tape& t = tape_of(a, "affine");
  return t.record(Op::affine, unary(a.value(), [=](double x) { return alpha * x + beta; }),
                  {a.id()}, alpha, beta);
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a, "sigmoid");
  return t.record(Op::sigmoid, sigmoid(a.value()), {a.id()});
}

Var tanh(Var a) {
  Tape& t = tape_of(a, "tanh");
  return t.record(Op::tanh, tanh(a.value()), {a.id()});
}

Var exp(Var a) {
  Tape& t = tape_of(a, "exp");
  return t.record(Op::exp, exp(a.value()), {a.id()});
}

Var log(Var a) {
  Tape& t = tape_of(a, "log");
  return t.record(Op::log, unary(a.value(), [](double x) { return std::log(x); }), {a.id()});
}

Var square(Var a) {
  Tape& t = tape_of(a, "square");
  return t.record(Op::square, unary(a.value(), [](double x) { return x * x; }), {a.id()});
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = tape_of(a, "clamp");
  return t.record(Op::clamp,
                  unary(a.value(), [=](double x) { return x < lo ? lo : (x > hi ? hi : x); }),
                  {a.id()}, lo, hi);
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  Tape& t = tape_of(parts.front(), "concat_rows");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_rows: operands on different tapes");
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + parts.front().value().shape_string() +
                           " vs " + p.value().shape_string());
    }
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    std::copy(v.values().begin(), v.values().end(), out.values().begin() + offset * cols);
    offset += v.rows();
  }
  return t.record(Op::concat_rows, std::move(out), std::move(ids));
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  Tape& t = tape_of(parts.front(), "concat_cols");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_cols: operands on different tapes");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + parts.front().value().shape_string() +
                           " vs " + p.value().shape_string());
    }
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    offset += v.cols();
  }
  return t.record(Op::concat_cols, std::move(out), std::move(ids));
}

Var slice_rows(Var a, std::size_t start, std::size_t count) {
  Tape& t = tape_of(a, "slice_rows");
  const Matrix& v = a.value();
  if (start + count > v.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " + v.shape_string());
  }
  Matrix out(count, v.cols());
  std::copy(v.values().begin() + start * v.cols(), v.values().begin() + (start + count) * v.cols(),
            out.values().begin());
  return t.record(Op::slice_rows, std::move(out), {a.id()}, 0.0, 0.0, start, count);
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  Tape& t = tape_of(a, "slice_cols");
  const Matrix& v = a.value();
  if (start + count > v.cols()) {
    throw DimensionError("slice_cols: cols [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " + v.shape_string());
  }
  Matrix out(v.rows(), count);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = v(i, start + j);
  return t.record(Op::slice_cols, std::move(out), {a.id()}, 0.0, 0.0, start, count);
}

Var repeat_rows(Var a, std::size_t times) {
  Tape& t = tape_of(a, "repeat_rows");
  const Matrix& v = a.value();
  Matrix out(v.rows() * times, v.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(i, j) = v(i / times, j);
  return t.record(Op::repeat_rows, std::move(out), {a.id()}, 0.0, 0.0, times);
}

Var tile_rows(Var a, std::size_t times) {
  Tape& t = tape_of(a, "tile_rows");
  const Matrix& v = a.value();
  Matrix out(v.rows() * times, v.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(i, j) = v(i % v.rows(), j);
  return t.record(Op::tile_rows, std::move(out), {a.id()}, 0.0, 0.0, times);
}

Var group_sum_rows(Var a, std::size_t group) {
  Tape& t = tape_of(a, "group_sum_rows");
  const Matrix& v = a.value();
  if (group == 0 || v.rows() % group != 0) {
    throw DimensionError("group_sum_rows: " + v.shape_string() + " rows not divisible by " +
                         std::to_string(group));
  }
  Matrix out(v.rows() / group, v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(i / group, j) += v(i, j);
  return t.record(Op::group_sum_rows, std::move(out), {a.id()}, 0.0, 0.0, group);
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a, "reshape");
  const Matrix& v = a.value();
  if (rows * cols != v.size()) {
    throw DimensionError("reshape: cannot view " + v.shape_string() + " as (" +
                         std::to_string(rows) + ", " + std::to_string(cols) + ")");
  }
  Matrix out(rows, cols, std::vector<double>(v.values().begin(), v.values().end()));
  return t.record(Op::reshape, std::move(out), {a.id()});
}

Var transpose(Var a) {
  Tape& t = tape_of(a, "transpose");
  return t.record(Op::transpose, transpose(a.value()), {a.id()});
}

Var sum(Var a) {
  Tape& t = tape_of(a, "sum");
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return t.record(Op::sum, Matrix(1, 1, s), {a.id()});
}

Var select(Var mask, Var on, Var off) {
  Tape& t = same_tape(on, off, "select");
  if (mask.tape() != &t) throw std::invalid_argument("select: mask on a different tape");
  const Matrix& a = on.value();
  const Matrix& b = off.value();
  const Matrix& m = mask.value();
  if (!a.same_shape(b)) {
    throw DimensionError("select: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
  if (!(m.same_shape(a) || (m.rows() == 1 && m.cols() == a.cols()))) {
    throw DimensionError("select: mask " + m.shape_string() + " does not cover " + a.shape_string());
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = at_broadcast(m, i, j) != 0.0 ? a(i, j) : b(i, j);
  return t.record(Op::select, std::move(out), {mask.id(), on.id(), off.id()});
}

}  // namespace neucredit
