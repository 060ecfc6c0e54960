#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "neucredit/matrix.hpp"

namespace neucredit {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode differentiation tape.
///
/// Every value is produced by one of the registered primitives below; the tape
/// stores each result with the indices of its operands, and backward() walks the
/// records in reverse to accumulate adjoints. Only nodes that depend on a leaf
/// carry gradients. A tape is single-threaded; independent passes use independent
/// tapes.
///
/// Binary element-wise primitives (add, sub, hadamard) broadcast an operand of
/// extent 1 along either axis, so bias columns (n, 1) and per-sample rows (1, c)
/// combine with (n, c) batches directly.
class Tape {
 public:
  enum class Op : std::uint8_t {
    leaf,
    constant,
    matmul,
    add,
    sub,
    mul,
    affine,
    sigmoid,
    tanh,
    exp,
    log,
    square,
    clamp,
    concat_rows,
    concat_cols,
    slice_rows,
    slice_cols,
    repeat_rows,
    tile_rows,
    group_sum_rows,
    reshape,
    transpose,
    sum,
    select,
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Matrix value);
  /// Non-differentiable input.
  Var constant(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  /// Adjoint of v after backward(); zeros when v does not influence the root.
  Matrix grad(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

  /// Accumulates d(root)/d(node) for every node; root must be (1, 1).
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Primitive recording, used by the free functions below.
  Var record(Op op, Matrix value, std::vector<std::size_t> inputs, double p0 = 0.0,
             double p1 = 0.0, std::size_t k0 = 0, std::size_t k1 = 0);

 private:
  struct Node {
    Op op;
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::vector<std::size_t> inputs;
    double p0 = 0.0;
    double p1 = 0.0;
    std::size_t k0 = 0;
    std::size_t k1 = 0;
  };

  Matrix& grad_slot(std::size_t id);
  void propagate(const Node& node);

  // deque keeps references to earlier values stable while new nodes are appended
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
/// alpha * a + beta, element-wise.
Var affine(Var a, double alpha, double beta);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// Clamps into [lo, hi]; gradient passes only where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var slice_cols(Var a, std::size_t start, std::size_t count);
/// Row r of a becomes rows r*times .. r*times+times-1.
Var repeat_rows(Var a, std::size_t times);
/// Stacks `times` copies of a vertically.
Var tile_rows(Var a, std::size_t times);
/// Sums each run of `group` consecutive rows; rows must be divisible by group.
Var group_sum_rows(Var a, std::size_t group);
/// Row-major reinterpretation with the same element count.
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var transpose(Var a);
/// Sum of all entries, shape (1, 1).
Var sum(Var a);
/// Column-wise choice: where mask != 0 take `on`, else `off`. mask is (1, c) or
/// the full shape and receives no gradient.
Var select(Var mask, Var on, Var off);

}  // namespace neucredit
