#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "neucredit/autodiff.hpp"
#include "neucredit/matrix.hpp"
#include "neucredit/param_set.hpp"
#include "neucredit/rng.hpp"
#include "neucredit/tape.hpp"

namespace neucredit {

/// The four recurrent units: plain LSTM (interval slot zeroed), LSTM with the
/// interval appended as an input feature, T-LSTM (short-term memory discounted by
/// a preset g), and Tva-LSTM (memory lifted to d_h x d_m, scaled by a learned
/// exp(tanh(W_R * dt + B_R)) and projected back).
enum class CellKind { lstm, lstm_w_dt, tlstm, tva };

std::string_view to_string(CellKind kind);
/// Accepts "lstm", "lstm-w-dt", "tlstm", "tva"; throws std::invalid_argument.
CellKind parse_cell_kind(std::string_view name);

struct CellShape {
  std::size_t input = 1;   // d_x, interval excluded
  std::size_t hidden = 1;  // d_h
  std::size_t lift = 8;    // d_m, Tva-LSTM only
};

/// Non-increasing map dt >= 0 -> (0, 1] with g(0) = 1.
using DiscountFn = std::function<double(double)>;

/// g(dt) = 1 / log(e + dt).
double log_discount(double dt);

struct CellState {
  Matrix h;
  Matrix c;
  static CellState zeros(std::size_t hidden) { return {Matrix(hidden, 1), Matrix(hidden, 1)}; }
};

struct LstmParams {
  Matrix W_i, W_f, W_o, W_c;  // (d_h, d_x + 1)
  Matrix U_i, U_f, U_o, U_c;  // (d_h, d_h)
  Matrix b_i, b_f, b_o, b_c;  // (d_h, 1)
  bool uses_dt = false;

  static LstmParams zeros(std::size_t input, std::size_t hidden, bool uses_dt);
  static LstmParams random(std::size_t input, std::size_t hidden, bool uses_dt, Rng& rng);
  std::size_t input_size() const { return W_i.cols() - 1; }
  std::size_t hidden_size() const { return W_i.rows(); }
  void store(ParamSet& out, const std::string& prefix) const;
  static LstmParams load(const ParamSet& p, const std::string& prefix, bool uses_dt);
};

struct TlstmParams {
  LstmParams lstm;
  Matrix W_D;  // (d_h, d_h)
  Matrix b_D;  // (d_h, 1)
  DiscountFn discount = log_discount;

  static TlstmParams zeros(std::size_t input, std::size_t hidden);
  static TlstmParams random(std::size_t input, std::size_t hidden, Rng& rng);
  void store(ParamSet& out, const std::string& prefix) const;
  static TlstmParams load(const ParamSet& p, const std::string& prefix);
};

struct TvaLstmParams {
  LstmParams lstm;
  Matrix w_H;  // (1, d_m)
  Matrix B_H;  // (d_h, d_m)
  Matrix W_R;  // (d_h, d_m)
  Matrix B_R;  // (d_h, d_m)
  Matrix B_D;  // (d_h, d_m)
  Matrix w_L;  // (d_m, 1)
  Matrix b_L;  // (d_h, 1): added to the (d_h, 1) projection

  static TvaLstmParams zeros(std::size_t input, std::size_t hidden, std::size_t lift);
  static TvaLstmParams random(std::size_t input, std::size_t hidden, std::size_t lift, Rng& rng);
  std::size_t lift_size() const { return w_H.cols(); }
  void store(ParamSet& out, const std::string& prefix) const;
  static TvaLstmParams load(const ParamSet& p, const std::string& prefix);
};

/// Intermediates of the Tva-LSTM discounting unit for one state.
struct TvaDiscountTrace {
  Matrix C;        // tanh(c w_H + B_H)          (d_h, d_m)
  Matrix D;        // exp(tanh(W_R dt + B_R))     (d_h, d_m)
  Matrix C_D;      // tanh(C . D + B_D)           (d_h, d_m)
  Matrix c_prime;  // tanh(C_D w_L + b_L)         (d_h, 1)
};

CellState lstm_step(const LstmParams& p, const CellState& s, const Matrix& x, double dt);
CellState tlstm_step(const TlstmParams& p, const CellState& s, const Matrix& x, double dt);
Matrix tva_discount(const TvaLstmParams& p, const Matrix& c, double dt);
TvaDiscountTrace tva_discount_trace(const TvaLstmParams& p, const Matrix& c, double dt);
CellState tva_lstm_step(const TvaLstmParams& p, const CellState& s, const Matrix& x, double dt);

/// Adds a randomly initialised cell of the given kind to p under prefix:
/// kernels and recurrent matrices U(-r, r) with r = 1/sqrt(fan-in), biases zero.
void init_cell_params(ParamSet& p, const std::string& prefix, CellKind kind, const CellShape& shape,
                      Rng& rng);

/// A cell bound to parameters recorded on a tape, stepping a batch of column
/// states. Inputs: x (d_x, B), dt (1, B) with dt >= 0.
class TapeCell {
 public:
  struct State {
    Var h;  // (d_h, B)
    Var c;  // (d_h, B)
  };

  TapeCell(const ParamVars& vars, const std::string& prefix, CellKind kind, const CellShape& shape,
           DiscountFn discount = log_discount);

  CellKind kind() const { return kind_; }
  Tape& tape() const { return *tape_; }
  const CellShape& shape() const { return shape_; }

  State initial(std::size_t batch) const;
  /// Memory handed to the gates: c itself, or the discounted c' for T-/Tva-LSTM.
  Var adjusted_memory(Var c, const Matrix& dt) const;
  State step(const State& s, Var x, const Matrix& dt) const;
  /// Columns with mask == 0 keep their previous (h, c) bit-for-bit.
  State masked_step(const State& s, Var x, const Matrix& dt, const Matrix& mask) const;

 private:
  Tape* tape_;
  CellKind kind_;
  CellShape shape_;
  DiscountFn discount_;
  Var W_;  // gate kernels stacked i, f, o, c: (4 d_h, d_x + 1)
  Var U_;  // (4 d_h, d_h)
  Var b_;  // (4 d_h, 1)
  Var W_D_, b_D_;
  Var w_H_, B_H_, W_R_, B_R_, B_D_, w_L_, b_L_;  // lifted ones flattened to (d_h d_m, 1)
};

}  // namespace neucredit
