#include "neucredit/cells.hpp"

#include <cmath>
#include <numbers>

namespace neucredit {

namespace {

const char* const kGates[] = {"i", "f", "o", "c"};

Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return rng.uniform_matrix(rows, cols, -r, r);
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": expected (" + std::to_string(rows) + ", " + std::to_string(cols) +
                         "), got " + m.shape_string());
  }
}

void require_interval(const Matrix& dt) {
  for (double v : dt.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("time interval must be finite and >= 0, got " + std::to_string(v));
    }
  }
}

CellState run_single(const ParamSet& p, CellKind kind, const CellShape& shape, DiscountFn discount,
                     const CellState& s, const Matrix& x, double dt) {
  require_shape(x, shape.input, 1, "cell input x");
  require_shape(s.h, shape.hidden, 1, "cell state h");
  require_shape(s.c, shape.hidden, 1, "cell state c");
  Tape tape;
  ParamVars vars(tape, p, false);
  TapeCell cell(vars, "cell", kind, shape, std::move(discount));
  TapeCell::State st{tape.constant(s.h), tape.constant(s.c)};
  auto next = cell.step(st, tape.constant(x), Matrix(1, 1, dt));
  return {next.h.value(), next.c.value()};
}

}  // namespace

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::lstm: return "lstm";
    case CellKind::lstm_w_dt: return "lstm-w-dt";
    case CellKind::tlstm: return "tlstm";
    case CellKind::tva: return "tva";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  if (name == "lstm") return CellKind::lstm;
  if (name == "lstm-w-dt") return CellKind::lstm_w_dt;
  if (name == "tlstm") return CellKind::tlstm;
  if (name == "tva") return CellKind::tva;
  throw std::invalid_argument("unknown cell kind '" + std::string(name) +
                              "' (expected lstm, lstm-w-dt, tlstm, tva)");
}

double log_discount(double dt) { return 1.0 / std::log(std::numbers::e + dt); }

// ---- typed parameter structs ----------------------------------------------

LstmParams LstmParams::zeros(std::size_t input, std::size_t hidden, bool uses_dt) {
  LstmParams p;
  for (Matrix* w : {&p.W_i, &p.W_f, &p.W_o, &p.W_c}) *w = Matrix(hidden, input + 1);
  for (Matrix* u : {&p.U_i, &p.U_f, &p.U_o, &p.U_c}) *u = Matrix(hidden, hidden);
  for (Matrix* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) *b = Matrix(hidden, 1);
  p.uses_dt = uses_dt;
  return p;
}

LstmParams LstmParams::random(std::size_t input, std::size_t hidden, bool uses_dt, Rng& rng) {
  LstmParams p = zeros(input, hidden, uses_dt);
  for (Matrix* w : {&p.W_i, &p.W_f, &p.W_o, &p.W_c}) *w = uniform_init(rng, hidden, input + 1, input + 1);
  for (Matrix* u : {&p.U_i, &p.U_f, &p.U_o, &p.U_c}) *u = uniform_init(rng, hidden, hidden, hidden);
  return p;
}

void LstmParams::store(ParamSet& out, const std::string& prefix) const {
  const Matrix* ws[] = {&W_i, &W_f, &W_o, &W_c};
  const Matrix* us[] = {&U_i, &U_f, &U_o, &U_c};
  const Matrix* bs[] = {&b_i, &b_f, &b_o, &b_c};
  for (int g = 0; g < 4; ++g) out.add(prefix + ".W_" + kGates[g], *ws[g]);
  for (int g = 0; g < 4; ++g) out.add(prefix + ".U_" + kGates[g], *us[g]);
  for (int g = 0; g < 4; ++g) out.add(prefix + ".b_" + kGates[g], *bs[g]);
}

LstmParams LstmParams::load(const ParamSet& p, const std::string& prefix, bool uses_dt) {
  LstmParams out;
  Matrix* ws[] = {&out.W_i, &out.W_f, &out.W_o, &out.W_c};
  Matrix* us[] = {&out.U_i, &out.U_f, &out.U_o, &out.U_c};
  Matrix* bs[] = {&out.b_i, &out.b_f, &out.b_o, &out.b_c};
  for (int g = 0; g < 4; ++g) {
    *ws[g] = p.at(prefix + ".W_" + kGates[g]);
    *us[g] = p.at(prefix + ".U_" + kGates[g]);
    *bs[g] = p.at(prefix + ".b_" + kGates[g]);
  }
  out.uses_dt = uses_dt;
  return out;
}

TlstmParams TlstmParams::zeros(std::size_t input, std::size_t hidden) {
  return {LstmParams::zeros(input, hidden, false), Matrix(hidden, hidden), Matrix(hidden, 1)};
}

TlstmParams TlstmParams::random(std::size_t input, std::size_t hidden, Rng& rng) {
  TlstmParams p = zeros(input, hidden);
  p.lstm = LstmParams::random(input, hidden, false, rng);
  p.W_D = uniform_init(rng, hidden, hidden, hidden);
  return p;
}

void TlstmParams::store(ParamSet& out, const std::string& prefix) const {
  lstm.store(out, prefix);
  out.add(prefix + ".W_D", W_D);
  out.add(prefix + ".b_D", b_D);
}

TlstmParams TlstmParams::load(const ParamSet& p, const std::string& prefix) {
  TlstmParams out;
  out.lstm = LstmParams::load(p, prefix, false);
  out.W_D = p.at(prefix + ".W_D");
  out.b_D = p.at(prefix + ".b_D");
  return out;
}

TvaLstmParams TvaLstmParams::zeros(std::size_t input, std::size_t hidden, std::size_t lift) {
  TvaLstmParams p;
  p.lstm = LstmParams::zeros(input, hidden, false);
  p.w_H = Matrix(1, lift);
  p.B_H = Matrix(hidden, lift);
  p.W_R = Matrix(hidden, lift);
  p.B_R = Matrix(hidden, lift);
  p.B_D = Matrix(hidden, lift);
  p.w_L = Matrix(lift, 1);
  p.b_L = Matrix(hidden, 1);
  return p;
}

TvaLstmParams TvaLstmParams::random(std::size_t input, std::size_t hidden, std::size_t lift, Rng& rng) {
  TvaLstmParams p = zeros(input, hidden, lift);
  p.lstm = LstmParams::random(input, hidden, false, rng);
  p.w_H = uniform_init(rng, 1, lift, 1);
  p.W_R = uniform_init(rng, hidden, lift, 1);
  p.w_L = uniform_init(rng, lift, 1, lift);
  return p;
}

void TvaLstmParams::store(ParamSet& out, const std::string& prefix) const {
  lstm.store(out, prefix);
  out.add(prefix + ".w_H", w_H);
  out.add(prefix + ".B_H", B_H);
  out.add(prefix + ".W_R", W_R);
  out.add(prefix + ".B_R", B_R);
  out.add(prefix + ".B_D", B_D);
  out.add(prefix + ".w_L", w_L);
  out.add(prefix + ".b_L", b_L);
}

TvaLstmParams TvaLstmParams::load(const ParamSet& p, const std::string& prefix) {
  TvaLstmParams out;
  out.lstm = LstmParams::load(p, prefix, false);
  out.w_H = p.at(prefix + ".w_H");
  out.B_H = p.at(prefix + ".B_H");
  out.W_R = p.at(prefix + ".W_R");
  out.B_R = p.at(prefix + ".B_R");
  out.B_D = p.at(prefix + ".B_D");
  out.w_L = p.at(prefix + ".w_L");
  out.b_L = p.at(prefix + ".b_L");
  return out;
}

void init_cell_params(ParamSet& p, const std::string& prefix, CellKind kind, const CellShape& shape,
                      Rng& rng) {
  switch (kind) {
    case CellKind::lstm:
    case CellKind::lstm_w_dt:
      LstmParams::random(shape.input, shape.hidden, kind == CellKind::lstm_w_dt, rng).store(p, prefix);
      break;
    case CellKind::tlstm:
      TlstmParams::random(shape.input, shape.hidden, rng).store(p, prefix);
      break;
    case CellKind::tva:
      TvaLstmParams::random(shape.input, shape.hidden, shape.lift, rng).store(p, prefix);
      break;
  }
}

// ---- single-state steps -----------------------------------------------------

CellState lstm_step(const LstmParams& p, const CellState& s, const Matrix& x, double dt) {
  ParamSet ps;
  p.store(ps, "cell");
  const CellShape shape{p.input_size(), p.hidden_size(), 1};
  return run_single(ps, p.uses_dt ? CellKind::lstm_w_dt : CellKind::lstm, shape, log_discount, s, x, dt);
}

CellState tlstm_step(const TlstmParams& p, const CellState& s, const Matrix& x, double dt) {
  ParamSet ps;
  p.store(ps, "cell");
  const CellShape shape{p.lstm.input_size(), p.lstm.hidden_size(), 1};
  return run_single(ps, CellKind::tlstm, shape, p.discount, s, x, dt);
}

TvaDiscountTrace tva_discount_trace(const TvaLstmParams& p, const Matrix& c, double dt) {
  const std::size_t dh = p.lstm.hidden_size();
  const std::size_t dm = p.lift_size();
  require_shape(c, dh, 1, "tva_discount c");
  require_interval(Matrix(1, 1, dt));
  // Same expressions as the batched tape path, in (d_h, d_m) layout.
  TvaDiscountTrace t{Matrix(dh, dm), Matrix(dh, dm), Matrix(dh, dm), Matrix(dh, 1)};
  for (std::size_t k = 0; k < dh; ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < dm; ++m) {
      t.C(k, m) = std::tanh(c(k, 0) * p.w_H(0, m) + p.B_H(k, m));
      t.D(k, m) = std::exp(std::tanh(p.W_R(k, m) * dt + p.B_R(k, m)));
      t.C_D(k, m) = std::tanh(t.C(k, m) * t.D(k, m) + p.B_D(k, m));
      acc += t.C_D(k, m) * p.w_L(m, 0);
    }
    t.c_prime(k, 0) = std::tanh(acc + p.b_L(k, 0));
  }
  return t;
}

Matrix tva_discount(const TvaLstmParams& p, const Matrix& c, double dt) {
  const std::size_t dh = p.lstm.hidden_size();
  require_shape(c, dh, 1, "tva_discount c");
  require_interval(Matrix(1, 1, dt));
  ParamSet ps;
  p.store(ps, "cell");
  Tape tape;
  ParamVars vars(tape, ps, false);
  TapeCell cell(vars, "cell", CellKind::tva, {p.lstm.input_size(), dh, p.lift_size()});
  return cell.adjusted_memory(tape.constant(c), Matrix(1, 1, dt)).value();
}

CellState tva_lstm_step(const TvaLstmParams& p, const CellState& s, const Matrix& x, double dt) {
  ParamSet ps;
  p.store(ps, "cell");
  const CellShape shape{p.lstm.input_size(), p.lstm.hidden_size(), p.lift_size()};
  return run_single(ps, CellKind::tva, shape, log_discount, s, x, dt);
}

// ---- tape cell ---------------------------------------------------------------

TapeCell::TapeCell(const ParamVars& vars, const std::string& prefix, CellKind kind,
                   const CellShape& shape, DiscountFn discount)
    : tape_(&vars.tape()), kind_(kind), shape_(shape), discount_(std::move(discount)) {
  auto get = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    Var v = vars.at(prefix + "." + name);
    require_shape(v.value(), rows, cols, prefix + "." + name);
    return v;
  };
  const std::size_t dh = shape.hidden;
  const std::size_t dx = shape.input;
  std::vector<Var> ws, us, bs;
  for (const char* g : kGates) {
    ws.push_back(get(std::string("W_") + g, dh, dx + 1));
    us.push_back(get(std::string("U_") + g, dh, dh));
    bs.push_back(get(std::string("b_") + g, dh, 1));
  }
  W_ = concat_rows(ws);
  U_ = concat_rows(us);
  b_ = concat_rows(bs);

  if (kind == CellKind::tlstm) {
    W_D_ = get("W_D", dh, dh);
    b_D_ = get("b_D", dh, 1);
  } else if (kind == CellKind::tva) {
    const std::size_t dm = shape.lift;
    if (dm == 0) throw DimensionError("Tva-LSTM lift dimension must be >= 1");
    w_H_ = tile_rows(reshape(get("w_H", 1, dm), dm, 1), dh);
    B_H_ = reshape(get("B_H", dh, dm), dh * dm, 1);
    W_R_ = reshape(get("W_R", dh, dm), dh * dm, 1);
    B_R_ = reshape(get("B_R", dh, dm), dh * dm, 1);
    B_D_ = reshape(get("B_D", dh, dm), dh * dm, 1);
    w_L_ = tile_rows(get("w_L", dm, 1), dh);
    b_L_ = get("b_L", dh, 1);
  }
}

TapeCell::State TapeCell::initial(std::size_t batch) const {
  return {tape_->constant(Matrix(shape_.hidden, batch)), tape_->constant(Matrix(shape_.hidden, batch))};
}

Var TapeCell::adjusted_memory(Var c, const Matrix& dt) const {
  require_interval(dt);
  switch (kind_) {
    case CellKind::lstm:
    case CellKind::lstm_w_dt:
      return c;
    case CellKind::tlstm: {
      Matrix g(1, dt.cols());
      for (std::size_t j = 0; j < dt.cols(); ++j) g(0, j) = discount_(dt(0, j));
      Var short_term = tanh(add(matmul(W_D_, c), b_D_));
      Var long_term = sub(c, short_term);
      return add(long_term, hadamard(short_term, tape_->constant(std::move(g))));
    }
    case CellKind::tva: {
      // Lifted (d_h, d_m) matrices are carried as (d_h * d_m, B), row k * d_m + m.
      const std::size_t dm = shape_.lift;
      Var lifted = tanh(add(hadamard(repeat_rows(c, dm), w_H_), B_H_));
      Var rates = exp(tanh(add(hadamard(W_R_, tape_->constant(dt)), B_R_)));
      Var discounted = tanh(add(hadamard(lifted, rates), B_D_));
      return tanh(add(group_sum_rows(hadamard(discounted, w_L_), dm), b_L_));
    }
  }
  return c;
}

TapeCell::State TapeCell::step(const State& s, Var x, const Matrix& dt) const {
  const std::size_t batch = x.cols();
  if (x.rows() != shape_.input || dt.rows() != 1 || dt.cols() != batch || s.h.cols() != batch) {
    throw DimensionError("cell step: x " + x.value().shape_string() + ", dt " + dt.shape_string() +
                         ", h " + s.h.value().shape_string() + " do not conform to d_x=" +
                         std::to_string(shape_.input) + ", d_h=" + std::to_string(shape_.hidden));
  }
  const std::size_t dh = shape_.hidden;
  Var memory = adjusted_memory(s.c, dt);
  Matrix slot = kind_ == CellKind::lstm_w_dt ? dt : Matrix(1, batch);
  Var input = concat_rows({x, tape_->constant(std::move(slot))});
  Var pre = add(add(matmul(W_, input), matmul(U_, s.h)), b_);
  Var gates = sigmoid(slice_rows(pre, 0, 3 * dh));
  Var in_gate = slice_rows(gates, 0, dh);
  Var forget = slice_rows(gates, dh, dh);
  Var out_gate = slice_rows(gates, 2 * dh, dh);
  Var candidate = tanh(slice_rows(pre, 3 * dh, dh));
  Var c = add(hadamard(forget, memory), hadamard(in_gate, candidate));
  Var h = hadamard(out_gate, tanh(c));
  return {h, c};
}

TapeCell::State TapeCell::masked_step(const State& s, Var x, const Matrix& dt, const Matrix& mask) const {
  State next = step(s, x, dt);
  Var m = tape_->constant(mask);
  return {select(m, next.h, s.h), select(m, next.c, s.c)};
}

}  // namespace neucredit
