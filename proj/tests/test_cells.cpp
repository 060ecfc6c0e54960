#include <cmath>

#include "doctest.h"
#include "neucredit/cells.hpp"
#include "support.hpp"

using namespace neucredit;
using testing::col;

namespace {

double max_abs_diff(const std::vector<double>& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b(i, 0)));
  return m;
}

}  // namespace

TEST_SUITE("cells") {

TEST_CASE("cell kind names round-trip") {
  for (CellKind k : {CellKind::lstm, CellKind::lstm_w_dt, CellKind::tlstm, CellKind::tva})
    CHECK(parse_cell_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_cell_kind("gru"), std::invalid_argument);
}

TEST_CASE("log discount") {
  CHECK(log_discount(0.0) == 1.0);
  double prev = 1.0;
  for (double dt = 0.5; dt < 1000; dt *= 2) {
    const double g = log_discount(dt);
    CHECK(g > 0.0);
    CHECK(g < prev);
    prev = g;
  }
}

TEST_CASE("lstm step matches the scalar loop") {
  Rng rng(31);
  for (int rep = 0; rep < 25; ++rep) {
    const bool uses_dt = rep % 2 == 1;
    const std::size_t dx = 1 + rng.below(4), dh = 1 + rng.below(5);
    const auto p = LstmParams::random(dx, dh, uses_dt, rng);
    const CellState s{rng.uniform_matrix(dh, 1, -1, 1), rng.uniform_matrix(dh, 1, -2, 2)};
    const Matrix x = rng.uniform_matrix(dx, 1, -2, 2);
    const double dt = rng.uniform(0.0, 10.0);
    const CellState got = lstm_step(p, s, x, dt);
    const auto want = testing::lstm_gates(p, col(s.h), col(s.c), col(x), dt);
    CHECK(max_abs_diff(want.h, got.h) <= 1e-12);
    CHECK(max_abs_diff(want.c, got.c) <= 1e-12);
  }
}

TEST_CASE("plain lstm ignores dt, lstm-w-dt does not") {
  Rng rng(2);
  auto p = LstmParams::random(3, 4, false, rng);
  const CellState s{rng.uniform_matrix(4, 1, -1, 1), rng.uniform_matrix(4, 1, -1, 1)};
  const Matrix x = rng.uniform_matrix(3, 1, -1, 1);
  CHECK(lstm_step(p, s, x, 0.0).h == lstm_step(p, s, x, 7.0).h);
  p.uses_dt = true;
  CHECK(!(lstm_step(p, s, x, 0.0).h == lstm_step(p, s, x, 7.0).h));
}

TEST_CASE("t-lstm step matches the scalar loop") {
  Rng rng(32);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t dx = 1 + rng.below(4), dh = 1 + rng.below(5);
    const auto p = TlstmParams::random(dx, dh, rng);
    const CellState s{rng.uniform_matrix(dh, 1, -1, 1), rng.uniform_matrix(dh, 1, -2, 2)};
    const Matrix x = rng.uniform_matrix(dx, 1, -2, 2);
    const double dt = rng.uniform(0.0, 20.0);
    const auto c_adj = testing::tlstm_adjust(p, col(s.c), dt);
    const auto want = testing::lstm_gates(p.lstm, col(s.h), c_adj, col(x), dt);
    const CellState got = tlstm_step(p, s, x, dt);
    CHECK(max_abs_diff(want.h, got.h) <= 1e-12);
    CHECK(max_abs_diff(want.c, got.c) <= 1e-12);
  }
}

TEST_CASE("t-lstm at dt = 0 leaves memory unchanged") {
  Rng rng(4);
  const auto p = TlstmParams::random(2, 3, rng);
  const CellState s{rng.uniform_matrix(3, 1, -1, 1), rng.uniform_matrix(3, 1, -1, 1)};
  const Matrix x = rng.uniform_matrix(2, 1, -1, 1);
  const auto want = testing::lstm_gates(p.lstm, col(s.h), col(s.c), col(x), 0.0);
  CHECK(max_abs_diff(want.c, tlstm_step(p, s, x, 0.0).c) <= 1e-15);
}

TEST_CASE("tva-lstm step matches the scalar loop") {
  Rng rng(33);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t dx = 1 + rng.below(4), dh = 1 + rng.below(5), dm = 1 + rng.below(8);
    auto p = TvaLstmParams::random(dx, dh, dm, rng);
    // random biases too, so the oracle exercises every term
    p.B_H = rng.uniform_matrix(dh, dm, -1, 1);
    p.B_R = rng.uniform_matrix(dh, dm, -1, 1);
    p.B_D = rng.uniform_matrix(dh, dm, -1, 1);
    p.b_L = rng.uniform_matrix(dh, 1, -1, 1);
    const CellState s{rng.uniform_matrix(dh, 1, -1, 1), rng.uniform_matrix(dh, 1, -2, 2)};
    const Matrix x = rng.uniform_matrix(dx, 1, -2, 2);
    const double dt = rng.uniform(0.0, 10.0);
    const auto c_adj = testing::tva_adjust(p, col(s.c), dt);
    CHECK(max_abs_diff(c_adj, tva_discount(p, s.c, dt)) <= 1e-12);
    const auto want = testing::lstm_gates(p.lstm, col(s.h), c_adj, col(x), dt);
    const CellState got = tva_lstm_step(p, s, x, dt);
    CHECK(max_abs_diff(want.h, got.h) <= 1e-12);
    CHECK(max_abs_diff(want.c, got.c) <= 1e-12);
  }
}

TEST_CASE("tva discount factors stay within [1/e, e]") {
  Rng rng(8);
  const auto p = TvaLstmParams::random(2, 4, 6, rng);
  for (double dt : {0.0, 0.1, 1.0, 50.0, 1e6}) {
    const auto tr = tva_discount_trace(p, rng.uniform_matrix(4, 1, -3, 3), dt);
    for (std::size_t i = 0; i < tr.D.rows(); ++i)
      for (std::size_t j = 0; j < tr.D.cols(); ++j) {
        CHECK(tr.D(i, j) >= std::exp(-1.0));
        CHECK(tr.D(i, j) <= std::exp(1.0));
      }
  }
}

TEST_CASE("negative or non-finite dt is rejected") {
  Rng rng(1);
  const auto p = LstmParams::random(2, 2, true, rng);
  const auto s = CellState::zeros(2);
  const Matrix x(2, 1);
  CHECK_THROWS_AS(lstm_step(p, s, x, -0.5), DomainError);
  CHECK_THROWS_AS(lstm_step(p, s, x, std::nan("")), DomainError);
  const auto t = TvaLstmParams::random(2, 2, 3, rng);
  CHECK_THROWS_AS(tva_lstm_step(t, s, x, -1.0), DomainError);
}

TEST_CASE("wrong shapes name the offending operand") {
  Rng rng(1);
  const auto p = LstmParams::random(2, 3, false, rng);
  CHECK_THROWS_AS(lstm_step(p, CellState::zeros(3), Matrix(4, 1), 0.0), DimensionError);
  CHECK_THROWS_AS(lstm_step(p, CellState::zeros(2), Matrix(2, 1), 0.0), DimensionError);
}

TEST_CASE("batched tape cell equals per-column typed steps") {
  Rng rng(77);
  const CellShape shape{3, 4, 5};
  for (CellKind kind : {CellKind::lstm, CellKind::lstm_w_dt, CellKind::tlstm, CellKind::tva}) {
    ParamSet ps;
    init_cell_params(ps, "cell", kind, shape, rng);
    const std::size_t B = 4;
    const Matrix h = rng.uniform_matrix(4, B, -1, 1), c = rng.uniform_matrix(4, B, -1, 1);
    const Matrix x = rng.uniform_matrix(3, B, -1, 1);
    const Matrix dt = rng.uniform_matrix(1, B, 0, 5);
    Tape tape;
    ParamVars vars(tape, ps, false);
    TapeCell cell(vars, "cell", kind, shape);
    const auto next = cell.step({tape.constant(h), tape.constant(c)}, tape.constant(x), dt);
    for (std::size_t b = 0; b < B; ++b) {
      const CellState s{testing::column_of(h, b), testing::column_of(c, b)};
      CellState want;
      switch (kind) {
        case CellKind::lstm: want = lstm_step(LstmParams::load(ps, "cell", false), s, testing::column_of(x, b), dt(0, b)); break;
        case CellKind::lstm_w_dt: want = lstm_step(LstmParams::load(ps, "cell", true), s, testing::column_of(x, b), dt(0, b)); break;
        case CellKind::tlstm: want = tlstm_step(TlstmParams::load(ps, "cell"), s, testing::column_of(x, b), dt(0, b)); break;
        case CellKind::tva: want = tva_lstm_step(TvaLstmParams::load(ps, "cell"), s, testing::column_of(x, b), dt(0, b)); break;
      }
      CHECK(testing::column_of(next.h.value(), b) == want.h);
      CHECK(testing::column_of(next.c.value(), b) == want.c);
    }
  }
}

TEST_CASE("masked columns carry their state through unchanged") {
  Rng rng(78);
  const CellShape shape{2, 3, 4};
  ParamSet ps;
  init_cell_params(ps, "cell", CellKind::tva, shape, rng);
  Tape tape;
  ParamVars vars(tape, ps, false);
  TapeCell cell(vars, "cell", CellKind::tva, shape);
  const Matrix h = rng.uniform_matrix(3, 3, -1, 1), c = rng.uniform_matrix(3, 3, -1, 1);
  const Matrix mask{{1, 0, 1}};
  const auto next = cell.masked_step({tape.constant(h), tape.constant(c)}, tape.constant(rng.uniform_matrix(2, 3, -1, 1)),
                                     Matrix{{1.0, 2.0, 3.0}}, mask);
  CHECK(testing::column_of(next.h.value(), 1) == testing::column_of(h, 1));
  CHECK(testing::column_of(next.c.value(), 1) == testing::column_of(c, 1));
  CHECK(!(testing::column_of(next.h.value(), 0) == testing::column_of(h, 0)));
}

TEST_CASE("initialisation ranges and names") {
  Rng rng(5);
  ParamSet ps;
  init_cell_params(ps, "x", CellKind::tva, {6, 4, 8}, rng);
  const Matrix& W = ps.at("x.W_i");
  CHECK(W.rows() == 4);
  CHECK(W.cols() == 7);
  const double r = 1.0 / std::sqrt(7.0);
  for (double v : W.values()) CHECK(std::abs(v) <= r);
  CHECK(ps.at("x.b_f") == Matrix(4, 1));
  CHECK(ps.at("x.b_L") == Matrix(4, 1));
  CHECK(ps.at("x.w_L").rows() == 8);
  CHECK(ps.at("x.B_R").cols() == 8);
}

}  // TEST_SUITE
