// Shared fixtures and scalar-loop oracles for the test binaries. The oracles
// deliberately avoid the library's Matrix arithmetic and tape.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "neucredit/cells.hpp"
#include "neucredit/data.hpp"
#include "neucredit/fusion.hpp"
#include "neucredit/matrix.hpp"
#include "neucredit/rng.hpp"

namespace testing {

using neucredit::Matrix;

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Matrix random_matrix(neucredit::Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  return rng.uniform_matrix(r, c, lo, hi);
}

inline std::vector<double> col(const Matrix& m) {
  std::vector<double> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
  return v;
}

inline Matrix column_of(const Matrix& m, std::size_t c) {
  Matrix out(m.rows(), 1);
  for (std::size_t i = 0; i < m.rows(); ++i) out(i, 0) = m(i, c);
  return out;
}

// sum_j W[k][j] v[j] for a (rows, n) matrix
inline double row_dot(const Matrix& W, std::size_t k, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += W(k, j) * v[j];
  return s;
}

struct ScalarState {
  std::vector<double> h, c;
};

// Gates of one LSTM update given the (possibly adjusted) memory c_used.
inline ScalarState lstm_gates(const neucredit::LstmParams& p, const std::vector<double>& h,
                              const std::vector<double>& c_used, const std::vector<double>& x, double dt) {
  std::vector<double> xin = x;
  xin.push_back(p.uses_dt ? dt : 0.0);
  const std::size_t d = h.size();
  ScalarState out{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t k = 0; k < d; ++k) {
    const double i = sig(row_dot(p.W_i, k, xin) + row_dot(p.U_i, k, h) + p.b_i(k, 0));
    const double f = sig(row_dot(p.W_f, k, xin) + row_dot(p.U_f, k, h) + p.b_f(k, 0));
    const double o = sig(row_dot(p.W_o, k, xin) + row_dot(p.U_o, k, h) + p.b_o(k, 0));
    const double g = std::tanh(row_dot(p.W_c, k, xin) + row_dot(p.U_c, k, h) + p.b_c(k, 0));
    out.c[k] = f * c_used[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

inline std::vector<double> tlstm_adjust(const neucredit::TlstmParams& p, const std::vector<double>& c, double dt) {
  std::vector<double> out(c.size());
  const double g = 1.0 / std::log(std::exp(1.0) + dt);
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double short_term = std::tanh(row_dot(p.W_D, k, c) + p.b_D(k, 0));
    const double long_term = c[k] - short_term;
    out[k] = long_term + short_term * g;
  }
  return out;
}

inline std::vector<double> tva_adjust(const neucredit::TvaLstmParams& p, const std::vector<double>& c, double dt) {
  const std::size_t dm = p.w_H.cols();
  std::vector<double> out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < dm; ++m) {
      const double lifted = std::tanh(c[k] * p.w_H(0, m) + p.B_H(k, m));
      const double discount = std::exp(std::tanh(p.W_R(k, m) * dt + p.B_R(k, m)));
      const double discounted = std::tanh(lifted * discount + p.B_D(k, m));
      acc += discounted * p.w_L(m, 0);
    }
    out[k] = std::tanh(acc + p.b_L(k, 0));
  }
  return out;
}

// A random consumer obeying the schema; widths (d_l, d_o, d_s).
inline neucredit::ConsumerSequence random_consumer(neucredit::Rng& rng, const std::string& id, std::size_t loans,
                                                   std::size_t d_l, std::size_t d_o, std::size_t d_s,
                                                   std::size_t min_sub = 3, std::size_t max_sub = 15) {
  auto events = [&](std::size_t n, std::size_t width) {
    std::vector<std::vector<double>> out(n, std::vector<double>(width));
    for (std::size_t j = 0; j < n; ++j) {
      out[j][0] = j == 0 ? 0.0 : rng.uniform(0.0, 5.0);
      for (std::size_t k = 1; k < width; ++k) out[j][k] = rng.uniform(-2.0, 2.0);
    }
    return out;
  };
  neucredit::ConsumerSequence seq;
  seq.consumer_id = id;
  const auto ls = events(loans, d_l);
  for (const auto& f : ls) {
    neucredit::LoanEvent loan;
    loan.features = f;
    loan.y = rng.uniform01() < 0.4 ? 1 : 0;
    loan.r = rng.uniform01();
    loan.orders = events(min_sub + rng.below(max_sub - min_sub + 1), d_o);
    loan.sessions = events(min_sub + rng.below(max_sub - min_sub + 1), d_s);
    seq.loans.push_back(std::move(loan));
  }
  return seq;
}

inline std::vector<neucredit::ConsumerSequence> random_consumers(std::uint64_t seed, std::size_t n,
                                                                 std::size_t d_l = 4, std::size_t d_o = 3,
                                                                 std::size_t d_s = 3) {
  neucredit::Rng rng(seed);
  std::vector<neucredit::ConsumerSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t loans = 3 + rng.below(13);
    out.push_back(random_consumer(rng, "c" + std::to_string(i), loans, d_l, d_o, d_s));
  }
  return out;
}

}  // namespace testing
