// Acceptance checks. One PASS/FAIL line per criterion; tolerances are fixed here.
//   acceptance            run every criterion
//   acceptance --only 4   run a subset (repeatable)
#include <unistd.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "neucredit/checkpoint.hpp"
#include "neucredit/cli.hpp"
#include "neucredit/eval.hpp"
#include "support.hpp"

using namespace neucredit;
namespace fs = std::filesystem;

namespace {

constexpr double kGradTol = 1e-4;           // criterion 1, relative to max(1, |fd|)
constexpr std::size_t kGradConfigs = 100;   // criterion 1, minimum count
constexpr double kGradSeconds = 120.0;
constexpr double kOracleTol = 1e-12;        // criterion 2 (b), (c)
constexpr double kCompoundTol = 1e-6;       // criterion 3, relative
constexpr double kCompoundK = 1e7;
constexpr double kSyntheticLo = 0.6267;     // criterion 4
constexpr double kSyntheticHi = 0.6667;
constexpr double kSyntheticSeconds = 60.0;
constexpr double kOrderingSeconds = 30 * 60.0;  // criterion 5
constexpr std::size_t kOrderingFoldsNeeded = 4;
constexpr double kRealSeconds = 20 * 60.0;      // criterion 6
constexpr std::size_t kPaddingCases = 50;       // criterion 7

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ParamSet randomise(ParamSet p, Rng& rng, double scale) {
  for (auto& e : p)
    for (double& v : e.value.values()) v = rng.uniform(-scale, scale);
  return p;
}

NetworkConfig toy_network(FusionKind fusion, HeadKind head) {
  NetworkConfig cfg = config_for(ModelKind::neucredit, View::all, StreamWidths{4, 3, 3});
  cfg.d_ho = cfg.d_hs = cfg.d_hl = cfg.d_z = 2;
  cfg.d_m = 3;
  cfg.fusion = fusion;
  cfg.head = head;
  return cfg;
}

// ---- 1 ------------------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t configs = 0;
  double worst = 0.0;
  auto check = [&](const ScalarObjective& f, const ParamSet& p) {
    worst = std::max(worst, max_relative_error(grad(f, p), finite_diff_grad(f, p)));
    ++configs;
  };

  // cells unrolled over 1, 3 and 7 steps, two columns with one masked step
  for (CellKind kind : {CellKind::lstm, CellKind::lstm_w_dt, CellKind::tlstm, CellKind::tva})
    for (std::size_t len : {1, 3, 7})
      for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(1000 + seed * 31 + len);
        const CellShape shape{2 + seed % 2, 2 + seed % 3, 2 + seed % 2};
        ParamSet p;
        init_cell_params(p, "c", kind, shape, rng);
        p = randomise(p, rng, 0.8);
        std::vector<Matrix> xs, dts, masks;
        for (std::size_t t = 0; t < len; ++t) {
          xs.push_back(rng.uniform_matrix(shape.input, 2, -1, 1));
          dts.push_back(rng.uniform_matrix(1, 2, 0, 4));
          masks.push_back(Matrix{{1.0, t == len / 2 && len > 1 ? 0.0 : 1.0}});
        }
        check(
            [&](const ParamVars& v) {
              TapeCell cell(v, "c", kind, shape);
              auto s = cell.initial(2);
              for (std::size_t t = 0; t < len; ++t) s = cell.masked_step(s, v.tape().constant(xs[t]), dts[t], masks[t]);
              return add(sum(square(s.h)), sum(tanh(s.c)));
            },
            p);
      }

  // fusion layers, inputs included as parameters
  for (FusionKind kind : {FusionKind::fc, FusionKind::mvm})
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      Rng rng(2000 + seed);
      const FusionShape shape{2 + seed % 3, 2, 1 + seed % 2, 3};
      ParamSet p;
      init_fusion_params(p, "f", kind, shape, rng);
      p.add("in.l", rng.uniform_matrix(shape.loan, 3, -1, 1));
      p.add("in.o", rng.uniform_matrix(shape.order, 3, -1, 1));
      p.add("in.s", rng.uniform_matrix(shape.session, 3, -1, 1));
      p = randomise(p, rng, 1.0);
      check(
          [&](const ParamVars& v) {
            return sum(square(fuse(v, "f", kind, shape, v.at("in.l"), v.at("in.o"), v.at("in.s"))));
          },
          p);
    }

  // heads on a free hidden batch
  for (HeadKind head : {HeadKind::decomposed, HeadKind::plain})
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      Rng rng(3000 + seed);
      const NetworkConfig cfg = toy_network(FusionKind::mvm, head);
      ParamSet all = init_network(cfg, rng);
      ParamSet p;
      for (const auto& e : all)
        if (e.name.rfind("head.", 0) == 0) p.add(e.name, e.value);
      p.add("in.h", Matrix(cfg.d_hl, 4));
      p = randomise(p, rng, 1.5);
      check(
          [&](const ParamVars& v) {
            if (head == HeadKind::plain) return sum(plain_head(v, v.at("in.h")));
            const HeadOutputs o = decomposed_head(v, v.at("in.h"));
            return add(sum(o.y_hat), sum(hadamard(o.y_b, o.y_a)));
          },
          p);
    }

  // both losses through the full hierarchical model
  for (LossKind loss : {LossKind::bce, LossKind::conditional})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(4000 + seed);
      std::vector<ConsumerSequence> data;
      for (int i = 0; i < 2; ++i) data.push_back(testing::random_consumer(rng, "g" + std::to_string(i), 3, 4, 3, 3, 3, 4));
      const NetworkConfig cfg =
          toy_network(seed % 2 ? FusionKind::fc : FusionKind::mvm,
                      loss == LossKind::conditional || seed % 2 == 0 ? HeadKind::decomposed : HeadKind::plain);
      const ParamSet p = randomise(init_network(cfg, rng), rng, 0.7);
      const PaddedBatch batch = pad_and_mask(data, cfg.pad_options());
      check([&](const ParamVars& v) { return summed_loss_on_tape(cfg, loss, v, batch); }, p);
    }

  const double secs = seconds_since(t0);
  return {configs >= kGradConfigs && worst < kGradTol && secs < kGradSeconds,
          fmt("%zu configurations, worst error %.2e (tol %.0e), %.1f s (limit %.0f s)", configs, worst, kGradTol, secs,
              kGradSeconds)};
}

// ---- 2 ------------------------------------------------------------------------------------

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        den += 1.0;
      }
  return num / den;
}

Outcome oracle_equivalence() {
  Rng rng(5);
  std::size_t auc_mismatch = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rng.below(80);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rep % 2 ? static_cast<double>(rng.below(6)) : rng.uniform01();
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    auc_mismatch += auc(s, y) != pairwise_auc(s, y);
  }

  double mvm_err = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t dl = 1 + rng.below(4), dho = 1 + rng.below(3), dhs = 1 + rng.below(3), dz = 1 + rng.below(4);
    const MvmFusionParams p{rng.uniform_matrix(dz, dl + 1, -1, 1), rng.uniform_matrix(dz, dho + 1, -1, 1),
                            rng.uniform_matrix(dz, dhs + 1, -1, 1)};
    const Matrix l = rng.uniform_matrix(dl, 1, -2, 2), o = rng.uniform_matrix(dho, 1, -1, 1),
                 s = rng.uniform_matrix(dhs, 1, -1, 1);
    const Matrix z = mvm_fuse(p, l, o, s);
    auto aug = [](const Matrix& m) {
      auto v = testing::col(m);
      v.push_back(1.0);
      return v;
    };
    const auto L = aug(l), O = aug(o), S = aug(s);
    for (std::size_t k = 0; k < dz; ++k) {
      double acc = 0.0;
      for (std::size_t a = 0; a < L.size(); ++a)
        for (std::size_t b = 0; b < O.size(); ++b)
          for (std::size_t c = 0; c < S.size(); ++c) acc += p.U_F1(k, a) * p.U_F2(k, b) * p.U_F3(k, c) * L[a] * O[b] * S[c];
      mvm_err = std::max(mvm_err, std::abs(acc - z(k, 0)));
    }
  }

  double cell_err = 0.0;
  auto diff = [](const std::vector<double>& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b(i, 0)));
    return m;
  };
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t dx = 1 + rng.below(5), dh = 1 + rng.below(6), dm = 1 + rng.below(8);
    const CellState st{rng.uniform_matrix(dh, 1, -1, 1), rng.uniform_matrix(dh, 1, -2, 2)};
    const Matrix x = rng.uniform_matrix(dx, 1, -2, 2);
    const double dt = rng.uniform(0.0, 15.0);
    const auto h = testing::col(st.h), c = testing::col(st.c), xv = testing::col(x);
    for (bool uses_dt : {false, true}) {
      const auto p = LstmParams::random(dx, dh, uses_dt, rng);
      const auto got = lstm_step(p, st, x, dt);
      const auto want = testing::lstm_gates(p, h, c, xv, dt);
      cell_err = std::max({cell_err, diff(want.h, got.h), diff(want.c, got.c)});
    }
    {
      auto p = TlstmParams::random(dx, dh, rng);
      p.b_D = rng.uniform_matrix(dh, 1, -1, 1);
      const auto got = tlstm_step(p, st, x, dt);
      const auto want = testing::lstm_gates(p.lstm, h, testing::tlstm_adjust(p, c, dt), xv, dt);
      cell_err = std::max({cell_err, diff(want.h, got.h), diff(want.c, got.c)});
    }
    {
      auto p = TvaLstmParams::random(dx, dh, dm, rng);
      p.B_H = rng.uniform_matrix(dh, dm, -1, 1);
      p.B_R = rng.uniform_matrix(dh, dm, -1, 1);
      p.B_D = rng.uniform_matrix(dh, dm, -1, 1);
      p.b_L = rng.uniform_matrix(dh, 1, -1, 1);
      const auto got = tva_lstm_step(p, st, x, dt);
      const auto want = testing::lstm_gates(p.lstm, h, testing::tva_adjust(p, c, dt), xv, dt);
      cell_err = std::max({cell_err, diff(want.h, got.h), diff(want.c, got.c)});
    }
  }
  return {auc_mismatch == 0 && mvm_err <= kOracleTol && cell_err <= kOracleTol,
          fmt("(a) %zu of 1000 AUC lists differ from the pairwise oracle; (b) mvm max error %.1e; "
              "(c) cell max error %.1e (tol %.0e)",
              auc_mismatch, mvm_err, cell_err, kOracleTol)};
}

// ---- 3 ------------------------------------------------------------------------------------

Outcome discount_consistency() {
  Rng rng(6);
  double construct_err = 0.0, lo = INFINITY, hi = -INFINITY;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t dh = 1 + rng.below(5), dm = 1 + rng.below(8);
    auto p = TvaLstmParams::random(2, dh, dm, rng);
    const double spread = 1.0 + rng.below(5);
    p.W_R = rng.uniform_matrix(dh, dm, -spread, spread);
    p.B_R = rng.uniform_matrix(dh, dm, -spread, spread);
    const double dt = rep % 5 == 0 ? rng.uniform(0.0, 1e4) : rng.uniform(0.0, 10.0);
    const auto tr = tva_discount_trace(p, rng.uniform_matrix(dh, 1, -3, 3), dt);
    for (std::size_t k = 0; k < dh; ++k)
      for (std::size_t m = 0; m < dm; ++m) {
        const double d = tr.D(k, m);
        construct_err = std::max(construct_err, std::abs(d - std::exp(std::tanh(p.W_R(k, m) * dt + p.B_R(k, m)))));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
  }
  double rel = 0.0, abs_err = 0.0;
  for (double w = -1.0; w <= 1.0 + 1e-12; w += 0.05)
    for (double dt = 0.0; dt <= 10.0 + 1e-12; dt += 0.25) {
      const double limit = std::exp(w * dt);
      const double compounded = std::pow(1.0 + w / kCompoundK, kCompoundK * dt);
      abs_err = std::max(abs_err, std::abs(compounded - limit));
      rel = std::max(rel, std::abs(compounded - limit) / limit);
    }
  const bool pass = construct_err == 0.0 && lo >= std::exp(-1.0) && hi <= std::exp(1.0) && rel <= kCompoundTol;
  return {pass, fmt("D - exp(tanh(W_R dt + B_R)) max %.1e; D in [%.6f, %.6f] within [1/e, e]; compounding at "
                    "k = 1e7: relative error %.2e (tol %.0e), absolute %.2e",
                    construct_err, lo, hi, rel, kCompoundTol, abs_err)};
}

// ---- 4 ------------------------------------------------------------------------------------

Outcome synthetic_statistics() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticConfig cfg;  // 10000 x 50, seed 42
  const double frac = positive_fraction(generate_synthetic(cfg));
  const double secs = seconds_since(t0);
  return {frac >= kSyntheticLo && frac <= kSyntheticHi && secs < kSyntheticSeconds,
          fmt("positive fraction %.6f at 10000 x 50, seed 42 (target [%.4f, %.4f]), %.1f s", frac, kSyntheticLo,
              kSyntheticHi, secs)};
}

// ---- 5 ------------------------------------------------------------------------------------

Outcome synthetic_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticConfig sc;
  sc.sequences = 2000;
  sc.length = 50;
  const auto data = as_loan_sequences(generate_synthetic(sc));
  auto run = [&](ModelKind m) {
    NetworkModelSpec spec;
    spec.network = config_for(m, View::loan, widths_of(data.front()));
    spec.network.max_len = 50;
    spec.network.d_hl = 2;
    spec.training.optimizer = OptimizerKind::rmsprop;
    spec.training.batch_size = 32;
    spec.training.learning_rate = 0.005;
    spec.training.max_epochs = 40;
    spec.training.patience = 5;
    return run_experiment(std::string(to_string(m)), data, network_model(spec), 5, 42);
  };
  const auto tva = run(ModelKind::tva);
  const auto tlstm = run(ModelKind::tlstm);
  const auto lstm = run(ModelKind::lstm);
  std::size_t gap_folds = 0;
  for (std::size_t f = 0; f < 5; ++f) gap_folds += tva.fold_auc[f] - lstm.fold_auc[f] > 0.0;
  const double secs = seconds_since(t0);
  const bool pass = tva.mean > tlstm.mean && tva.mean > lstm.mean && gap_folds >= kOrderingFoldsNeeded &&
                    secs < kOrderingSeconds;
  return {pass, fmt("mean AUC tva %.6f, tlstm %.6f, lstm %.6f; tva > lstm in %zu of 5 folds; %.0f s (limit %.0f s)",
                    tva.mean, tlstm.mean, lstm.mean, gap_folds, secs, kOrderingSeconds)};
}

// ---- 6 ------------------------------------------------------------------------------------

Outcome sampled_data_results() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = sample_consumer_dataset(ConsumerSampleConfig{});
  const auto lr_loan = run_experiment("lr (loan)", data, lr_model(LrView::loan), 5, 42);
  const auto lr_all = run_experiment("lr (all)", data, lr_model(LrView::all), 5, 42);
  NetworkModelSpec spec;
  spec.network = config_for(ModelKind::mvm_tva, View::all, widths_of(data.front()));
  spec.network.d_ho = 10;
  spec.network.d_z = 8;
  spec.training.batch_size = 32;
  spec.training.learning_rate = 0.003;
  spec.training.max_epochs = 12;
  spec.training.patience = 3;
  const auto mvm = run_experiment("mvm-tva (all)", data, network_model(spec), 5, 42);
  const double secs = seconds_since(t0);
  const bool a = lr_all.mean > lr_loan.mean, b = mvm.mean >= lr_all.mean;
  return {a && b && secs < kRealSeconds,
          fmt("(a) LR(all) %.6f > LR(loan) %.6f: %s; (b) MvM-Tva %.6f >= LR(all) %.6f: %s; %.0f s (limit %.0f s)",
              lr_all.mean, lr_loan.mean, a ? "yes" : "no", mvm.mean, lr_all.mean, b ? "yes" : "no", secs, kRealSeconds)};
}

// ---- 7 ------------------------------------------------------------------------------------

bool identical(const std::vector<ScoredStep>& a, const std::vector<ScoredStep>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].consumer != b[i].consumer || a[i].loan != b[i].loan || a[i].y_hat != b[i].y_hat || a[i].y_a != b[i].y_a ||
        a[i].y_w != b[i].y_w || a[i].y_b != b[i].y_b)
      return false;
  return true;
}

Outcome padding_invariance() {
  struct Variant {
    ModelKind model;
    View view;
  };
  const Variant variants[] = {{ModelKind::lstm, View::loan},    {ModelKind::lstm_w_dt, View::order},
                              {ModelKind::tlstm, View::session}, {ModelKind::tva, View::loan},
                              {ModelKind::tva, View::order},     {ModelKind::fc_tva, View::all},
                              {ModelKind::mvm_tva, View::all},   {ModelKind::neucredit, View::all}};
  std::size_t failures = 0;
  for (std::size_t c = 0; c < kPaddingCases; ++c) {
    const Variant v = variants[c % std::size(variants)];
    const auto data = testing::random_consumers(7000 + c, 2 + c % 4, 3 + c % 3, 2 + c % 2, 2 + c % 3);
    NetworkConfig cfg = config_for(v.model, v.view, widths_of(data.front()));
    cfg.d_ho = 2 + c % 2;
    cfg.d_hs = 2;
    cfg.d_hl = 3;
    cfg.d_z = 3;
    cfg.d_m = 2 + c % 3;
    Rng rng(8000 + c);
    const ParamSet p = randomise(init_network(cfg, rng), rng, 1.0);
    const auto base = predict(cfg, p, data, nullptr);

    NetworkConfig loan_pad = cfg, sub_pad = cfg;
    loan_pad.max_len += 1 + c % 5;  // extra masked loan steps
    sub_pad.sub_len += 1 + c % 7;   // extra masked order and session steps
    bool ok = identical(predict(loan_pad, p, data, nullptr), base) && identical(predict(sub_pad, p, data, nullptr), base);
    // each consumer alone: the batch is padded only to its own needs
    std::vector<ScoredStep> alone;
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto one = predict(cfg, p, std::span(data).subspan(i, 1), nullptr);
      for (auto& s : one) s.consumer = i;
      alone.insert(alone.end(), one.begin(), one.end());
    }
    ok = ok && identical(alone, base);
    failures += !ok;
  }
  return {failures == 0, fmt("%zu of %zu seeded cases changed an output bit", failures, kPaddingCases)};
}

// ---- 8 ------------------------------------------------------------------------------------

Outcome conditional_identities() {
  Rng rng(9);
  std::size_t violations = 0, checked = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const double a = rng.uniform01(), w = rng.uniform01(), b = rng.uniform01(), r = rng.uniform01();
    // y = 1 with y_a = 1, or with y_w = 1: y (1 - y_a)(1 - y_w) = 0
    violations += conditional_loss({w * b, 1.0, w, b}, 1, r) != bce(w * b, 1);
    violations += conditional_loss({a * b, a, 1.0, b}, 1, r) != bce(a * b, 1);
    // y = 0 with y_a = 0, y_w = r: (y_a)^2 + (r - y_w)^2 = 0
    violations += conditional_loss({0.0, 0.0, r, b}, 0, r) != bce(0.0, 0);
    checked += 3;
  }
  const double worked = conditional_loss({0.01, 0.2, 0.1, 0.5}, 0, 0.5);
  const double expect = -std::log(0.99) + 0.04 + 0.16;
  const bool ok = violations == 0 && std::abs(worked - expect) <= 1e-15;
  return {ok, fmt("%zu of %zu limit cases leave a non-zero conditional term; worked example %.16f (expected %.16f)",
                  violations, checked, worked, expect)};
}

// ---- 9 ------------------------------------------------------------------------------------

int run_tool(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), "neucredit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, e);
  if (err) *err = e.str();
  return code;
}

Outcome cv_determinism(const fs::path& dir) {
  const std::string data = (dir / "cv.jsonl").string(), cfg = (dir / "cv.json").string();
  if (run_tool({"sample", "--out", data, "--n", "60", "--seed", "11"}) != 0) return {false, "sample failed"};
  std::ofstream(cfg) << R"({"batch_size": 16, "d_h": 3, "d_z": 3, "d_m": 3, "max_epochs": 2})";
  std::string err;
  setenv("NEUCREDIT_THREADS", "3", 1);
  const int a = run_tool({"cv", "--data", data, "--model", "neucredit", "--config", cfg, "--seed", "5", "--out-csv",
                          (dir / "a.csv").string()},
                         &err);
  setenv("NEUCREDIT_THREADS", "1", 1);
  const int b = run_tool({"cv", "--data", data, "--model", "neucredit", "--config", cfg, "--seed", "5", "--out-csv",
                          (dir / "b.csv").string()},
                         &err);
  unsetenv("NEUCREDIT_THREADS");
  if (a != 0 || b != 0) return {false, "cv failed: " + err};
  const std::string x = testing::read_text((dir / "a.csv").string()), y = testing::read_text((dir / "b.csv").string());
  return {!x.empty() && x == y, fmt("two cv runs (3 and 1 worker threads): %zu and %zu bytes, %s", x.size(), y.size(),
                                    x == y ? "byte-identical" : "different")};
}

// ---- 10 -----------------------------------------------------------------------------------

Outcome checkpoint_round_trip(const fs::path& dir) {
  ConsumerSampleConfig sc;
  sc.consumers = 30;
  sc.seed = 12;
  const auto data = sample_consumer_dataset(sc);
  NetworkConfig cfg = config_for(ModelKind::neucredit, View::all, widths_of(data.front()));
  cfg.d_ho = cfg.d_hs = cfg.d_hl = 3;
  TrainingConfig tc;
  tc.batch_size = 10;
  tc.max_epochs = 1;
  tc.loss = LossKind::conditional;
  Rng rng(13);
  const Standardizer st = Standardizer::fit(data);
  const TrainResult r = train(tc, cfg, init_network(cfg, rng), data, {}, &st);
  Checkpoint c;
  c.model = "neucredit";
  c.loss = tc.loss;
  c.network = cfg;
  c.standardizer = st;
  c.params = r.params;
  c.epochs_run = r.history.size();
  c.best_epoch = r.best_epoch;
  c.best_val_auc = r.best_val_auc;
  const std::string path = (dir / "ckpt.json").string();
  save_checkpoint(path, c);
  const Checkpoint d = load_checkpoint(path);
  const auto batch = testing::random_consumers(14, 8, 15, 45, 16);
  const auto a = predict(c.network, c.params, batch, &*c.standardizer);
  const auto b = predict(d.network, d.params, batch, &*d.standardizer);
  const bool same = d.params == c.params && identical(a, b);
  return {same, fmt("%zu scored loan steps after save and load: %s", a.size(), same ? "bit-identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "Criterion numbers to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = fs::temp_directory_path() / ("neucredit_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"oracle equivalence", oracle_equivalence},
      {"discount consistency", discount_consistency},
      {"synthetic generator statistics", synthetic_statistics},
      {"synthetic model ordering", synthetic_ordering},
      {"sampled-data results", sampled_data_results},
      {"masking and padding invariance", padding_invariance},
      {"conditional-loss identities", conditional_identities},
      {"cv determinism", [&] { return cv_determinism(dir); }},
      {"checkpoint round trip", [&] { return checkpoint_round_trip(dir); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << criteria[i].first << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  fs::remove_all(dir);
  return failed == 0 ? 0 : 1;
}
