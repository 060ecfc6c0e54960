#include "neucredit/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "neucredit/eval.hpp"
#include "neucredit/io.hpp"
#include "neucredit/parallel.hpp"
#include "neucredit/rng.hpp"

namespace neucredit {

std::string_view to_string(LossKind k) { return k == LossKind::bce ? "bce" : "conditional"; }

LossKind parse_loss_kind(std::string_view name) {
  if (name == "bce") return LossKind::bce;
  if (name == "conditional") return LossKind::conditional;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "' (expected bce, conditional)");
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "rmsprop"; }

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected adam, rmsprop)");
}

void TrainingConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be positive");
  if (patience == 0) throw std::invalid_argument("patience must be >= 1");
  if (chunk == 0) throw std::invalid_argument("chunk must be >= 1");
}

// ---- losses -----------------------------------------------------------------------

double bce(double y_hat, double y) {
  const double p = std::clamp(y_hat, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double conditional_loss(const StepOutputs& out, int y, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("conditional loss: r = " + std::to_string(r) + " outside [0, 1]");
  const double yd = y;
  const double d = r - out.y_w;
  return bce(out.y_hat, yd) + yd * (1.0 - out.y_a) * (1.0 - out.y_w) +
         (1.0 - yd) * (out.y_a * out.y_a + d * d);
}

Var bce_on_tape(Var y_hat, const Matrix& y) {
  Tape& tape = *y_hat.tape();
  Var p = clamp(y_hat, kProbabilityClamp, 1.0 - kProbabilityClamp);
  Matrix not_y(y.rows(), y.cols());
  for (std::size_t k = 0; k < y.size(); ++k) not_y[k] = 1.0 - y[k];
  Var s = add(hadamard(tape.constant(y), log(p)), hadamard(tape.constant(not_y), log(affine(p, -1.0, 1.0))));
  return affine(s, -1.0, 0.0);
}

Var conditional_on_tape(Var y_hat, Var y_a, Var y_w, const Matrix& y, const Matrix& r) {
  Tape& tape = *y_hat.tape();
  for (double v : r.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("conditional loss: r = " + std::to_string(v) + " outside [0, 1]");
  }
  Matrix not_y(y.rows(), y.cols());
  for (std::size_t k = 0; k < y.size(); ++k) not_y[k] = 1.0 - y[k];
  Var positive = hadamard(tape.constant(y), hadamard(affine(y_a, -1.0, 1.0), affine(y_w, -1.0, 1.0)));
  Var negative = hadamard(tape.constant(not_y), add(square(y_a), square(sub(tape.constant(r), y_w))));
  return add(add(bce_on_tape(y_hat, y), positive), negative);
}

Var summed_loss_on_tape(const NetworkConfig& cfg, LossKind loss, const ParamVars& vars, const PaddedBatch& batch) {
  if (loss == LossKind::conditional && cfg.head != HeadKind::decomposed) {
    throw std::invalid_argument("the conditional loss needs the decomposed head");
  }
  const TapeOutputs out = forward_on_tape(cfg, vars, batch);
  Tape& tape = vars.tape();
  Var total;
  for (std::size_t i = 0; i < out.y_hat.size(); ++i) {
    Var per = loss == LossKind::bce
                  ? bce_on_tape(out.y_hat[i], batch.y[i])
                  : conditional_on_tape(out.y_hat[i], out.y_a[i], out.y_w[i], batch.y[i], batch.r[i]);
    Var step = sum(hadamard(per, tape.constant(batch.loans.mask[i])));
    total = total.valid() ? add(total, step) : step;
  }
  return total;
}

double batch_loss(const NetworkConfig& cfg, LossKind loss, const ParamSet& p, const PaddedBatch& batch) {
  if (batch.consumers == 0) throw DomainError("batch_loss: empty batch");
  check_params(cfg, p);
  Tape tape;
  ParamVars vars(tape, p, false);
  return summed_loss_on_tape(cfg, loss, vars, batch).value()(0, 0) / static_cast<double>(batch.consumers);
}

ParamSet batch_gradient(const NetworkConfig& cfg, LossKind loss, const ParamSet& p,
                        std::span<const ConsumerSequence* const> batch, const Standardizer* st, std::size_t chunk,
                        double* loss_value) {
  if (batch.empty()) throw DomainError("batch_gradient: empty batch");
  if (chunk == 0) chunk = 1;
  const std::size_t n_chunks = (batch.size() + chunk - 1) / chunk;
  std::vector<ParamSet> grads(n_chunks);
  std::vector<double> losses(n_chunks, 0.0);
  const PadOptions opts = cfg.pad_options(st);
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t count = std::min(chunk, batch.size() - begin);
    const PaddedBatch padded = pad_and_mask(batch.subspan(begin, count), opts);
    Tape tape;
    ParamVars vars(tape, p, true);
    Var total = summed_loss_on_tape(cfg, loss, vars, padded);
    tape.backward(total);
    grads[c] = vars.gradients(p);
    losses[c] = total.value()(0, 0);
  });

  const double scale = 1.0 / static_cast<double>(batch.size());
  ParamSet out = std::move(grads[0]);
  double total_loss = losses[0];
  for (std::size_t c = 1; c < n_chunks; ++c) {
    for (std::size_t e = 0; e < out.size(); ++e) {
      auto dst = out.entry(e).value.values();
      auto src = grads[c].entry(e).value.values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    total_loss += losses[c];
  }
  for (auto& e : out)
    for (double& v : e.value.values()) v *= scale;
  if (loss_value) *loss_value = total_loss * scale;
  return out;
}

// ---- optimizers ------------------------------------------------------------------------

OptState OptState::create(OptimizerKind kind, double learning_rate, const ParamSet& layout) {
  OptState s;
  s.kind = kind;
  s.learning_rate = learning_rate;
  s.m = layout.zeros_like();
  s.v = layout.zeros_like();
  return s;
}

namespace {

void check_layouts(const OptState& opt, const ParamSet& params, const ParamSet& grads) {
  if (!params.same_layout(grads) || !params.same_layout(opt.v) || !params.same_layout(opt.m)) {
    throw DimensionError("optimizer step: parameter, gradient and state layouts differ");
  }
}

}  // namespace

void adam_step(OptState& opt, ParamSet& params, const ParamSet& grads) {
  check_layouts(opt, params, grads);
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t e = 0; e < params.size(); ++e) {
    auto w = params.entry(e).value.values();
    auto g = grads.entry(e).value.values();
    auto m = opt.m.entry(e).value.values();
    auto v = opt.v.entry(e).value.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g[k];
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
  }
}

void rmsprop_step(OptState& opt, ParamSet& params, const ParamSet& grads) {
  check_layouts(opt, params, grads);
  ++opt.step;
  for (std::size_t e = 0; e < params.size(); ++e) {
    auto w = params.entry(e).value.values();
    auto g = grads.entry(e).value.values();
    auto v = opt.v.entry(e).value.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = opt.rho * v[k] + (1.0 - opt.rho) * g[k] * g[k];
      w[k] -= opt.learning_rate * g[k] / (std::sqrt(v[k]) + opt.eps);
    }
  }
}

void optimizer_step(OptState& opt, ParamSet& params, const ParamSet& grads) {
  if (opt.kind == OptimizerKind::adam) {
    adam_step(opt, params, grads);
  } else {
    rmsprop_step(opt, params, grads);
  }
}

// ---- early stopping and training loop -------------------------------------------------------

bool EarlyStopper::update(std::size_t epoch, double score) {
  improved_ = !has_best_ || score > best_;
  if (improved_) {
    has_best_ = true;
    best_ = score;
    best_epoch_ = epoch;
    since_best_ = 0;
    return false;
  }
  return ++since_best_ >= patience_;
}

double mean_loss(LossKind loss, std::span<const ScoredStep> steps, std::size_t consumers) {
  if (consumers == 0) throw DomainError("mean_loss: no consumers");
  double total = 0.0;
  for (const auto& s : steps) {
    total += loss == LossKind::bce ? bce(s.y_hat, s.y) : conditional_loss({s.y_hat, s.y_a, s.y_w, s.y_b}, s.y, s.r);
  }
  return total / static_cast<double>(consumers);
}

namespace {

bool single_class(std::span<const ScoredStep> steps) {
  bool pos = false, neg = false;
  for (const auto& s : steps) (s.y == 1 ? pos : neg) = true;
  return !(pos && neg);
}

double steps_auc(std::span<const ScoredStep> steps) {
  std::vector<ScoredSample> samples;
  samples.reserve(steps.size());
  for (const auto& s : steps) samples.push_back({s.y_hat, s.y});
  return auc(samples);
}

}  // namespace

TrainResult train(const TrainingConfig& tc, const NetworkConfig& cfg, ParamSet init,
                  std::span<const ConsumerSequence> train_set, std::span<const ConsumerSequence> val_set,
                  const Standardizer* st, const TrainHooks& hooks) {
  tc.validate();
  cfg.validate();
  check_params(cfg, init);
  if (train_set.empty()) throw DomainError("train: empty training set");
  if (tc.loss == LossKind::conditional && cfg.head != HeadKind::decomposed) {
    throw std::invalid_argument("the conditional loss needs the decomposed head");
  }

  // Standardization happens at padding time so intervals reach the cells in raw units.
  std::span<const ConsumerSequence> train_data = train_set;
  std::span<const ConsumerSequence> val_data = val_set;

  TrainResult result;
  ParamSet params = std::move(init);
  {
    const auto steps = predict(cfg, params, train_data, st, tc.chunk);
    result.initial_loss = mean_loss(tc.loss, steps, train_data.size());
  }

  OptState opt = OptState::create(tc.optimizer, tc.learning_rate, params);
  EarlyStopper stopper(tc.patience);
  Rng rng = Rng(tc.seed).fork(0x5348554646ULL);
  std::vector<std::size_t> order(train_data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  ParamSet best = params;
  const bool has_validation = !val_data.empty();

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng.shuffle(order);
    double weighted = 0.0;
    for (std::size_t start = 0, batch_no = 0; start < order.size(); start += tc.batch_size, ++batch_no) {
      const std::size_t count = std::min(tc.batch_size, order.size() - start);
      std::vector<const ConsumerSequence*> batch;
      batch.reserve(count);
      for (std::size_t k = 0; k < count; ++k) batch.push_back(&train_data[order[start + k]]);
      double loss = 0.0;
      const ParamSet g = batch_gradient(cfg, tc.loss, params, batch, st, tc.chunk, &loss);
      bool finite = std::isfinite(loss);
      for (const auto& e : g) finite = finite && e.value.all_finite();
      if (!finite) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << batch_no << " (consumers " << batch.front()->consumer_id
            << " .. " << batch.back()->consumer_id << "): non-finite "
            << (std::isfinite(loss) ? "gradient" : "loss");
        throw DivergenceError(msg.str());
      }
      weighted += loss * static_cast<double>(count);
      optimizer_step(opt, params, g);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = weighted / static_cast<double>(order.size());
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    rec.val_auc = std::numeric_limits<double>::quiet_NaN();
    double score = 0.0;
    if (has_validation) {
      const auto steps = predict(cfg, params, val_data, st, tc.chunk);
      rec.val_loss = mean_loss(tc.loss, steps, val_data.size());
      if (!single_class(steps)) rec.val_auc = steps_auc(steps);
      score = std::isnan(rec.val_auc) ? -rec.val_loss : rec.val_auc;
    }
    if (hooks.score) score = hooks.score(params, epoch);
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    if (!has_validation && !hooks.score) {
      best = params;
      result.best_epoch = epoch;
      continue;
    }
    const bool stop = stopper.update(epoch, score);
    if (stopper.improved()) {
      best = params;
      result.best_epoch = epoch;
      result.best_val_auc = rec.val_auc;
    }
    if (stop) break;
  }
  if (tc.max_epochs == 0) best = params;
  result.params = std::move(best);
  return result;
}

void write_history_csv(const std::string& path, std::span<const EpochRecord> history) {
  write_atomic(path, [&](std::ostream& out) {
    out << "epoch,train_loss,val_loss,val_auc\n";
    out.precision(10);
    for (const auto& r : history) {
      out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_auc << '\n';
    }
  });
}

}  // namespace neucredit
