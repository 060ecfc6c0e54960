#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "neucredit/data.hpp"
#include "neucredit/network.hpp"
#include "neucredit/param_set.hpp"

namespace neucredit {

enum class LossKind { bce, conditional };
std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view name);

enum class OptimizerKind { adam, rmsprop };
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct TrainingConfig {
  std::size_t batch_size = 1000;
  double learning_rate = 0.001;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  LossKind loss = LossKind::bce;
  /// Consumers per tape; gradients of the chunks of a batch are summed in chunk
  /// order, so results do not depend on the thread count.
  std::size_t chunk = 64;

  /// Throws std::invalid_argument when batch_size, patience or chunk is 0 or the
  /// learning rate is not positive.
  void validate() const;
};

/// Non-finite loss or gradient during training.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kProbabilityClamp = 1e-12;

/// -[y ln p + (1 - y) ln(1 - p)] with p clamped to [1e-12, 1 - 1e-12].
double bce(double y_hat, double y);

struct StepOutputs {
  double y_hat = 0.0;
  double y_a = 0.0;
  double y_w = 0.0;
  double y_b = 0.0;
};

/// bce(y_hat, y) + y (1 - y_a)(1 - y_w) + (1 - y)[y_a^2 + (r - y_w)^2].
/// Throws DomainError when r is outside [0, 1].
double conditional_loss(const StepOutputs& out, int y, double r);

/// Per-column losses (1, B) of one loan step on a tape.
Var bce_on_tape(Var y_hat, const Matrix& y);
Var conditional_on_tape(Var y_hat, Var y_a, Var y_w, const Matrix& y, const Matrix& r);

/// Sum of per-step losses over valid loan steps, not normalised; (1, 1).
Var summed_loss_on_tape(const NetworkConfig& cfg, LossKind loss, const ParamVars& vars, const PaddedBatch& batch);

/// Summed loss divided by the number of consumers in the batch. Throws
/// DomainError on an empty batch and std::invalid_argument when the loss needs
/// the decomposed head and cfg has a plain one.
double batch_loss(const NetworkConfig& cfg, LossKind loss, const ParamSet& p, const PaddedBatch& batch);

/// Gradient of batch_loss over `batch`, computed in chunks of `chunk` consumers.
ParamSet batch_gradient(const NetworkConfig& cfg, LossKind loss, const ParamSet& p,
                        std::span<const ConsumerSequence* const> batch, const Standardizer* st, std::size_t chunk,
                        double* loss_value);

struct OptState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double eps = 1e-8;
  std::size_t step = 0;
  ParamSet m;  // Adam first moment
  ParamSet v;  // Adam second moment or RMSprop mean square

  static OptState create(OptimizerKind kind, double learning_rate, const ParamSet& layout);
};

/// Throw DimensionError unless params, grads and the accumulators share a layout.
void adam_step(OptState& opt, ParamSet& params, const ParamSet& grads);
void rmsprop_step(OptState& opt, ParamSet& params, const ParamSet& grads);
void optimizer_step(OptState& opt, ParamSet& params, const ParamSet& grads);

/// Patience-based stopping on a score where larger is better.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}
  /// Records the score of `epoch`; returns true when training should stop.
  bool update(std::size_t epoch, double score);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_score() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = 0.0;
  bool has_best_ = false;
  bool improved_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;  // NaN when the validation set has a single class
};

struct TrainResult {
  ParamSet params;
  std::vector<EpochRecord> history;
  double initial_loss = 0.0;  // training loss before the first update
  std::size_t best_epoch = 0;
  double best_val_auc = 0.0;
};

struct TrainHooks {
  /// Replaces the validation score (default: validation AUC, or minus the
  /// validation loss when the validation labels have a single class).
  std::function<double(const ParamSet&, std::size_t epoch)> score;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Mini-batch training with per-epoch shuffling and early stopping; returns the
/// parameters of the best-scoring epoch. Features are standardized with `st`
/// when given. Without validation data every epoch runs and the last one is kept.
TrainResult train(const TrainingConfig& tc, const NetworkConfig& cfg, ParamSet init,
                  std::span<const ConsumerSequence> train_set, std::span<const ConsumerSequence> val_set,
                  const Standardizer* st, const TrainHooks& hooks = {});

/// Mean per-consumer loss from scored steps (consumer-major, as predict returns).
double mean_loss(LossKind loss, std::span<const ScoredStep> steps, std::size_t consumers);

/// Columns: epoch,train_loss,val_loss,val_auc
void write_history_csv(const std::string& path, std::span<const EpochRecord> history);

}  // namespace neucredit
