#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "neucredit/data.hpp"
#include "neucredit/network.hpp"
#include "neucredit/training.hpp"

namespace neucredit {

struct ScoredSample {
  double score = 0.0;
  int label = 0;
};

/// Rank-based area under the ROC curve; tied scores count one half. Throws
/// DomainError unless both labels occur, and on non-finite scores.
double auc(std::span<const ScoredSample> samples);
double auc(std::span<const double> scores, std::span<const int> labels);

/// Loan features followed by the means of the loan's order and session features.
std::vector<double> lr_features_all(const ConsumerSequence& seq, std::size_t loan);
std::vector<double> lr_features_loan(const ConsumerSequence& seq, std::size_t loan);

struct LrParams {
  std::vector<double> weights;
  double bias = 0.0;
  double predict(std::span<const double> x) const;
};

struct LrConfig {
  double learning_rate = 0.1;
  std::size_t iterations = 500;
};

/// Full-batch gradient descent on mean binary cross-entropy from zero weights.
LrParams train_lr(const std::vector<std::vector<double>>& x, std::span<const int> y, const LrConfig& cfg = {});

/// Scores for every valid loan step of `test` (consumer-major) after fitting on
/// `train`. The seed is derived from the experiment seed and the fold index.
using FoldModel = std::function<std::vector<double>(std::span<const ConsumerSequence> train,
                                                    std::span<const ConsumerSequence> test, std::uint64_t seed)>;

enum class LrView { loan, all };
/// Logistic regression on per-loan features, z-scored with training statistics.
FoldModel lr_model(LrView view, LrConfig cfg = {});

/// A network trained on the fold's training consumers minus a held-out
/// validation share used for early stopping.
struct NetworkModelSpec {
  NetworkConfig network;
  TrainingConfig training;
  double validation_share = 0.1;
};
FoldModel network_model(const NetworkModelSpec& spec);

/// Stratified split of `data` into (train, validation) index sets.
void holdout_split(std::span<const ConsumerSequence> data, double share, std::uint64_t seed,
                   std::vector<std::size_t>& train, std::vector<std::size_t>& validation);

struct ExperimentResult {
  std::string method;
  std::vector<double> fold_auc;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation over folds
};

/// k-fold cross-validation of `model`; folds run in order on the calling thread.
ExperimentResult run_experiment(const std::string& method, std::span<const ConsumerSequence> data,
                                const FoldModel& model, std::size_t folds, std::uint64_t seed);

/// Columns: method,auc_1..auc_k,avg_auc,sd
void write_results_csv(const std::string& path, std::span<const ExperimentResult> rows);
std::string results_csv(std::span<const ExperimentResult> rows);

}  // namespace neucredit
