#include "neucredit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "neucredit/io.hpp"
#include "neucredit/rng.hpp"

namespace neucredit {

double auc(std::span<const ScoredSample> samples) {
  std::size_t pos = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw DomainError("auc: non-finite score");
    if (s.label != 0 && s.label != 1) throw DomainError("auc: labels must be 0 or 1");
    pos += static_cast<std::size_t>(s.label);
  }
  const std::size_t neg = samples.size() - pos;
  if (pos == 0 || neg == 0) throw DomainError("auc: needs at least one positive and one negative label");

  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });

  // Tied scores share their mean rank (ranks are 1-based, so half-integers at worst).
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && samples[idx[j + 1]].score == samples[idx[i]].score) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (samples[idx[k]].label == 1) positive_rank_sum += rank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: scores and labels differ in length");
  std::vector<ScoredSample> samples(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) samples[i] = {scores[i], labels[i]};
  return auc(samples);
}

// ---- logistic regression --------------------------------------------------------------

namespace {

std::vector<double> mean_rows(const std::vector<std::vector<double>>& rows, std::size_t width) {
  std::vector<double> m(width, 0.0);
  if (rows.empty()) return m;
  for (const auto& r : rows)
    for (std::size_t k = 0; k < width; ++k) m[k] += r[k];
  for (double& v : m) v /= static_cast<double>(rows.size());
  return m;
}

}  // namespace

std::vector<double> lr_features_loan(const ConsumerSequence& seq, std::size_t loan) {
  if (loan >= seq.loans.size()) throw DomainError("lr features: loan index out of range");
  return seq.loans[loan].features;
}

std::vector<double> lr_features_all(const ConsumerSequence& seq, std::size_t loan) {
  std::vector<double> out = lr_features_loan(seq, loan);
  const StreamWidths w = widths_of(seq);
  const LoanEvent& l = seq.loans[loan];
  const auto orders = mean_rows(l.orders, w.order);
  const auto sessions = mean_rows(l.sessions, w.session);
  out.insert(out.end(), orders.begin(), orders.end());
  out.insert(out.end(), sessions.begin(), sessions.end());
  return out;
}

double LrParams::predict(std::span<const double> x) const {
  if (x.size() != weights.size()) throw DimensionError("lr predict: feature width differs from weights");
  double z = bias;
  for (std::size_t k = 0; k < x.size(); ++k) z += weights[k] * x[k];
  return sigmoid(z);
}

LrParams train_lr(const std::vector<std::vector<double>>& x, std::span<const int> y, const LrConfig& cfg) {
  if (x.size() != y.size()) throw DimensionError("train_lr: rows and labels differ in count");
  if (x.empty()) throw DomainError("train_lr: no training rows");
  const std::size_t d = x.front().size();
  LrParams p;
  p.weights.assign(d, 0.0);
  const double n = static_cast<double>(x.size());
  std::vector<double> gw(d);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double err = p.predict(x[i]) - static_cast<double>(y[i]);
      for (std::size_t k = 0; k < d; ++k) gw[k] += err * x[i][k];
      gb += err;
    }
    for (std::size_t k = 0; k < d; ++k) p.weights[k] -= cfg.learning_rate * gw[k] / n;
    p.bias -= cfg.learning_rate * gb / n;
  }
  return p;
}

FoldModel lr_model(LrView view, LrConfig cfg) {
  return [view, cfg](std::span<const ConsumerSequence> train, std::span<const ConsumerSequence> test, std::uint64_t) {
    auto rows_of = [view](std::span<const ConsumerSequence> data, std::vector<int>* labels) {
      std::vector<std::vector<double>> rows;
      for (const auto& seq : data) {
        for (std::size_t i = 0; i < seq.loans.size(); ++i) {
          rows.push_back(view == LrView::all ? lr_features_all(seq, i) : lr_features_loan(seq, i));
          if (labels) labels->push_back(seq.loans[i].y);
        }
      }
      return rows;
    };
    std::vector<int> y;
    auto x = rows_of(train, &y);
    auto x_test = rows_of(test, nullptr);
    std::vector<const std::vector<double>*> ptrs;
    for (const auto& r : x) ptrs.push_back(&r);
    const FeatureScaler scaler = FeatureScaler::fit(ptrs, x.empty() ? 0 : x.front().size());
    for (auto& r : x) scaler.apply_in_place(r);
    for (auto& r : x_test) scaler.apply_in_place(r);
    const LrParams p = train_lr(x, y, cfg);
    std::vector<double> scores;
    scores.reserve(x_test.size());
    for (const auto& r : x_test) scores.push_back(p.predict(r));
    return scores;
  };
}

// ---- networks ------------------------------------------------------------------------------

void holdout_split(std::span<const ConsumerSequence> data, double share, std::uint64_t seed,
                   std::vector<std::size_t>& train, std::vector<std::size_t>& validation) {
  if (!(share >= 0.0 && share < 1.0)) throw DomainError("holdout share must lie in [0, 1)");
  train.clear();
  validation.clear();
  std::vector<std::size_t> groups[2];
  for (std::size_t i = 0; i < data.size(); ++i) groups[data[i].has_default() ? 1 : 0].push_back(i);
  Rng rng(seed);
  for (auto& g : groups) {
    rng.shuffle(g);
    const auto take = static_cast<std::size_t>(std::floor(share * static_cast<double>(g.size()) + 0.5));
    validation.insert(validation.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(take));
    train.insert(train.end(), g.begin() + static_cast<std::ptrdiff_t>(take), g.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
}

FoldModel network_model(const NetworkModelSpec& spec) {
  return [spec](std::span<const ConsumerSequence> train_set, std::span<const ConsumerSequence> test,
                std::uint64_t seed) {
    std::vector<std::size_t> tr_idx, val_idx;
    holdout_split(train_set, spec.validation_share, Rng(seed).fork(1).next(), tr_idx, val_idx);
    std::vector<ConsumerSequence> tr, val;
    for (std::size_t i : tr_idx) tr.push_back(train_set[i]);
    for (std::size_t i : val_idx) val.push_back(train_set[i]);
    const Standardizer st = Standardizer::fit(tr);
    Rng init_rng = Rng(seed).fork(2);
    ParamSet init = init_network(spec.network, init_rng);
    TrainingConfig tc = spec.training;
    tc.seed = Rng(seed).fork(3).next();
    const TrainResult r = train(tc, spec.network, std::move(init), tr, val, &st);
    const auto steps = predict(spec.network, r.params, test, &st, tc.chunk);
    std::vector<double> scores;
    scores.reserve(steps.size());
    for (const auto& s : steps) scores.push_back(s.y_hat);
    return scores;
  };
}

// ---- experiment harness ------------------------------------------------------------------------

ExperimentResult run_experiment(const std::string& method, std::span<const ConsumerSequence> data,
                                const FoldModel& model, std::size_t folds, std::uint64_t seed) {
  const auto split = k_fold_split(data, folds, seed);
  ExperimentResult result;
  result.method = method;
  for (std::size_t f = 0; f < split.size(); ++f) {
    std::vector<ConsumerSequence> train, test;
    for (std::size_t i : split[f].train) train.push_back(data[i]);
    for (std::size_t i : split[f].test) test.push_back(data[i]);

    std::unordered_set<std::string> train_ids;
    for (const auto& s : train) train_ids.insert(s.consumer_id);
    for (const auto& s : test) {
      if (train_ids.count(s.consumer_id)) {
        throw std::logic_error("fold " + std::to_string(f + 1) + ": consumer '" + s.consumer_id +
                               "' is in both the training and the test split");
      }
    }

    const std::vector<double> scores = model(train, test, Rng(seed).fork(100 + f).next());
    std::vector<int> labels;
    for (const auto& s : test)
      for (const auto& loan : s.loans) labels.push_back(loan.y);
    if (scores.size() != labels.size()) {
      throw DimensionError("fold " + std::to_string(f + 1) + ": model returned " + std::to_string(scores.size()) +
                           " scores for " + std::to_string(labels.size()) + " loans");
    }
    result.fold_auc.push_back(auc(scores, labels));
  }
  const double k = static_cast<double>(result.fold_auc.size());
  for (double a : result.fold_auc) result.mean += a;
  result.mean /= k;
  double var = 0.0;
  for (double a : result.fold_auc) var += (a - result.mean) * (a - result.mean);
  result.sd = std::sqrt(var / k);
  return result;
}

std::string results_csv(std::span<const ExperimentResult> rows) {
  std::size_t k = 0;
  for (const auto& r : rows) k = std::max(k, r.fold_auc.size());
  std::ostringstream out;
  out << "method";
  for (std::size_t f = 1; f <= k; ++f) out << ",auc_" << f;
  out << ",avg_auc,sd\n";
  char buf[32];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << r.method;
    for (std::size_t f = 0; f < k; ++f) out << ',' << (f < r.fold_auc.size() ? num(r.fold_auc[f]) : "");
    out << ',' << num(r.mean) << ',' << num(r.sd) << '\n';
  }
  return out.str();
}

void write_results_csv(const std::string& path, std::span<const ExperimentResult> rows) {
  const std::string text = results_csv(rows);
  write_atomic(path, [&](std::ostream& out) { out << text; });
}

}  // namespace neucredit
