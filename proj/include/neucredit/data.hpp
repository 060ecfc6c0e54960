#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neucredit/matrix.hpp"

namespace neucredit {

/// Malformed or invariant-violating input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMinSequenceLength = 3;
inline constexpr std::size_t kMaxSequenceLength = 15;
/// The interval to the previous event sits at this index of every loan, order and
/// session feature vector (days for loans and orders, minutes for sessions).
inline constexpr std::size_t kIntervalIndex = 0;

struct LoanEvent {
  std::vector<double> features;              // d_l
  int y = 0;                                 // 1 = default
  double r = 0.0;                            // delinquent share of installments
  std::vector<std::vector<double>> orders;   // each d_o
  std::vector<std::vector<double>> sessions; // each d_s
  friend bool operator==(const LoanEvent&, const LoanEvent&) = default;
};

struct ConsumerSequence {
  std::string consumer_id;
  std::vector<LoanEvent> loans;
  bool has_default() const;
  friend bool operator==(const ConsumerSequence&, const ConsumerSequence&) = default;
};

struct SyntheticStep {
  std::vector<double> features;  // 106; index 0 is the interval
  int y = 0;
  friend bool operator==(const SyntheticStep&, const SyntheticStep&) = default;
};

struct SyntheticSequence {
  std::string sequence_id;
  std::vector<SyntheticStep> steps;
  friend bool operator==(const SyntheticSequence&, const SyntheticSequence&) = default;
};

struct StreamWidths {
  std::size_t loan = 0;
  std::size_t order = 0;
  std::size_t session = 0;
};

/// Throws DataError describing the first violated invariant: 3..15 loans, 3..15
/// orders and sessions per loan, y in {0, 1}, r in [0, 1], finite features,
/// non-negative intervals, consistent widths.
void validate(const ConsumerSequence& seq);
StreamWidths widths_of(const ConsumerSequence& seq);

// ---- file IO: one JSON record per line --------------------------------------

std::vector<ConsumerSequence> parse_dataset(std::istream& in);
std::vector<ConsumerSequence> load_dataset(const std::string& path);
void write_dataset(std::ostream& out, std::span<const ConsumerSequence> data);
void save_dataset(const std::string& path, std::span<const ConsumerSequence> data);

std::vector<SyntheticSequence> parse_synthetic(std::istream& in);
std::vector<SyntheticSequence> load_synthetic(const std::string& path);
void write_synthetic(std::ostream& out, std::span<const SyntheticSequence> data);
void save_synthetic(const std::string& path, std::span<const SyntheticSequence> data);

enum class DatasetKind { consumer, synthetic, empty };
/// Inspects the first non-blank line of a dataset file.
DatasetKind detect_dataset_kind(const std::string& path);

/// Synthetic sequences viewed as loan-only consumer sequences (y per step, r = 0,
/// no sub-sequences); not subject to the 3..15 length bounds.
std::vector<ConsumerSequence> as_loan_sequences(std::span<const SyntheticSequence> data);

// ---- standardization ----------------------------------------------------------

/// Per-feature z-score transform. Features with std < 1e-12 are only centred.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;  // population std, or 1 for constant features

  static FeatureScaler fit(std::span<const std::vector<double>* const> rows, std::size_t width);
  void apply_in_place(std::span<double> row) const;
  bool empty() const { return mean.empty(); }
};

struct Standardizer {
  FeatureScaler loan;
  FeatureScaler order;
  FeatureScaler session;

  /// Statistics over the events present in the training split.
  static Standardizer fit(std::span<const ConsumerSequence> train);
  ConsumerSequence apply(const ConsumerSequence& seq) const;
  std::vector<ConsumerSequence> apply(std::span<const ConsumerSequence> data) const;
};

// ---- folds --------------------------------------------------------------------

struct Fold {
  std::vector<std::size_t> train;  // indices into the dataset
  std::vector<std::size_t> test;
};

/// Consumer-level k-fold partition; with stratify, consumers with and without a
/// default are dealt round-robin separately so each fold keeps the global mix.
std::vector<Fold> k_fold_split(std::span<const ConsumerSequence> data, std::size_t k,
                               std::uint64_t seed, bool stratify = true);
inline std::vector<Fold> five_fold_split(std::span<const ConsumerSequence> data, std::uint64_t seed,
                                         bool stratify = true) {
  return k_fold_split(data, 5, seed, stratify);
}

// ---- synthetic generator --------------------------------------------------------

struct SyntheticConfig {
  std::size_t sequences = 10000;
  std::size_t length = 50;
  std::uint64_t seed = 42;
  /// Draw the transformation once per run (default) or once per sequence.
  bool per_sequence_transform = false;
};

/// Time-invariant map x^p_{t+1} = exp(w2 dt + b2) . tanh(W1 x^p_t + b1).
struct SyntheticTransform {
  Matrix W1;  // (5, 5)
  Matrix b1;  // (5, 1)
  Matrix w2;  // (5, 1)
  Matrix b2;  // (5, 1)
};

inline constexpr std::size_t kSyntheticFeatures = 106;

/// sin(2 x2 + x3) + 3 x4 x5 - x6^3 for the five signal features x2..x6.
double synthetic_label_argument(std::span<const double> signal);
/// 1 if sigmoid(argument) >= 0.5.
int synthetic_label(std::span<const double> signal);

std::vector<SyntheticSequence> generate_synthetic(const SyntheticConfig& cfg,
                                                  std::vector<SyntheticTransform>* transforms = nullptr);
double positive_fraction(std::span<const SyntheticSequence> data);

// ---- sampled consumer data --------------------------------------------------------

/// Schema-conformant random consumers with a planted default signal:
/// P(y_i = 1) = sigmoid(bias + w1 l_i[1] + w2 l_i[2] + w_o mean_j o_ij[1]).
/// Non-interval features are standard normal; loan intervals (days) are
/// U(0, 90), order intervals (days) U(0, 30), session intervals (minutes)
/// U(0, 1440), each 0 at the first event. Lengths are uniform on 3..15.
/// r is U(0.5, 1) for defaulted loans and U(0, 0.5) otherwise.
struct ConsumerSampleConfig {
  std::size_t consumers = 2000;
  std::size_t d_l = 15;
  std::size_t d_o = 45;
  std::size_t d_s = 16;
  std::uint64_t seed = 7;
  double bias = -0.5;
  double w1 = 1.5;
  double w2 = -1.5;
  double w_order = 2.0;
};

std::vector<ConsumerSequence> sample_consumer_dataset(const ConsumerSampleConfig& cfg);

// ---- padding --------------------------------------------------------------------

/// One stream padded to a fixed number of steps. Step t holds a column per
/// sequence: x[t] (width, columns), dt[t] (1, columns), mask[t] (1, columns).
struct StreamTensor {
  std::size_t width = 0;
  std::size_t columns = 0;
  std::vector<Matrix> x;
  std::vector<Matrix> dt;
  std::vector<Matrix> mask;
  std::size_t steps() const { return x.size(); }
};

/// Consumers padded to max_len loans. Sub-sequence streams have
/// consumers * max_len columns, column i * consumers + b holding loan i of
/// consumer b, each padded to sub_len steps.
struct PaddedBatch {
  std::size_t consumers = 0;
  std::size_t max_len = 0;
  std::vector<std::string> ids;
  StreamTensor loans;
  std::optional<StreamTensor> orders;
  std::optional<StreamTensor> sessions;
  std::vector<Matrix> y;  // per loan step (1, consumers)
  std::vector<Matrix> r;  // per loan step (1, consumers)
  std::size_t valid_loans() const;
};

struct PadOptions {
  std::size_t max_len = kMaxSequenceLength;
  std::size_t sub_len = kMaxSequenceLength;
  /// Applied to features; intervals fed to the cells stay in raw units.
  const Standardizer* standardizer = nullptr;
  double loan_dt_divisor = 1.0;
  double order_dt_divisor = 1.0;
  double session_dt_divisor = 1.0;
  bool include_orders = true;
  bool include_sessions = true;
};

/// Throws DataError on sequences longer than the capacity.
PaddedBatch pad_and_mask(std::span<const ConsumerSequence* const> seqs, const PadOptions& opts);
PaddedBatch pad_and_mask(std::span<const ConsumerSequence> seqs, const PadOptions& opts);
/// Inverse of pad_and_mask without standardization and with unit divisors.
std::vector<ConsumerSequence> unpad(const PaddedBatch& batch);

}  // namespace neucredit
