#include "neucredit/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "neucredit/io.hpp"
#include "neucredit/rng.hpp"

namespace neucredit {

using nlohmann::json;

namespace {

std::string where(const ConsumerSequence& seq) { return "consumer '" + seq.consumer_id + "'"; }

void check_length(std::size_t n, const std::string& what) {
  if (n < kMinSequenceLength) {
    throw DataError(what + " has " + std::to_string(n) + " events; minimum length of " +
                    std::to_string(kMinSequenceLength) + " required");
  }
  if (n > kMaxSequenceLength) {
    throw DataError(what + " has " + std::to_string(n) + " events; maximum length of " +
                    std::to_string(kMaxSequenceLength) + " exceeded");
  }
}

void check_vector(const std::vector<double>& v, std::size_t width, const std::string& what) {
  if (v.size() != width) {
    throw DataError(what + " has " + std::to_string(v.size()) + " features, expected " +
                    std::to_string(width));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw DataError(what + " has a non-finite feature");
  }
  if (v.empty()) throw DataError(what + " has no features");
  if (v[kIntervalIndex] < 0.0) {
    throw DataError(what + " has negative interval " + std::to_string(v[kIntervalIndex]));
  }
}

std::vector<double> read_vector(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError(std::string(what) + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> read_rows(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array of arrays");
  std::vector<std::vector<double>> out;
  out.reserve(j.size());
  for (const auto& row : j) out.push_back(read_vector(row, what));
  return out;
}

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw DataError(std::string("missing field '") + name + "'");
  return *it;
}

int read_label(const json& j) {
  if (!j.is_number_integer() && !j.is_number_float() && !j.is_boolean())
    throw DataError("field 'y' must be 0 or 1");
  const double y = j.is_boolean() ? (j.get<bool>() ? 1.0 : 0.0) : j.get<double>();
  if (y != 0.0 && y != 1.0) throw DataError("field 'y' must be 0 or 1");
  return static_cast<int>(y);
}

ConsumerSequence consumer_from_json(const json& j) {
  if (!j.is_object()) throw DataError("record must be a JSON object");
  ConsumerSequence seq;
  const json& id = field(j, "consumer_id");
  seq.consumer_id = id.is_string() ? id.get<std::string>() : id.dump();
  const json& loans = field(j, "loans");
  if (!loans.is_array()) throw DataError("field 'loans' must be an array");
  for (const auto& lj : loans) {
    LoanEvent loan;
    loan.features = read_vector(field(lj, "features"), "loan features");
    loan.y = read_label(field(lj, "y"));
    const json& r = field(lj, "r");
    if (!r.is_number()) throw DataError("field 'r' must be a number");
    loan.r = r.get<double>();
    loan.orders = read_rows(field(lj, "orders"), "orders");
    loan.sessions = read_rows(field(lj, "sessions"), "sessions");
    seq.loans.push_back(std::move(loan));
  }
  return seq;
}

json consumer_to_json(const ConsumerSequence& seq) {
  json loans = json::array();
  for (const auto& loan : seq.loans) {
    loans.push_back({{"features", loan.features},
                     {"y", loan.y},
                     {"r", loan.r},
                     {"orders", loan.orders},
                     {"sessions", loan.sessions}});
  }
  return {{"consumer_id", seq.consumer_id}, {"loans", std::move(loans)}};
}

template <typename F>
void for_each_record(std::istream& in, F f) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path);
  return in;
}

}  // namespace

bool ConsumerSequence::has_default() const {
  return std::any_of(loans.begin(), loans.end(), [](const LoanEvent& l) { return l.y == 1; });
}

StreamWidths widths_of(const ConsumerSequence& seq) {
  StreamWidths w;
  if (seq.loans.empty()) return w;
  const LoanEvent& first = seq.loans.front();
  w.loan = first.features.size();
  w.order = first.orders.empty() ? 0 : first.orders.front().size();
  w.session = first.sessions.empty() ? 0 : first.sessions.front().size();
  return w;
}

void validate(const ConsumerSequence& seq) {
  check_length(seq.loans.size(), where(seq) + " loan sequence");
  const StreamWidths w = widths_of(seq);
  for (std::size_t i = 0; i < seq.loans.size(); ++i) {
    const LoanEvent& loan = seq.loans[i];
    const std::string at = where(seq) + " loan " + std::to_string(i);
    check_vector(loan.features, w.loan, at);
    if (loan.y != 0 && loan.y != 1) throw DataError(at + ": y must be 0 or 1");
    if (!(loan.r >= 0.0 && loan.r <= 1.0)) {
      throw DataError(at + ": r = " + std::to_string(loan.r) + " outside [0, 1]");
    }
    check_length(loan.orders.size(), at + " order sub-sequence");
    check_length(loan.sessions.size(), at + " session sub-sequence");
    for (std::size_t j = 0; j < loan.orders.size(); ++j)
      check_vector(loan.orders[j], w.order, at + " order " + std::to_string(j));
    for (std::size_t j = 0; j < loan.sessions.size(); ++j)
      check_vector(loan.sessions[j], w.session, at + " session " + std::to_string(j));
  }
}

std::vector<ConsumerSequence> parse_dataset(std::istream& in) {
  std::vector<ConsumerSequence> out;
  std::optional<StreamWidths> widths;
  std::unordered_set<std::string> ids;
  for_each_record(in, [&](const json& j) {
    ConsumerSequence seq = consumer_from_json(j);
    validate(seq);
    if (!ids.insert(seq.consumer_id).second) throw DataError(where(seq) + " appears more than once");
    const StreamWidths w = widths_of(seq);
    if (!widths) widths = w;
    if (w.loan != widths->loan || w.order != widths->order || w.session != widths->session) {
      throw DataError(where(seq) + ": feature widths differ from earlier records");
    }
    out.push_back(std::move(seq));
  });
  return out;
}

std::vector<ConsumerSequence> load_dataset(const std::string& path) {
  auto in = open_input(path);
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, std::span<const ConsumerSequence> data) {
  for (const auto& seq : data) out << consumer_to_json(seq).dump() << '\n';
}

void save_dataset(const std::string& path, std::span<const ConsumerSequence> data) {
  write_atomic(path, [&](std::ostream& out) { write_dataset(out, data); });
}

std::vector<SyntheticSequence> parse_synthetic(std::istream& in) {
  std::vector<SyntheticSequence> out;
  for_each_record(in, [&](const json& j) {
    if (!j.is_object()) throw DataError("record must be a JSON object");
    SyntheticSequence seq;
    const json& id = field(j, "sequence_id");
    seq.sequence_id = id.is_string() ? id.get<std::string>() : id.dump();
    const json& steps = field(j, "steps");
    if (!steps.is_array() || steps.empty()) throw DataError("field 'steps' must be a non-empty array");
    for (const auto& sj : steps) {
      SyntheticStep step;
      step.features = read_vector(field(sj, "features"), "step features");
      step.y = read_label(field(sj, "y"));
      check_vector(step.features, kSyntheticFeatures, "sequence '" + seq.sequence_id + "' step");
      seq.steps.push_back(std::move(step));
    }
    out.push_back(std::move(seq));
  });
  return out;
}

std::vector<SyntheticSequence> load_synthetic(const std::string& path) {
  auto in = open_input(path);
  return parse_synthetic(in);
}

void write_synthetic(std::ostream& out, std::span<const SyntheticSequence> data) {
  for (const auto& seq : data) {
    json steps = json::array();
    for (const auto& s : seq.steps) steps.push_back({{"features", s.features}, {"y", s.y}});
    out << json{{"sequence_id", seq.sequence_id}, {"steps", std::move(steps)}}.dump() << '\n';
  }
}

void save_synthetic(const std::string& path, std::span<const SyntheticSequence> data) {
  write_atomic(path, [&](std::ostream& out) { write_synthetic(out, data); });
}

DatasetKind detect_dataset_kind(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    if (line.find("\"sequence_id\"") != std::string::npos) return DatasetKind::synthetic;
    if (line.find("\"consumer_id\"") != std::string::npos) return DatasetKind::consumer;
    throw DataError("line 1: record has neither consumer_id nor sequence_id");
  }
  return DatasetKind::empty;
}

std::vector<ConsumerSequence> as_loan_sequences(std::span<const SyntheticSequence> data) {
  std::vector<ConsumerSequence> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    ConsumerSequence seq;
    seq.consumer_id = s.sequence_id;
    seq.loans.reserve(s.steps.size());
    for (const auto& step : s.steps) {
      LoanEvent loan;
      loan.features = step.features;
      loan.y = step.y;
      seq.loans.push_back(std::move(loan));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

// ---- standardization -------------------------------------------------------------

FeatureScaler FeatureScaler::fit(std::span<const std::vector<double>* const> rows, std::size_t width) {
  FeatureScaler s;
  s.mean.assign(width, 0.0);
  s.scale.assign(width, 1.0);
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (const auto* row : rows)
    for (std::size_t k = 0; k < width; ++k) s.mean[k] += (*row)[k];
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(width, 0.0);
  for (const auto* row : rows)
    for (std::size_t k = 0; k < width; ++k) {
      const double d = (*row)[k] - s.mean[k];
      var[k] += d * d;
    }
  for (std::size_t k = 0; k < width; ++k) {
    const double sd = std::sqrt(var[k] / n);
    s.scale[k] = sd < 1e-12 ? 1.0 : sd;
  }
  return s;
}

void FeatureScaler::apply_in_place(std::span<double> row) const {
  if (mean.empty()) return;
  for (std::size_t k = 0; k < row.size(); ++k) row[k] = (row[k] - mean[k]) / scale[k];
}

Standardizer Standardizer::fit(std::span<const ConsumerSequence> train) {
  std::vector<const std::vector<double>*> loans, orders, sessions;
  StreamWidths w;
  for (const auto& seq : train) {
    if (w.loan == 0) w = widths_of(seq);
    for (const auto& loan : seq.loans) {
      loans.push_back(&loan.features);
      for (const auto& o : loan.orders) orders.push_back(&o);
      for (const auto& s : loan.sessions) sessions.push_back(&s);
    }
  }
  if (w.order == 0 && !orders.empty()) w.order = orders.front()->size();
  if (w.session == 0 && !sessions.empty()) w.session = sessions.front()->size();
  Standardizer st;
  st.loan = FeatureScaler::fit(loans, w.loan);
  if (!orders.empty()) st.order = FeatureScaler::fit(orders, w.order);
  if (!sessions.empty()) st.session = FeatureScaler::fit(sessions, w.session);
  return st;
}

ConsumerSequence Standardizer::apply(const ConsumerSequence& seq) const {
  ConsumerSequence out = seq;
  for (auto& loan : out.loans) {
    this->loan.apply_in_place(loan.features);
    for (auto& o : loan.orders) order.apply_in_place(o);
    for (auto& s : loan.sessions) session.apply_in_place(s);
  }
  return out;
}

std::vector<ConsumerSequence> Standardizer::apply(std::span<const ConsumerSequence> data) const {
  std::vector<ConsumerSequence> out;
  out.reserve(data.size());
  for (const auto& seq : data) out.push_back(apply(seq));
  return out;
}

// ---- folds -------------------------------------------------------------------------

std::vector<Fold> k_fold_split(std::span<const ConsumerSequence> data, std::size_t k,
                               std::uint64_t seed, bool stratify) {
  if (k < 2) throw DomainError("k_fold_split: need at least 2 folds");
  if (data.size() < k) {
    throw DomainError("k_fold_split: " + std::to_string(data.size()) + " consumers cannot fill " +
                      std::to_string(k) + " folds");
  }
  Rng rng(seed);
  std::vector<std::size_t> with_default, without_default;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (stratify && data[i].has_default() ? with_default : without_default).push_back(i);
  }
  rng.shuffle(with_default);
  rng.shuffle(without_default);
  std::vector<std::size_t> order = with_default;
  order.insert(order.end(), without_default.begin(), without_default.end());

  std::vector<std::size_t> fold_of(data.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) fold_of[order[pos]] = pos % k;

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

// ---- synthetic generator ---------------------------------------------------------------

double synthetic_label_argument(std::span<const double> x) {
  if (x.size() != 5) throw DimensionError("synthetic label needs the five signal features");
  return std::sin(2.0 * x[0] + x[1]) + 3.0 * x[2] * x[3] - x[4] * x[4] * x[4];
}

int synthetic_label(std::span<const double> signal) {
  return sigmoid(synthetic_label_argument(signal)) >= 0.5 ? 1 : 0;
}

namespace {

SyntheticTransform draw_transform(Rng& rng) {
  SyntheticTransform t;
  t.W1 = rng.uniform_matrix(5, 5, -1.0, 1.0);
  t.b1 = rng.uniform_matrix(5, 1, -1.0, 1.0);
  t.w2 = rng.uniform_matrix(5, 1, -1.0, 1.0);
  t.b2 = rng.uniform_matrix(5, 1, -1.0, 1.0);
  return t;
}

}  // namespace

std::vector<SyntheticSequence> generate_synthetic(const SyntheticConfig& cfg,
                                                  std::vector<SyntheticTransform>* transforms) {
  if (cfg.sequences == 0 || cfg.length == 0) throw DomainError("generate_synthetic: n and length must be >= 1");
  Rng rng(cfg.seed);
  SyntheticTransform transform = draw_transform(rng);
  if (transforms) {
    transforms->clear();
    transforms->push_back(transform);
  }
  std::vector<SyntheticSequence> out;
  out.reserve(cfg.sequences);
  for (std::size_t s = 0; s < cfg.sequences; ++s) {
    if (cfg.per_sequence_transform && s > 0) {
      transform = draw_transform(rng);
      if (transforms) transforms->push_back(transform);
    }
    SyntheticSequence seq;
    seq.sequence_id = "s" + std::to_string(s);
    seq.steps.reserve(cfg.length);
    std::vector<double> x(kSyntheticFeatures, 0.0);
    for (std::size_t t = 0; t < cfg.length; ++t) {
      if (t == 0) {
        x[0] = 0.0;
        for (std::size_t k = 1; k < kSyntheticFeatures; ++k) x[k] = rng.uniform(-1.0, 1.0);
      } else {
        x[0] = rng.uniform(0.0, 10.0);
        double next[5];
        for (std::size_t a = 0; a < 5; ++a) {
          double pre = transform.b1(a, 0);
          for (std::size_t b = 0; b < 5; ++b) pre += transform.W1(a, b) * x[1 + b];
          next[a] = std::exp(transform.w2(a, 0) * x[0] + transform.b2(a, 0)) * std::tanh(pre);
        }
        for (std::size_t a = 0; a < 5; ++a) x[1 + a] = next[a];
        for (std::size_t k = 6; k < kSyntheticFeatures; ++k) x[k] = rng.uniform(-1.0, 1.0);
      }
      seq.steps.push_back({x, synthetic_label(std::span<const double>(x).subspan(1, 5))});
    }
    out.push_back(std::move(seq));
  }
  return out;
}

double positive_fraction(std::span<const SyntheticSequence> data) {
  std::size_t pos = 0;
  std::size_t total = 0;
  for (const auto& s : data) {
    for (const auto& step : s.steps) pos += static_cast<std::size_t>(step.y);
    total += s.steps.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(total);
}

// ---- sampled consumer data ---------------------------------------------------------------

std::vector<ConsumerSequence> sample_consumer_dataset(const ConsumerSampleConfig& cfg) {
  if (cfg.d_l < 3 || cfg.d_o < 2 || cfg.d_s < 1) throw DomainError("sample_consumer_dataset: widths too small");
  Rng rng(cfg.seed);
  auto length = [&rng] { return kMinSequenceLength + rng.below(kMaxSequenceLength - kMinSequenceLength + 1); };
  auto events = [&](std::size_t width, double max_interval) {
    std::vector<std::vector<double>> out(length(), std::vector<double>(width));
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j][kIntervalIndex] = j == 0 ? 0.0 : rng.uniform(0.0, max_interval);
      for (std::size_t k = 1; k < width; ++k) out[j][k] = rng.normal();
    }
    return out;
  };
  std::vector<ConsumerSequence> data(cfg.consumers);
  for (std::size_t c = 0; c < cfg.consumers; ++c) {
    ConsumerSequence& seq = data[c];
    seq.consumer_id = "c" + std::to_string(c);
    const auto loans = events(cfg.d_l, 90.0);
    for (const auto& features : loans) {
      LoanEvent loan;
      loan.features = features;
      loan.orders = events(cfg.d_o, 30.0);
      loan.sessions = events(cfg.d_s, 1440.0);
      double order_mean = 0.0;
      for (const auto& o : loan.orders) order_mean += o[1];
      order_mean /= static_cast<double>(loan.orders.size());
      const double z = cfg.bias + cfg.w1 * features[1] + cfg.w2 * features[2] + cfg.w_order * order_mean;
      loan.y = rng.uniform01() < sigmoid(z) ? 1 : 0;
      loan.r = loan.y == 1 ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.5);
      seq.loans.push_back(std::move(loan));
    }
  }
  return data;
}

// ---- padding ----------------------------------------------------------------------------

std::size_t PaddedBatch::valid_loans() const {
  std::size_t n = 0;
  for (const auto& m : loans.mask)
    for (double v : m.values()) n += v != 0.0 ? 1 : 0;
  return n;
}

namespace {

StreamTensor make_stream(std::size_t steps, std::size_t width, std::size_t columns) {
  StreamTensor s;
  s.width = width;
  s.columns = columns;
  s.x.assign(steps, Matrix(width, columns));
  s.dt.assign(steps, Matrix(1, columns));
  s.mask.assign(steps, Matrix(1, columns));
  return s;
}

void put_event(StreamTensor& s, std::size_t step, std::size_t col, const std::vector<double>& raw,
               const FeatureScaler* scaler, double divisor) {
  if (raw.size() != s.width) {
    throw DataError("event width " + std::to_string(raw.size()) + " differs from stream width " +
                    std::to_string(s.width));
  }
  std::vector<double> f = raw;
  if (scaler) scaler->apply_in_place(f);
  for (std::size_t k = 0; k < f.size(); ++k) s.x[step](k, col) = f[k];
  s.dt[step](0, col) = raw[kIntervalIndex] / divisor;
  s.mask[step](0, col) = 1.0;
}

}  // namespace

PaddedBatch pad_and_mask(std::span<const ConsumerSequence* const> seqs, const PadOptions& opts) {
  if (seqs.empty()) throw DomainError("pad_and_mask: empty batch");
  PaddedBatch batch;
  batch.consumers = seqs.size();
  batch.max_len = opts.max_len;
  StreamWidths w;
  for (const auto* seq : seqs) {
    if (seq->loans.size() > opts.max_len) {
      throw DataError("consumer '" + seq->consumer_id + "' has " + std::to_string(seq->loans.size()) +
                      " loans, capacity is " + std::to_string(opts.max_len));
    }
    const StreamWidths sw = widths_of(*seq);
    if (w.loan == 0) w.loan = sw.loan;
    if (w.order == 0) w.order = sw.order;
    if (w.session == 0) w.session = sw.session;
  }
  const std::size_t B = seqs.size();
  const std::size_t sub_cols = B * opts.max_len;
  const bool orders = opts.include_orders && w.order > 0;
  const bool sessions = opts.include_sessions && w.session > 0;
  batch.loans = make_stream(opts.max_len, w.loan, B);
  if (orders) batch.orders = make_stream(opts.sub_len, w.order, sub_cols);
  if (sessions) batch.sessions = make_stream(opts.sub_len, w.session, sub_cols);
  batch.y.assign(opts.max_len, Matrix(1, B));
  batch.r.assign(opts.max_len, Matrix(1, B));

  const Standardizer* st = opts.standardizer;
  for (std::size_t b = 0; b < B; ++b) {
    const ConsumerSequence& seq = *seqs[b];
    batch.ids.push_back(seq.consumer_id);
    for (std::size_t i = 0; i < seq.loans.size(); ++i) {
      const LoanEvent& loan = seq.loans[i];
      put_event(batch.loans, i, b, loan.features, st ? &st->loan : nullptr, opts.loan_dt_divisor);
      batch.y[i](0, b) = loan.y;
      batch.r[i](0, b) = loan.r;
      const std::size_t col = i * B + b;
      auto put_sub = [&](StreamTensor& s, const std::vector<std::vector<double>>& events,
                         const FeatureScaler* scaler, double divisor, const char* what) {
        if (events.size() > opts.sub_len) {
          throw DataError("consumer '" + seq.consumer_id + "' loan " + std::to_string(i) + " has " +
                          std::to_string(events.size()) + " " + what + ", capacity is " +
                          std::to_string(opts.sub_len));
        }
        for (std::size_t j = 0; j < events.size(); ++j) put_event(s, j, col, events[j], scaler, divisor);
      };
      if (orders) put_sub(*batch.orders, loan.orders, st ? &st->order : nullptr, opts.order_dt_divisor, "orders");
      if (sessions)
        put_sub(*batch.sessions, loan.sessions, st ? &st->session : nullptr, opts.session_dt_divisor, "sessions");
    }
  }
  return batch;
}

PaddedBatch pad_and_mask(std::span<const ConsumerSequence> seqs, const PadOptions& opts) {
  std::vector<const ConsumerSequence*> ptrs;
  ptrs.reserve(seqs.size());
  for (const auto& s : seqs) ptrs.push_back(&s);
  return pad_and_mask(ptrs, opts);
}

std::vector<ConsumerSequence> unpad(const PaddedBatch& batch) {
  const std::size_t B = batch.consumers;
  auto column = [](const StreamTensor& s, std::size_t step, std::size_t col) {
    std::vector<double> v(s.width);
    for (std::size_t k = 0; k < s.width; ++k) v[k] = s.x[step](k, col);
    return v;
  };
  auto events = [&](const std::optional<StreamTensor>& s, std::size_t col) {
    std::vector<std::vector<double>> out;
    if (!s) return out;
    for (std::size_t j = 0; j < s->steps() && s->mask[j](0, col) != 0.0; ++j) out.push_back(column(*s, j, col));
    return out;
  };
  std::vector<ConsumerSequence> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    out[b].consumer_id = batch.ids[b];
    for (std::size_t i = 0; i < batch.max_len && batch.loans.mask[i](0, b) != 0.0; ++i) {
      LoanEvent loan;
      loan.features = column(batch.loans, i, b);
      loan.y = static_cast<int>(batch.y[i](0, b));
      loan.r = batch.r[i](0, b);
      loan.orders = events(batch.orders, i * B + b);
      loan.sessions = events(batch.sessions, i * B + b);
      out[b].loans.push_back(std::move(loan));
    }
  }
  return out;
}

}  // namespace neucredit
