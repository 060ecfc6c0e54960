#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neucredit/autodiff.hpp"
#include "neucredit/cells.hpp"
#include "neucredit/data.hpp"
#include "neucredit/fusion.hpp"
#include "neucredit/param_set.hpp"
#include "neucredit/rng.hpp"

namespace neucredit {

/// Which streams a model reads. `all` is the hierarchical multi-view network;
/// `order` and `session` encode the chosen sub-sequence per loan and run the
/// up-level cell over those encodings; `loan` runs one cell over the loans.
enum class View { loan, order, session, all };
std::string_view to_string(View v);
View parse_view(std::string_view name);

enum class HeadKind { plain, decomposed };
std::string_view to_string(HeadKind h);
HeadKind parse_head_kind(std::string_view name);

/// Named model roster accepted by the CLI.
enum class ModelKind { lstm, lstm_w_dt, tlstm, tva, fc_tva, mvm_tva, neucredit };
std::string_view to_string(ModelKind m);
ModelKind parse_model_kind(std::string_view name);
bool is_hierarchical(ModelKind m);

struct NetworkConfig {
  View view = View::all;
  std::size_t d_l = 15;
  std::size_t d_o = 45;
  std::size_t d_s = 16;
  std::size_t d_ho = 5;
  std::size_t d_hs = 5;
  std::size_t d_hl = 5;
  std::size_t d_z = 5;
  std::size_t d_m = 8;
  std::size_t max_len = kMaxSequenceLength;
  std::size_t sub_len = kMaxSequenceLength;
  FusionKind fusion = FusionKind::mvm;
  CellKind loan_cell = CellKind::tva;
  CellKind order_cell = CellKind::tva;
  CellKind session_cell = CellKind::tva;
  HeadKind head = HeadKind::decomposed;
  /// Cells receive the interval only through dt; the interval feature (index 0)
  /// is dropped from their input vectors. Fusion always sees full loan vectors.
  bool strip_interval = true;
  /// Intervals are divided by these before reaching the cells.
  double loan_dt_scale = 1.0;
  double order_dt_scale = 1.0;
  double session_dt_scale = 1.0;

  /// Throws std::invalid_argument on zero widths or an inconsistent view.
  void validate() const;
  CellShape loan_cell_shape() const;
  CellShape order_cell_shape() const;
  CellShape session_cell_shape() const;
  FusionShape fusion_shape() const;
  PadOptions pad_options(const Standardizer* st = nullptr) const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Roster entry -> configuration (cell kinds, fusion, head, view) with the
/// given input widths and hidden sizes left at their defaults.
NetworkConfig config_for(ModelKind model, View view, const StreamWidths& widths);

/// Parameter names: "order.*", "session.*", "loan.*" for the cells,
/// "fusion.*", and "head.*" (w_P, b_P or W_A, b_A_vec, W_W, b_W_vec, w_A, w_W,
/// w_B, b_A, b_W, b_B).
ParamSet init_network(const NetworkConfig& cfg, Rng& rng);
/// Throws DimensionError when p lacks an entry cfg needs or a shape differs.
void check_params(const NetworkConfig& cfg, const ParamSet& p);

/// Tape-level outputs, one (1, B) Var per loan step (h is (d_hl, B)).
struct TapeOutputs {
  std::vector<Var> y_hat;
  std::vector<Var> y_a, y_w, y_b;  // decomposed head only
  std::vector<Var> h;
};

/// Runs the configured network over a padded batch on vars' tape.
TapeOutputs forward_on_tape(const NetworkConfig& cfg, const ParamVars& vars, const PaddedBatch& batch);

/// Decomposition heads applied to a hidden batch (d_hl, B).
struct HeadOutputs {
  Var h_a, h_w, h_b;
  Var y_a, y_w, y_b, y_hat;
};
HeadOutputs decomposed_head(const ParamVars& vars, Var h);
Var plain_head(const ParamVars& vars, Var h);

/// Per-step values (1, B) with the loan mask of the batch.
struct RiskOutput {
  bool decomposed = false;
  std::vector<Matrix> y_hat, y_a, y_w, y_b;
  std::vector<Matrix> h;
  std::vector<Matrix> mask;
};

RiskOutput forward(const NetworkConfig& cfg, const ParamSet& p, const PaddedBatch& batch);
/// As forward; throws std::invalid_argument unless cfg.head is decomposed.
RiskOutput decompose(const NetworkConfig& cfg, const ParamSet& p, const PaddedBatch& batch);

/// Final hidden state of one cell over a padded sequence: rows of seq are
/// events (max_len, d_x), dts and mask are (max_len, 1).
Matrix encode_subsequence(const ParamSet& p, const std::string& prefix, CellKind kind, const CellShape& shape,
                          const Matrix& seq, const Matrix& dts, const Matrix& mask);
/// Batched form: every column of the stream is one sequence; returns (d_h, columns).
Var encode_stream(const TapeCell& cell, const StreamTensor& stream, bool strip_interval);

/// One valid loan step of a prediction pass.
struct ScoredStep {
  std::size_t consumer = 0;
  std::size_t loan = 0;
  int y = 0;
  double r = 0.0;
  double y_hat = 0.0;
  double y_a = 0.0, y_w = 0.0, y_b = 0.0;
};

/// Scores every valid loan step, consumer-major, in chunks of `chunk`
/// consumers. Chunks may run on several threads; output order is fixed.
std::vector<ScoredStep> predict(const NetworkConfig& cfg, const ParamSet& p,
                                std::span<const ConsumerSequence> data, const Standardizer* st,
                                std::size_t chunk = 64);

/// Worker count: NEUCREDIT_THREADS if set and positive, else the hardware count.
std::size_t thread_budget();

}  // namespace neucredit
