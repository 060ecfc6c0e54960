#include "neucredit/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "neucredit/parallel.hpp"

namespace neucredit {

namespace {

[[noreturn]] void bad_name(std::string_view what, std::string_view name, std::string_view options) {
  throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(name) + "' (expected " +
                              std::string(options) + ")");
}

Matrix drop_first_row(const Matrix& m) {
  Matrix out(m.rows() - 1, m.cols());
  for (std::size_t r = 1; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r - 1, c) = m(r, c);
  return out;
}

void need(std::size_t v, const char* name) {
  if (v == 0) throw std::invalid_argument(std::string("network config: ") + name + " must be positive");
}

void check_width(const StreamTensor& s, std::size_t width, const char* what) {
  if (s.width != width) {
    throw DimensionError(std::string(what) + " stream has width " + std::to_string(s.width) +
                         ", network expects " + std::to_string(width));
  }
}

}  // namespace

std::string_view to_string(View v) {
  switch (v) {
    case View::loan: return "loan";
    case View::order: return "order";
    case View::session: return "session";
    case View::all: return "all";
  }
  return "?";
}

View parse_view(std::string_view name) {
  if (name == "loan") return View::loan;
  if (name == "order") return View::order;
  if (name == "session") return View::session;
  if (name == "all") return View::all;
  bad_name("view", name, "loan, order, session, all");
}

std::string_view to_string(HeadKind h) { return h == HeadKind::plain ? "plain" : "decomposed"; }

HeadKind parse_head_kind(std::string_view name) {
  if (name == "plain") return HeadKind::plain;
  if (name == "decomposed") return HeadKind::decomposed;
  bad_name("head", name, "plain, decomposed");
}

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::lstm: return "lstm";
    case ModelKind::lstm_w_dt: return "lstm-w-dt";
    case ModelKind::tlstm: return "tlstm";
    case ModelKind::tva: return "tva";
    case ModelKind::fc_tva: return "fc-tva";
    case ModelKind::mvm_tva: return "mvm-tva";
    case ModelKind::neucredit: return "neucredit";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lstm") return ModelKind::lstm;
  if (name == "lstm-w-dt") return ModelKind::lstm_w_dt;
  if (name == "tlstm") return ModelKind::tlstm;
  if (name == "tva") return ModelKind::tva;
  if (name == "fc-tva") return ModelKind::fc_tva;
  if (name == "mvm-tva") return ModelKind::mvm_tva;
  if (name == "neucredit") return ModelKind::neucredit;
  bad_name("model", name, "lstm, lstm-w-dt, tlstm, tva, fc-tva, mvm-tva, neucredit");
}

bool is_hierarchical(ModelKind m) {
  return m == ModelKind::fc_tva || m == ModelKind::mvm_tva || m == ModelKind::neucredit;
}

// ---- config -----------------------------------------------------------------------

void NetworkConfig::validate() const {
  need(d_hl, "d_hl");
  need(d_m, "d_m");
  need(max_len, "max_len");
  const std::size_t strip = strip_interval ? 1 : 0;
  if (view == View::loan && d_l <= strip) throw std::invalid_argument("network config: d_l too small");
  if (view == View::order || view == View::all) {
    need(sub_len, "sub_len");
    need(d_ho, "d_ho");
    if (d_o <= strip) throw std::invalid_argument("network config: d_o too small");
  }
  if (view == View::session || view == View::all) {
    need(sub_len, "sub_len");
    need(d_hs, "d_hs");
    if (d_s <= strip) throw std::invalid_argument("network config: d_s too small");
  }
  if (view == View::all) {
    need(d_l, "d_l");
    need(d_z, "d_z");
  }
  for (double s : {loan_dt_scale, order_dt_scale, session_dt_scale}) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("network config: dt scales must be positive");
  }
}

CellShape NetworkConfig::loan_cell_shape() const {
  std::size_t input = 0;
  switch (view) {
    case View::loan: input = d_l - (strip_interval ? 1 : 0); break;
    case View::order: input = d_ho; break;
    case View::session: input = d_hs; break;
    case View::all: input = d_z; break;
  }
  return {input, d_hl, d_m};
}

CellShape NetworkConfig::order_cell_shape() const {
  return {d_o - (strip_interval ? 1 : 0), d_ho, d_m};
}

CellShape NetworkConfig::session_cell_shape() const {
  return {d_s - (strip_interval ? 1 : 0), d_hs, d_m};
}

FusionShape NetworkConfig::fusion_shape() const { return {d_l, d_ho, d_hs, d_z}; }

PadOptions NetworkConfig::pad_options(const Standardizer* st) const {
  PadOptions o;
  o.max_len = max_len;
  o.sub_len = sub_len;
  o.standardizer = st;
  o.loan_dt_divisor = loan_dt_scale;
  o.order_dt_divisor = order_dt_scale;
  o.session_dt_divisor = session_dt_scale;
  o.include_orders = view == View::order || view == View::all;
  o.include_sessions = view == View::session || view == View::all;
  return o;
}

NetworkConfig config_for(ModelKind model, View view, const StreamWidths& widths) {
  NetworkConfig cfg;
  cfg.view = view;
  cfg.d_l = widths.loan;
  cfg.d_o = widths.order;
  cfg.d_s = widths.session;
  cfg.head = HeadKind::plain;
  if (is_hierarchical(model)) {
    if (view != View::all) {
      throw std::invalid_argument(std::string(to_string(model)) + " is hierarchical and requires view all");
    }
    cfg.fusion = model == ModelKind::fc_tva ? FusionKind::fc : FusionKind::mvm;
    if (model == ModelKind::neucredit) cfg.head = HeadKind::decomposed;
  } else {
    if (view == View::all) {
      throw std::invalid_argument(std::string(to_string(model)) +
                                  " is a single-stream model and takes view loan, order or session");
    }
    CellKind k = CellKind::tva;
    if (model == ModelKind::lstm) k = CellKind::lstm;
    if (model == ModelKind::lstm_w_dt) k = CellKind::lstm_w_dt;
    if (model == ModelKind::tlstm) k = CellKind::tlstm;
    cfg.loan_cell = cfg.order_cell = cfg.session_cell = k;
  }
  cfg.validate();
  return cfg;
}

// ---- parameters ---------------------------------------------------------------------

ParamSet init_network(const NetworkConfig& cfg, Rng& rng) {
  cfg.validate();
  ParamSet p;
  if (cfg.view == View::order || cfg.view == View::all)
    init_cell_params(p, "order", cfg.order_cell, cfg.order_cell_shape(), rng);
  if (cfg.view == View::session || cfg.view == View::all)
    init_cell_params(p, "session", cfg.session_cell, cfg.session_cell_shape(), rng);
  if (cfg.view == View::all) init_fusion_params(p, "fusion", cfg.fusion, cfg.fusion_shape(), rng);
  init_cell_params(p, "loan", cfg.loan_cell, cfg.loan_cell_shape(), rng);

  const std::size_t d = cfg.d_hl;
  const double r = 1.0 / std::sqrt(static_cast<double>(d));
  if (cfg.head == HeadKind::plain) {
    p.add("head.w_P", rng.uniform_matrix(1, d, -r, r));
    p.add("head.b_P", Matrix(1, 1));
  } else {
    p.add("head.W_A", rng.uniform_matrix(d, d, -r, r));
    p.add("head.b_A_vec", Matrix(d, 1));
    p.add("head.W_W", rng.uniform_matrix(d, d, -r, r));
    p.add("head.b_W_vec", Matrix(d, 1));
    p.add("head.w_A", rng.uniform_matrix(1, d, -r, r));
    p.add("head.w_W", rng.uniform_matrix(1, d, -r, r));
    p.add("head.w_B", rng.uniform_matrix(1, d, -r, r));
    p.add("head.b_A", Matrix(1, 1));
    p.add("head.b_W", Matrix(1, 1));
    p.add("head.b_B", Matrix(1, 1));
  }
  return p;
}

void check_params(const NetworkConfig& cfg, const ParamSet& p) {
  Rng rng(0);
  const ParamSet ref = init_network(cfg, rng);
  for (const auto& e : ref) {
    if (!p.contains(e.name)) throw DimensionError("parameters lack '" + e.name + "'");
    const Matrix& m = p.at(e.name);
    if (!m.same_shape(e.value)) {
      throw DimensionError("parameter '" + e.name + "' has shape " + m.shape_string() + ", expected " +
                           e.value.shape_string());
    }
  }
  if (p.size() != ref.size()) {
    for (const auto& e : p) {
      if (!ref.contains(e.name)) throw DimensionError("unexpected parameter '" + e.name + "'");
    }
  }
}

// ---- forward ------------------------------------------------------------------------

HeadOutputs decomposed_head(const ParamVars& vars, Var h) {
  HeadOutputs o;
  o.h_a = tanh(add(matmul(vars.at("head.W_A"), h), vars.at("head.b_A_vec")));
  o.h_w = tanh(add(matmul(vars.at("head.W_W"), h), vars.at("head.b_W_vec")));
  o.h_b = sub(sub(h, o.h_a), o.h_w);
  o.y_a = sigmoid(add(matmul(vars.at("head.w_A"), o.h_a), vars.at("head.b_A")));
  o.y_w = sigmoid(add(matmul(vars.at("head.w_W"), o.h_w), vars.at("head.b_W")));
  o.y_b = sigmoid(add(matmul(vars.at("head.w_B"), o.h_b), vars.at("head.b_B")));
  o.y_hat = hadamard(hadamard(o.y_a, o.y_w), o.y_b);
  return o;
}

Var plain_head(const ParamVars& vars, Var h) {
  return sigmoid(add(matmul(vars.at("head.w_P"), h), vars.at("head.b_P")));
}

Var encode_stream(const TapeCell& cell, const StreamTensor& stream, bool strip_interval) {
  Tape& tape = cell.tape();
  TapeCell::State s = cell.initial(stream.columns);
  for (std::size_t t = 0; t < stream.steps(); ++t) {
    Var x = tape.constant(strip_interval ? drop_first_row(stream.x[t]) : stream.x[t]);
    s = cell.masked_step(s, x, stream.dt[t], stream.mask[t]);
  }
  return s.h;
}

TapeOutputs forward_on_tape(const NetworkConfig& cfg, const ParamVars& vars, const PaddedBatch& batch) {
  cfg.validate();
  Tape& tape = vars.tape();
  const std::size_t B = batch.consumers;
  const bool uses_orders = cfg.view == View::order || cfg.view == View::all;
  const bool uses_sessions = cfg.view == View::session || cfg.view == View::all;
  check_width(batch.loans, cfg.d_l, "loan");
  if (uses_orders) {
    if (!batch.orders) throw DimensionError("batch has no order stream");
    check_width(*batch.orders, cfg.d_o, "order");
  }
  if (uses_sessions) {
    if (!batch.sessions) throw DimensionError("batch has no session stream");
    check_width(*batch.sessions, cfg.d_s, "session");
  }

  std::optional<Var> ho, hs;
  if (uses_orders) {
    TapeCell cell(vars, "order", cfg.order_cell, cfg.order_cell_shape());
    ho = encode_stream(cell, *batch.orders, cfg.strip_interval);
  }
  if (uses_sessions) {
    TapeCell cell(vars, "session", cfg.session_cell, cfg.session_cell_shape());
    hs = encode_stream(cell, *batch.sessions, cfg.strip_interval);
  }

  TapeCell up(vars, "loan", cfg.loan_cell, cfg.loan_cell_shape());
  TapeCell::State s = up.initial(B);
  TapeOutputs out;
  for (std::size_t i = 0; i < batch.max_len; ++i) {
    Var input;
    switch (cfg.view) {
      case View::loan:
        input = tape.constant(cfg.strip_interval ? drop_first_row(batch.loans.x[i]) : batch.loans.x[i]);
        break;
      case View::order: input = slice_cols(*ho, i * B, B); break;
      case View::session: input = slice_cols(*hs, i * B, B); break;
      case View::all:
        input = fuse(vars, "fusion", cfg.fusion, cfg.fusion_shape(), tape.constant(batch.loans.x[i]),
                     slice_cols(*ho, i * B, B), slice_cols(*hs, i * B, B));
        break;
    }
    s = up.masked_step(s, input, batch.loans.dt[i], batch.loans.mask[i]);
    out.h.push_back(s.h);
    if (cfg.head == HeadKind::plain) {
      out.y_hat.push_back(plain_head(vars, s.h));
    } else {
      HeadOutputs o = decomposed_head(vars, s.h);
      out.y_hat.push_back(o.y_hat);
      out.y_a.push_back(o.y_a);
      out.y_w.push_back(o.y_w);
      out.y_b.push_back(o.y_b);
    }
  }
  return out;
}

RiskOutput forward(const NetworkConfig& cfg, const ParamSet& p, const PaddedBatch& batch) {
  check_params(cfg, p);
  Tape tape;
  ParamVars vars(tape, p, false);
  const TapeOutputs t = forward_on_tape(cfg, vars, batch);
  RiskOutput out;
  out.decomposed = cfg.head == HeadKind::decomposed;
  auto values = [](const std::vector<Var>& vs) {
    std::vector<Matrix> m;
    m.reserve(vs.size());
    for (const Var& v : vs) m.push_back(v.value());
    return m;
  };
  out.y_hat = values(t.y_hat);
  out.y_a = values(t.y_a);
  out.y_w = values(t.y_w);
  out.y_b = values(t.y_b);
  out.h = values(t.h);
  out.mask = batch.loans.mask;
  return out;
}

RiskOutput decompose(const NetworkConfig& cfg, const ParamSet& p, const PaddedBatch& batch) {
  if (cfg.head != HeadKind::decomposed) {
    throw std::invalid_argument("risk decomposition needs a model trained with the decomposed head");
  }
  return forward(cfg, p, batch);
}

Matrix encode_subsequence(const ParamSet& p, const std::string& prefix, CellKind kind, const CellShape& shape,
                          const Matrix& seq, const Matrix& dts, const Matrix& mask) {
  const std::size_t n = seq.rows();
  if (seq.cols() != shape.input || dts.rows() != n || dts.cols() != 1 || mask.rows() != n || mask.cols() != 1) {
    throw DimensionError("encode_subsequence: seq " + seq.shape_string() + ", dts " + dts.shape_string() +
                         ", mask " + mask.shape_string() + " for input width " + std::to_string(shape.input));
  }
  StreamTensor stream;
  stream.width = shape.input;
  stream.columns = 1;
  for (std::size_t t = 0; t < n; ++t) {
    const double m = mask(t, 0);
    if (m != 0.0 && m != 1.0) throw DomainError("encode_subsequence: mask entries must be 0 or 1");
    Matrix x(shape.input, 1);
    for (std::size_t k = 0; k < shape.input; ++k) x(k, 0) = seq(t, k);
    stream.x.push_back(std::move(x));
    stream.dt.push_back(Matrix(1, 1, dts(t, 0)));
    stream.mask.push_back(Matrix(1, 1, m));
  }
  Tape tape;
  ParamVars vars(tape, p, false);
  TapeCell cell(vars, prefix, kind, shape);
  return encode_stream(cell, stream, false).value();
}

// ---- prediction ----------------------------------------------------------------------

std::size_t thread_budget() {
  if (const char* env = std::getenv("NEUCREDIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::vector<ScoredStep> predict(const NetworkConfig& cfg, const ParamSet& p,
                                std::span<const ConsumerSequence> data, const Standardizer* st,
                                std::size_t chunk) {
  check_params(cfg, p);
  if (chunk == 0) chunk = 1;
  const std::size_t n_chunks = (data.size() + chunk - 1) / chunk;
  std::vector<std::vector<ScoredStep>> parts(n_chunks);
  const PadOptions opts = cfg.pad_options(st);

  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(data.size(), begin + chunk);
    std::vector<const ConsumerSequence*> ptrs;
    for (std::size_t i = begin; i < end; ++i) ptrs.push_back(&data[i]);
    const PaddedBatch batch = pad_and_mask(ptrs, opts);
    Tape tape;
    ParamVars vars(tape, p, false);
    const TapeOutputs t = forward_on_tape(cfg, vars, batch);
    std::vector<ScoredStep>& out = parts[c];
    for (std::size_t b = 0; b < batch.consumers; ++b) {
      const ConsumerSequence& seq = *ptrs[b];
      for (std::size_t i = 0; i < seq.loans.size(); ++i) {
        ScoredStep s;
        s.consumer = begin + b;
        s.loan = i;
        s.y = seq.loans[i].y;
        s.r = seq.loans[i].r;
        s.y_hat = t.y_hat[i].value()(0, b);
        if (!t.y_a.empty()) {
          s.y_a = t.y_a[i].value()(0, b);
          s.y_w = t.y_w[i].value()(0, b);
          s.y_b = t.y_b[i].value()(0, b);
        }
        out.push_back(s);
      }
    }
  };

  parallel_for(n_chunks, run_chunk);

  std::vector<ScoredStep> all;
  for (auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  return all;
}

}  // namespace neucredit
