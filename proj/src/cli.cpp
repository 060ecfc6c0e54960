#include "neucredit/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "neucredit/checkpoint.hpp"
#include "neucredit/eval.hpp"
#include "neucredit/io.hpp"

namespace neucredit {

void NetworkOverrides::apply(NetworkConfig& cfg) const {
  if (d_ho) cfg.d_ho = *d_ho;
  if (d_hs) cfg.d_hs = *d_hs;
  if (d_hl) cfg.d_hl = *d_hl;
  if (d_z) cfg.d_z = *d_z;
  if (d_m) cfg.d_m = *d_m;
  if (strip_interval) cfg.strip_interval = *strip_interval;
  if (loan_dt_scale) cfg.loan_dt_scale = *loan_dt_scale;
  if (order_dt_scale) cfg.order_dt_scale = *order_dt_scale;
  if (session_dt_scale) cfg.session_dt_scale = *session_dt_scale;
}

RunSettings parse_run_settings(const std::string& json_text, RunSettings s) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "batch_size") s.training.batch_size = v.get<std::size_t>();
      else if (key == "learning_rate") s.training.learning_rate = v.get<double>();
      else if (key == "optimizer") s.training.optimizer = parse_optimizer_kind(v.get<std::string>());
      else if (key == "max_epochs") s.training.max_epochs = v.get<std::size_t>();
      else if (key == "patience") s.training.patience = v.get<std::size_t>();
      else if (key == "chunk") s.training.chunk = v.get<std::size_t>();
      else if (key == "validation_share") s.validation_share = v.get<double>();
      else if (key == "d_h") s.network.d_ho = s.network.d_hs = s.network.d_hl = v.get<std::size_t>();
      else if (key == "d_ho") s.network.d_ho = v.get<std::size_t>();
      else if (key == "d_hs") s.network.d_hs = v.get<std::size_t>();
      else if (key == "d_hl") s.network.d_hl = v.get<std::size_t>();
      else if (key == "d_z") s.network.d_z = v.get<std::size_t>();
      else if (key == "d_m") s.network.d_m = v.get<std::size_t>();
      else if (key == "strip_interval") s.network.strip_interval = v.get<bool>();
      else if (key == "loan_dt_scale") s.network.loan_dt_scale = v.get<double>();
      else if (key == "order_dt_scale") s.network.order_dt_scale = v.get<double>();
      else if (key == "session_dt_scale") s.network.session_dt_scale = v.get<double>();
      else throw UsageError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  try {
    s.training.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!(s.validation_share >= 0.0 && s.validation_share < 1.0))
    throw UsageError("config: validation_share must lie in [0, 1)");
  return s;
}

namespace {

const char* kCombinations =
    "valid combinations: lstm | lstm-w-dt | tlstm | tva with --view loan, order or session (--loss bce); "
    "fc-tva | mvm-tva with --view all (--loss bce); neucredit with --view all --loss conditional";

struct LoadedData {
  std::vector<ConsumerSequence> seqs;
  bool synthetic = false;
  std::size_t max_len = kMaxSequenceLength;
};

LoadedData load_any(const std::string& path) {
  LoadedData d;
  switch (detect_dataset_kind(path)) {
    case DatasetKind::empty: throw DataError(path + ": dataset is empty");
    case DatasetKind::consumer: d.seqs = load_dataset(path); break;
    case DatasetKind::synthetic: {
      d.synthetic = true;
      d.seqs = as_loan_sequences(load_synthetic(path));
      d.max_len = 1;
      for (const auto& s : d.seqs) d.max_len = std::max(d.max_len, s.loans.size());
      break;
    }
  }
  return d;
}

RunSettings settings_from(const std::string& config_path) {
  if (config_path.empty()) return {};
  std::string text;
  try {
    text = read_file(config_path);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  return parse_run_settings(text);
}

struct ModelChoice {
  ModelKind model;
  View view;
  LossKind loss;
};

ModelChoice resolve(const std::string& model_name, const std::string& view_name, const std::string& loss_name) {
  ModelChoice c{};
  try {
    c.model = parse_model_kind(model_name);
    c.view = view_name.empty() ? (is_hierarchical(c.model) ? View::all : View::loan) : parse_view(view_name);
    c.loss = loss_name.empty() ? (c.model == ModelKind::neucredit ? LossKind::conditional : LossKind::bce)
                               : parse_loss_kind(loss_name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(e.what()) + "; " + kCombinations);
  }
  const bool hier = is_hierarchical(c.model);
  if (hier != (c.view == View::all)) {
    throw UsageError("model " + std::string(to_string(c.model)) + " does not take --view " +
                     std::string(to_string(c.view)) + "; " + kCombinations);
  }
  if ((c.model == ModelKind::neucredit) != (c.loss == LossKind::conditional)) {
    throw UsageError(c.model == ModelKind::neucredit
                         ? std::string("neucredit requires --loss conditional; ") + kCombinations
                         : std::string("--loss conditional requires --model neucredit; ") + kCombinations);
  }
  return c;
}

NetworkConfig network_for(const ModelChoice& c, const LoadedData& d, const RunSettings& s) {
  if (d.synthetic && c.view != View::loan) {
    throw UsageError("synthetic datasets have a single stream; use --view loan with a single-stream model");
  }
  NetworkConfig cfg = config_for(c.model, c.view, widths_of(d.seqs.front()));
  if (d.synthetic) cfg.max_len = d.max_len;
  s.network.apply(cfg);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_generate(const std::string& out_path, std::size_t n, std::size_t len, std::uint64_t seed, bool per_sequence,
                 std::ostream& out) {
  if (n == 0 || len == 0) throw UsageError("--n and --len must be >= 1");
  SyntheticConfig cfg;
  cfg.sequences = n;
  cfg.length = len;
  cfg.seed = seed;
  cfg.per_sequence_transform = per_sequence;
  const auto data = generate_synthetic(cfg);
  save_synthetic(out_path, data);
  std::size_t pos = 0;
  for (const auto& s : data)
    for (const auto& st : s.steps) pos += static_cast<std::size_t>(st.y);
  out << "wrote " << n << " sequences of length " << len << " to " << out_path << '\n';
  char frac[32];
  std::snprintf(frac, sizeof frac, "%.6f", positive_fraction(data));
  out << "positive fraction: " << frac << " (" << pos << " of " << n * len << ")\n";
  return kExitOk;
}

int cmd_sample(const std::string& out_path, std::size_t n, std::uint64_t seed, std::ostream& out) {
  if (n == 0) throw UsageError("--n must be >= 1");
  ConsumerSampleConfig cfg;
  cfg.consumers = n;
  cfg.seed = seed;
  const auto data = sample_consumer_dataset(cfg);
  save_dataset(out_path, data);
  std::size_t loans = 0, defaults = 0;
  for (const auto& s : data) {
    loans += s.loans.size();
    for (const auto& l : s.loans) defaults += static_cast<std::size_t>(l.y);
  }
  out << "wrote " << n << " consumers (" << loans << " loans, " << defaults << " defaults) to " << out_path << '\n';
  return kExitOk;
}

int cmd_train(const std::string& data_path, const ModelChoice& choice, const std::string& config_path,
              const std::string& ckpt_path, const std::string& history_path, std::uint64_t seed,
              std::optional<std::size_t> epochs, std::ostream& out) {
  RunSettings s = settings_from(config_path);
  if (epochs) s.training.max_epochs = *epochs;
  s.training.loss = choice.loss;
  s.training.seed = seed;
  const LoadedData d = load_any(data_path);
  const NetworkConfig cfg = network_for(choice, d, s);

  std::vector<std::size_t> tr_idx, val_idx;
  holdout_split(d.seqs, s.validation_share, Rng(seed).fork(1).next(), tr_idx, val_idx);
  std::vector<ConsumerSequence> tr, val;
  for (std::size_t i : tr_idx) tr.push_back(d.seqs[i]);
  for (std::size_t i : val_idx) val.push_back(d.seqs[i]);
  if (tr.empty()) throw DataError("no training consumers after the validation hold-out");
  const Standardizer st = Standardizer::fit(tr);
  Rng init_rng = Rng(seed).fork(2);
  TrainHooks hooks;
  hooks.on_epoch = [&out](const EpochRecord& r) {
    out << "epoch " << r.epoch << ": train_loss " << fmt(r.train_loss) << ", val_loss " << fmt(r.val_loss)
        << ", val_auc " << fmt(r.val_auc) << '\n';
  };
  const TrainResult result = train(s.training, cfg, init_network(cfg, init_rng), tr, val, &st, hooks);

  Checkpoint c;
  c.model = std::string(to_string(choice.model));
  c.loss = choice.loss;
  c.network = cfg;
  c.standardizer = st;
  c.params = result.params;
  c.seed = seed;
  c.epochs_run = result.history.size();
  c.best_epoch = result.best_epoch;
  c.best_val_auc = result.best_val_auc;
  if (!ckpt_path.empty()) save_checkpoint(ckpt_path, c);
  if (!history_path.empty()) write_history_csv(history_path, result.history);
  out << "initial loss " << fmt(result.initial_loss) << "; best epoch " << result.best_epoch << " of "
      << result.history.size() << '\n';
  return kExitOk;
}

int cmd_cv(const std::string& data_path, const std::string& model_name, const std::string& view_name,
           const std::string& loss_name, std::size_t folds, std::uint64_t seed, const std::string& config_path,
           const std::string& csv_path, std::ostream& out) {
  const RunSettings s = settings_from(config_path);
  const LoadedData d = load_any(data_path);
  FoldModel model;
  std::string method;
  if (model_name == "lr") {
    if (!loss_name.empty() && loss_name != "bce") throw UsageError("lr is trained with --loss bce");
    const std::string v = view_name.empty() ? "loan" : view_name;
    if (v != "loan" && v != "all") throw UsageError("lr takes --view loan or all");
    model = lr_model(v == "all" ? LrView::all : LrView::loan);
    method = "lr (" + v + ")";
  } else {
    const ModelChoice choice = resolve(model_name, view_name, loss_name);
    NetworkModelSpec spec;
    spec.network = network_for(choice, d, s);
    spec.training = s.training;
    spec.training.loss = choice.loss;
    spec.validation_share = s.validation_share;
    model = network_model(spec);
    method = std::string(to_string(choice.model)) + " (" + std::string(to_string(choice.view)) + ")";
  }
  if (folds < 2) throw UsageError("--folds must be >= 2");
  if (d.seqs.size() < folds) {
    throw DataError("dataset has " + std::to_string(d.seqs.size()) + " consumers, too few for " +
                    std::to_string(folds) + " folds");
  }
  const ExperimentResult r = run_experiment(method, d.seqs, model, folds, seed);
  const std::vector<ExperimentResult> rows{r};
  if (!csv_path.empty()) write_results_csv(csv_path, rows);
  out << results_csv(rows);
  return kExitOk;
}

int cmd_decompose(const std::string& ckpt_path, const std::string& data_path, const std::string& out_path,
                  std::ostream& out) {
  const Checkpoint c = load_checkpoint(ckpt_path);
  if (c.network.head != HeadKind::decomposed) {
    throw UsageError("checkpoint " + ckpt_path + " holds a plain-head model (" + c.model +
                     "); risk decomposition needs a model trained with --model neucredit");
  }
  const LoadedData d = load_any(data_path);
  const Standardizer* st = c.standardizer ? &*c.standardizer : nullptr;
  const auto steps = predict(c.network, c.params, d.seqs, st);
  write_atomic(out_path, [&](std::ostream& csv) {
    csv << "consumer_id,loan_index,y,r,y_hat,y_a,y_w,y_b\n";
    for (const auto& s : steps) {
      csv << d.seqs[s.consumer].consumer_id << ',' << s.loan << ',' << s.y << ',' << fmt(s.r) << ',' << fmt(s.y_hat)
          << ',' << fmt(s.y_a) << ',' << fmt(s.y_w) << ',' << fmt(s.y_b) << '\n';
    }
  });
  out << "wrote " << steps.size() << " loan rows to " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequence models for consumer credit default prediction"};
  app.name("neucredit");
  app.require_subcommand(1);

  std::uint64_t seed = 42;

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
  std::string gen_out;
  std::size_t gen_n = 10000, gen_len = 50;
  bool per_sequence = false;
  gen->add_option("--out", gen_out, "Output file (one JSON record per line)")->required();
  gen->add_option("--n", gen_n, "Number of sequences")->capture_default_str();
  gen->add_option("--len", gen_len, "Steps per sequence")->capture_default_str();
  gen->add_option("--seed", seed, "Random seed")->capture_default_str();
  gen->add_flag("--per-sequence-transform", per_sequence, "Draw the feature dynamics once per sequence");

  auto* smp = app.add_subcommand("sample", "Write random consumer sequences with a planted default signal");
  std::string smp_out;
  std::size_t smp_n = 2000;
  smp->add_option("--out", smp_out, "Output file (one JSON record per line)")->required();
  smp->add_option("--n", smp_n, "Number of consumers")->capture_default_str();
  smp->add_option("--seed", seed, "Random seed")->capture_default_str();

  auto* trn = app.add_subcommand("train", "Train one model and write a checkpoint");
  std::string data_path, model_name, view_name, loss_name, config_path, ckpt_path, history_path;
  std::optional<std::size_t> epochs;
  trn->add_option("--data", data_path, "Dataset file")->required();
  trn->add_option("--model", model_name, "lstm|lstm-w-dt|tlstm|tva|fc-tva|mvm-tva|neucredit")->required();
  trn->add_option("--view", view_name, "loan|order|session|all");
  trn->add_option("--loss", loss_name, "bce|conditional");
  trn->add_option("--config", config_path, "JSON file with hyperparameters");
  trn->add_option("--out-checkpoint", ckpt_path, "Checkpoint output path");
  trn->add_option("--history-csv", history_path, "Per-epoch history output path");
  trn->add_option("--epochs", epochs, "Maximum number of epochs");
  trn->add_option("--seed", seed, "Random seed")->capture_default_str();

  auto* cv = app.add_subcommand("cv", "Cross-validate one model and write the AUC table");
  std::size_t folds = 5;
  std::string csv_path;
  cv->add_option("--data", data_path, "Dataset file")->required();
  cv->add_option("--model", model_name, "lr|lstm|lstm-w-dt|tlstm|tva|fc-tva|mvm-tva|neucredit")->required();
  cv->add_option("--view", view_name, "loan|order|session|all");
  cv->add_option("--loss", loss_name, "bce|conditional");
  cv->add_option("--folds", folds, "Number of folds")->capture_default_str();
  cv->add_option("--seed", seed, "Random seed")->capture_default_str();
  cv->add_option("--config", config_path, "JSON file with hyperparameters");
  cv->add_option("--out-csv", csv_path, "Results CSV output path");

  auto* dec = app.add_subcommand("decompose", "Export per-loan risk components of a trained model");
  std::string dec_ckpt, dec_out;
  dec->add_option("--checkpoint", dec_ckpt, "Checkpoint of a neucredit model")->required();
  dec->add_option("--data", data_path, "Dataset file")->required();
  dec->add_option("--out", dec_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(gen_out, gen_n, gen_len, seed, per_sequence, out);
    if (*smp) return cmd_sample(smp_out, smp_n, seed, out);
    if (*trn) {
      const ModelChoice choice = resolve(model_name, view_name, loss_name);
      return cmd_train(data_path, choice, config_path, ckpt_path, history_path, seed, epochs, out);
    }
    if (*cv) return cmd_cv(data_path, model_name, view_name, loss_name, folds, seed, config_path, csv_path, out);
    if (*dec) return cmd_decompose(dec_ckpt, data_path, dec_out, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace neucredit
