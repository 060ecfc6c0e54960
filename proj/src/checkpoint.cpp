#include "neucredit/checkpoint.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "neucredit/io.hpp"

namespace neucredit {

using nlohmann::json;

namespace {

json scaler_to_json(const FeatureScaler& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

FeatureScaler scaler_from_json(const json& j) {
  FeatureScaler s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw DataError("checkpoint: scaler mean and scale differ in length");
  return s;
}

json network_to_json(const NetworkConfig& n) {
  return {{"view", to_string(n.view)},
          {"d_l", n.d_l},
          {"d_o", n.d_o},
          {"d_s", n.d_s},
          {"d_ho", n.d_ho},
          {"d_hs", n.d_hs},
          {"d_hl", n.d_hl},
          {"d_z", n.d_z},
          {"d_m", n.d_m},
          {"max_len", n.max_len},
          {"sub_len", n.sub_len},
          {"fusion", to_string(n.fusion)},
          {"loan_cell", to_string(n.loan_cell)},
          {"order_cell", to_string(n.order_cell)},
          {"session_cell", to_string(n.session_cell)},
          {"head", to_string(n.head)},
          {"strip_interval", n.strip_interval},
          {"loan_dt_scale", n.loan_dt_scale},
          {"order_dt_scale", n.order_dt_scale},
          {"session_dt_scale", n.session_dt_scale}};
}

NetworkConfig network_from_json(const json& j) {
  NetworkConfig n;
  n.view = parse_view(j.at("view").get<std::string>());
  n.d_l = j.at("d_l").get<std::size_t>();
  n.d_o = j.at("d_o").get<std::size_t>();
  n.d_s = j.at("d_s").get<std::size_t>();
  n.d_ho = j.at("d_ho").get<std::size_t>();
  n.d_hs = j.at("d_hs").get<std::size_t>();
  n.d_hl = j.at("d_hl").get<std::size_t>();
  n.d_z = j.at("d_z").get<std::size_t>();
  n.d_m = j.at("d_m").get<std::size_t>();
  n.max_len = j.at("max_len").get<std::size_t>();
  n.sub_len = j.at("sub_len").get<std::size_t>();
  n.fusion = parse_fusion_kind(j.at("fusion").get<std::string>());
  n.loan_cell = parse_cell_kind(j.at("loan_cell").get<std::string>());
  n.order_cell = parse_cell_kind(j.at("order_cell").get<std::string>());
  n.session_cell = parse_cell_kind(j.at("session_cell").get<std::string>());
  n.head = parse_head_kind(j.at("head").get<std::string>());
  n.strip_interval = j.at("strip_interval").get<bool>();
  n.loan_dt_scale = j.at("loan_dt_scale").get<double>();
  n.order_dt_scale = j.at("order_dt_scale").get<double>();
  n.session_dt_scale = j.at("session_dt_scale").get<double>();
  n.validate();
  return n;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
  json params = json::array();
  for (const auto& e : c.params) {
    const auto v = e.value.values();
    params.push_back({{"name", e.name},
                      {"rows", e.value.rows()},
                      {"cols", e.value.cols()},
                      {"values", std::vector<double>(v.begin(), v.end())}});
  }
  json doc = {{"format_version", c.format_version},
              {"model", c.model},
              {"loss", to_string(c.loss)},
              {"network", network_to_json(c.network)},
              {"params", std::move(params)},
              {"training",
               {{"seed", c.seed},
                {"epochs_run", c.epochs_run},
                {"best_epoch", c.best_epoch},
                {"best_val_auc", std::isfinite(c.best_val_auc) ? json(c.best_val_auc) : json(nullptr)}}}};
  if (c.standardizer) {
    doc["standardizer"] = {{"loan", scaler_to_json(c.standardizer->loan)},
                           {"order", scaler_to_json(c.standardizer->order)},
                           {"session", scaler_to_json(c.standardizer->session)}};
  } else {
    doc["standardizer"] = nullptr;
  }
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    Checkpoint c;
    c.format_version = doc.at("format_version").get<int>();
    if (c.format_version != kCheckpointVersion) {
      throw DataError("checkpoint: unsupported format_version " + std::to_string(c.format_version));
    }
    c.model = doc.at("model").get<std::string>();
    c.loss = parse_loss_kind(doc.at("loss").get<std::string>());
    c.network = network_from_json(doc.at("network"));
    for (const auto& e : doc.at("params")) {
      const auto rows = e.at("rows").get<std::size_t>();
      const auto cols = e.at("cols").get<std::size_t>();
      auto values = e.at("values").get<std::vector<double>>();
      if (values.size() != rows * cols) {
        throw DataError("checkpoint: parameter '" + e.at("name").get<std::string>() + "' has " +
                        std::to_string(values.size()) + " values for shape (" + std::to_string(rows) + ", " +
                        std::to_string(cols) + ")");
      }
      c.params.add(e.at("name").get<std::string>(), Matrix(rows, cols, std::move(values)));
    }
    check_params(c.network, c.params);
    const json& st = doc.at("standardizer");
    if (!st.is_null()) {
      Standardizer s;
      s.loan = scaler_from_json(st.at("loan"));
      s.order = scaler_from_json(st.at("order"));
      s.session = scaler_from_json(st.at("session"));
      c.standardizer = std::move(s);
    }
    const json& tr = doc.at("training");
    c.seed = tr.at("seed").get<std::uint64_t>();
    c.epochs_run = tr.at("epochs_run").get<std::size_t>();
    c.best_epoch = tr.at("best_epoch").get<std::size_t>();
    const json& best = tr.at("best_val_auc");
    c.best_val_auc = best.is_null() ? std::numeric_limits<double>::quiet_NaN() : best.get<double>();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  const std::string text = checkpoint_to_json(c);
  write_atomic(path, [&](std::ostream& out) { out << text; });
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  return checkpoint_from_json(text);
}

}  // namespace neucredit
