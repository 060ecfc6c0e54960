#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "neucredit/data.hpp"
#include "neucredit/network.hpp"
#include "neucredit/param_set.hpp"
#include "neucredit/training.hpp"

namespace neucredit {

inline constexpr int kCheckpointVersion = 1;

/// A trained model: network layout, the standardization fitted on its training
/// data, parameters and training metadata. Stored as JSON with decimal numbers
/// printed in shortest round-trip form, so reloading is exact.
struct Checkpoint {
  int format_version = kCheckpointVersion;
  std::string model;
  LossKind loss = LossKind::bce;
  NetworkConfig network;
  std::optional<Standardizer> standardizer;
  ParamSet params;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_auc = 0.0;  // NaN is stored as null
};

std::string checkpoint_to_json(const Checkpoint& c);
/// Throws DataError on malformed documents or unsupported versions.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace neucredit
