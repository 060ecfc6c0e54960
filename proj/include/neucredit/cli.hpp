#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "neucredit/network.hpp"
#include "neucredit/training.hpp"

namespace neucredit {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // I/O and other runtime failures
  kExitUsage = 2,
  kExitData = 3,
  kExitDivergence = 4,
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct NetworkOverrides {
  std::optional<std::size_t> d_ho, d_hs, d_hl, d_z, d_m;
  std::optional<bool> strip_interval;
  std::optional<double> loan_dt_scale, order_dt_scale, session_dt_scale;
  void apply(NetworkConfig& cfg) const;
};

/// Hyperparameters of a run.
struct RunSettings {
  TrainingConfig training;
  NetworkOverrides network;
  /// Share of the training consumers held out for early stopping.
  double validation_share = 0.1;
};

/// Reads a JSON object with any of: batch_size, learning_rate, optimizer,
/// max_epochs, patience, chunk, validation_share, d_h (sets d_ho, d_hs and
/// d_hl), d_ho, d_hs, d_hl, d_z, d_m, strip_interval, loan_dt_scale,
/// order_dt_scale, session_dt_scale. Unknown keys throw UsageError.
RunSettings parse_run_settings(const std::string& json_text, RunSettings base = {});

/// Entry point of the `neucredit` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace neucredit
