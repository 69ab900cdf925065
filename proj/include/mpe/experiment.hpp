#pragma once

#include <cstdint>
#include <stdexcept>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mpe/incremental.hpp"
#include "mpe/serialize.hpp"

namespace mpe {

/// Every key the runner understands, with its default. User configs are
/// merged onto this; unknown keys are rejected.
Json default_experiment_config();

/// Defaults overlaid with `user`, then validated. Throws ConfigError.
Json resolve_config(const Json& user);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// "a.b.c=value". The value is parsed as JSON when possible and kept as a
/// string otherwise. The path must already exist in the config.
void apply_override(Json& config, std::string_view assignment);

/// Per-trial seed: derive_seed(master, {trial, bits of sweep_value}).
std::uint64_t trial_seed(std::uint64_t master, std::size_t trial, double sweep_value);

/// Trainer settings for one trial; the three trainer seeds derive from `seed`.
TrainConfig trial_train_config(const Json& config, std::uint64_t seed);

/// Current value of the sweep axis in `config`, 0 when no axis is set.
double current_sweep_value(const Json& config);

/// Copy of `config` with the sweep axis set to `value`. For the L and K
/// axes the other factor is recomputed from sweep.total_layers.
Json with_sweep_value(const Json& config, double value);

/// One CSV table, header first. Cells are already formatted.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string to_csv() const;
};

/// Runs `config` (n_trials trials) and writes metrics.csv, manifest.json and
/// per-trial artifacts into `out`. Returns the metrics table.
Table run_experiment(const Json& config, const std::filesystem::path& out);

/// Runs every sweep value, then appends one aggregate row per value with
/// trial = "mean" and the standard deviations in the *_std columns.
Table run_sweep(const Json& config, const std::filesystem::path& out);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace mpe
