#pragma once

// Run-config documents (JSON). Every section rejects unknown keys and
// omitted fields take the defaults of TrainConfig.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "motif/trainer.hpp"

namespace motif {

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path store;
  std::optional<std::uint64_t> seed;
  TrainConfig train{};

  /// Copies the seed into train, requires it to be present, validates.
  void finalize();
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);
nlohmann::ordered_json to_json(const TrainConfig& config);

/// Names accepted as sweep axes.
bool is_sweepable_field(std::string_view name);
/// Sets one TrainConfig field from a JSON value; throws ConfigError.
void set_train_field(TrainConfig& config, std::string_view name, const nlohmann::json& value);

}  // namespace motif
