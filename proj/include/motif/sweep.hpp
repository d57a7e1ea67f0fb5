#pragma once

// Ablation grids: the cross product of named axes applied on top of a
// base training config. All grid points share one data split.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "motif/config.hpp"
#include "motif/trainer.hpp"

namespace motif {

struct SweepAxis {
  std::string name;
  std::vector<nlohmann::json> values;
};

struct SweepSpec {
  RunConfig base;
  std::vector<SweepAxis> axes;
  /// Columns of the output table, in order.
  std::vector<std::string> metrics{"precision", "recall", "f1", "f1_with_sm", "max_accuracy"};
  std::filesystem::path output_dir;
  /// Run grid points concurrently; each point is still deterministic.
  bool parallel = false;

  void validate() const;
};

SweepSpec parse_sweep_spec(const nlohmann::json& doc);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct GridPoint {
  std::string name;
  /// Axis values rendered as text, aligned with the spec's axes.
  std::vector<std::string> values;
  TrainConfig config;
};

/// Cross product of the axes, first axis outermost.
std::vector<GridPoint> expand_grid(const SweepSpec& spec);

struct SweepRow {
  std::string point;
  std::vector<std::string> axis_values;
  std::vector<double> metrics;
};

struct SweepTable {
  std::vector<std::string> axis_names;
  std::vector<std::string> metric_names;
  std::vector<SweepRow> rows;
};

bool is_metric_name(std::string_view name);
double metric_value(const MetricsReport& report, std::string_view name);

/// Trains every grid point on the shared split. Per-point run directories
/// land under output_dir/points when output_dir is set, plus sweep.dat.
SweepTable run_sweep(const SweepSpec& spec, const DatasetManifest& manifest, const FeatureSource& features);

/// Plot-ready table: one header line, one row per grid point. The key
/// column is named by the axis names joined with '-', its values joined
/// with '/'.
void write_sweep_table(std::ostream& out, const SweepTable& table);

struct RankEntry {
  std::size_t rank = 0;
  std::string point;
  double value = 0.0;
};

/// Descending by metric; ties ordered by grid-point name.
std::vector<RankEntry> rank_models(const SweepTable& table, std::string_view metric);

}  // namespace motif
