#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motif/data.hpp"
#include "motif/loss.hpp"
#include "motif/metrics.hpp"
#include "motif/model.hpp"

namespace motif {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  double lr = 0.001;
  std::uint64_t seed = 0;
  LossConfig loss{};
  HeadConfig head{};
  /// Evaluate on the test split every this many epochs; 0 disables.
  std::size_t eval_every = 0;
  MetricOptions metrics{};
  double test_fraction = 0.2;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochEvaluation {
  std::size_t epoch = 0;
  MetricsReport report;
};

struct RunRecord {
  TrainConfig config;
  /// Mean training loss per epoch (sample-weighted over batches).
  std::vector<double> epoch_losses;
  std::vector<EpochEvaluation> evaluations;
  /// Final-epoch test reports for the all, red_flag and canonical slices;
  /// empty when the split has no test images.
  std::vector<MetricsReport> final_reports;
  std::filesystem::path checkpoint_path;
  double wall_seconds = 0.0;
  HeadParams params;

  const MetricsReport& final_report(Slice slice) const;
};

/// Trains a head on the train split of manifest. When run_dir is given,
/// writes config.json, loss.tsv, checkpoint.mhck, metrics_<slice>.json,
/// metrics.dat and (if eval_every > 0) eval.tsv into it.
RunRecord train(const DatasetManifest& manifest, const FeatureSource& features, const TrainConfig& config,
                const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// Sigmoid probabilities and thresholded sets for ids, in the given order.
std::vector<PredictionSet> predict(const HeadParams& params, const FeatureSource& features,
                                   std::span<const std::string> ids, double threshold = 0.5);
std::vector<PredictionSet> predict(const std::filesystem::path& checkpoint, const FeatureSource& features,
                                   std::span<const std::string> ids, double threshold = 0.5);

/// All three slice reports (all, red_flag, canonical).
std::vector<MetricsReport> evaluate_slices(std::span<const PredictionSet> predictions,
                                           const DatasetManifest& manifest, const MetricOptions& options);

/// Tab-separated probability table; motif_names may be empty (indices are used).
void write_predictions(std::ostream& out, std::span<const PredictionSet> predictions,
                       std::span<const std::string> motif_names = {});

/// Whitespace-separated table, one row per slice report.
void write_metrics_table(std::ostream& out, std::span<const MetricsReport> reports);

}  // namespace motif
