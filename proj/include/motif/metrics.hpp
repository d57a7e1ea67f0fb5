#pragma once

// Example-based multi-label metrics.
//
// With O the predicted set and GT the ground-truth set of an image, and TS
// the test set, the default orientation is
//   P = mean |O n GT| / |GT|,   R = mean |O n GT| / |O|,   F1 = 2PR/(P+R).
// conventional_pr swaps the two denominators (P over |O|, R over |GT|).
// An image with an empty O contributes 0 to the |O| term.

#include <span>
#include <string>
#include <vector>

#include "motif/data.hpp"

namespace motif {

struct PredictionSet {
  std::string image_id;
  std::vector<double> probabilities;
  /// Motifs with probability >= threshold, ascending.
  MotifSet predicted;
  /// Highest-probability motif; lowest index on ties.
  MotifId argmax = 0;
  bool argmax_tied = false;
};

PredictionSet make_prediction(std::string image_id, std::vector<double> probabilities, double threshold = 0.5);

enum class GroundTruthMode { primary_only, with_secondary };

MotifSet ground_truth(const AnnotationRecord& annotation, GroundTruthMode mode);

struct MetricOptions {
  double threshold = 0.5;
  bool conventional_pr = false;

  bool operator==(const MetricOptions&) const = default;
};

enum class Slice { all, red_flag, canonical };
std::string_view to_string(Slice slice);

struct MetricsReport {
  std::string slice = "all";
  std::size_t n_images = 0;
  /// Set when the slice selected no images; all metrics are then 0.
  bool empty = false;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double f1_with_sm = 0.0;
  double max_accuracy = 0.0;
  double exact_match = 0.0;
  std::size_t argmax_ties = 0;
  std::size_t empty_predictions = 0;
};

/// P, R, F1 over aligned predictions and ground-truth sets. Fills
/// precision, recall, f1, n_images and empty_predictions.
MetricsReport example_metrics(std::span<const PredictionSet> predictions, std::span<const MotifSet> ground_truth,
                              bool conventional_pr = false);

/// Fraction of images whose argmax motif is in the ground truth.
double max_accuracy(std::span<const PredictionSet> predictions, std::span<const MotifSet> ground_truth);

/// Fraction of images whose predicted set equals the ground truth exactly.
double exact_match_rate(std::span<const PredictionSet> predictions, std::span<const MotifSet> ground_truth);

/// Full report: both ground-truth modes, MA, exact match, tie count.
/// predictions and annotations must be aligned by image id.
MetricsReport evaluate(std::span<const PredictionSet> predictions, std::span<const AnnotationRecord> annotations,
                       const MetricOptions& options = {}, std::string slice_label = "all");

/// Report restricted to the predictions whose manifest tag matches slice.
MetricsReport slice_report(std::span<const PredictionSet> predictions, const DatasetManifest& manifest, Slice slice,
                           const MetricOptions& options = {});

/// One JSON document per report.
std::string report_to_json(const MetricsReport& report);

}  // namespace motif
