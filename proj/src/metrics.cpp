#include "motif/metrics.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

#include "motif/errors.hpp"

namespace motif {

namespace {

std::size_t intersection_size(const MotifSet& a, const MotifSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

void check_aligned(std::span<const PredictionSet> p, std::span<const MotifSet> gt) {
  if (p.empty()) throw DataError("empty test set");
  if (p.size() != gt.size())
    throw DataError("predictions (" + std::to_string(p.size()) + ") and ground truth (" + std::to_string(gt.size()) +
                    ") are not aligned");
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (gt[i].empty()) throw DataError("empty ground-truth set for '" + p[i].image_id + "'");
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

PredictionSet make_prediction(std::string image_id, std::vector<double> probabilities, double threshold) {
  PredictionSet p;
  p.image_id = std::move(image_id);
  for (std::size_t j = 0; j < probabilities.size(); ++j) {
    if (probabilities[j] >= threshold) p.predicted.push_back(static_cast<MotifId>(j));
    if (j > 0) {
      if (probabilities[j] > probabilities[p.argmax]) {
        p.argmax = static_cast<MotifId>(j);
        p.argmax_tied = false;
      } else if (probabilities[j] == probabilities[p.argmax]) {
        p.argmax_tied = true;
      }
    }
  }
  p.probabilities = std::move(probabilities);
  return p;
}

MotifSet ground_truth(const AnnotationRecord& annotation, GroundTruthMode mode) {
  if (mode == GroundTruthMode::primary_only) return annotation.primary;
  MotifSet out;
  std::set_union(annotation.primary.begin(), annotation.primary.end(), annotation.secondary.begin(),
                 annotation.secondary.end(), std::back_inserter(out));
  return out;
}

std::string_view to_string(Slice slice) {
  switch (slice) {
    case Slice::all: return "all";
    case Slice::red_flag: return "red_flag";
    case Slice::canonical: return "canonical";
  }
  return "all";
}

MetricsReport example_metrics(std::span<const PredictionSet> predictions, std::span<const MotifSet> gt,
                              bool conventional_pr) {
  check_aligned(predictions, gt);
  MetricsReport r;
  r.n_images = predictions.size();
  double over_gt = 0.0;
  double over_out = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const MotifSet& out = predictions[i].predicted;
    const auto hits = static_cast<double>(intersection_size(out, gt[i]));
    over_gt += hits / static_cast<double>(gt[i].size());
    if (out.empty())
      ++r.empty_predictions;
    else
      over_out += hits / static_cast<double>(out.size());
  }
  const double n = static_cast<double>(predictions.size());
  r.precision = (conventional_pr ? over_out : over_gt) / n;
  r.recall = (conventional_pr ? over_gt : over_out) / n;
  r.f1 = harmonic(r.precision, r.recall);
  return r;
}

double max_accuracy(std::span<const PredictionSet> predictions, std::span<const MotifSet> gt) {
  check_aligned(predictions, gt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (std::binary_search(gt[i].begin(), gt[i].end(), predictions[i].argmax)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double exact_match_rate(std::span<const PredictionSet> predictions, std::span<const MotifSet> gt) {
  check_aligned(predictions, gt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i].predicted == gt[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

MetricsReport evaluate(std::span<const PredictionSet> predictions, std::span<const AnnotationRecord> annotations,
                       const MetricOptions& options, std::string slice_label) {
  if (predictions.size() != annotations.size())
    throw DataError("predictions and annotations are not aligned");
  std::vector<MotifSet> primary, with_sm;
  primary.reserve(annotations.size());
  with_sm.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (predictions[i].image_id != annotations[i].image_id)
      throw DataError("prediction '" + predictions[i].image_id + "' aligned with annotation '" +
                      annotations[i].image_id + "'");
    primary.push_back(ground_truth(annotations[i], GroundTruthMode::primary_only));
    with_sm.push_back(ground_truth(annotations[i], GroundTruthMode::with_secondary));
  }
  MetricsReport r = example_metrics(predictions, primary, options.conventional_pr);
  r.slice = std::move(slice_label);
  r.f1_with_sm = example_metrics(predictions, with_sm, options.conventional_pr).f1;
  r.max_accuracy = max_accuracy(predictions, primary);
  r.exact_match = exact_match_rate(predictions, primary);
  r.argmax_ties = static_cast<std::size_t>(
      std::count_if(predictions.begin(), predictions.end(), [](const auto& p) { return p.argmax_tied; }));
  return r;
}

MetricsReport slice_report(std::span<const PredictionSet> predictions, const DatasetManifest& manifest, Slice slice,
                           const MetricOptions& options) {
  std::unordered_map<std::string, const AnnotationRecord*> by_id;
  for (const auto& rec : manifest.records) by_id.emplace(rec.image_id, &rec);

  std::vector<PredictionSet> selected;
  std::vector<AnnotationRecord> annotations;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.image_id);
    if (it == by_id.end()) throw DataError("prediction for unknown image id '" + p.image_id + "'");
    const Tag tag = it->second->tag;
    const bool keep = slice == Slice::all || (slice == Slice::red_flag && tag == Tag::red_flag) ||
                      (slice == Slice::canonical && tag == Tag::canonical);
    if (!keep) continue;
    selected.push_back(p);
    annotations.push_back(*it->second);
  }
  if (selected.empty()) {
    MetricsReport empty;
    empty.slice = std::string(to_string(slice));
    empty.empty = true;
    return empty;
  }
  return evaluate(selected, annotations, options, std::string(to_string(slice)));
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["slice"] = r.slice;
  j["n_images"] = r.n_images;
  j["empty"] = r.empty;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["f1_with_sm"] = r.f1_with_sm;
  j["max_accuracy"] = r.max_accuracy;
  j["exact_match"] = r.exact_match;
  j["argmax_ties"] = r.argmax_ties;
  j["empty_predictions"] = r.empty_predictions;
  return j.dump(2);
}

}  // namespace motif
