#include "motif/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "motif/config.hpp"
#include "motif/errors.hpp"
#include "motif/optim.hpp"
#include "motif/random.hpp"

namespace motif {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a positive finite number");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (!(metrics.threshold >= 0.0 && metrics.threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  loss.validate();
  head.validate();
}

const MetricsReport& RunRecord::final_report(Slice slice) const {
  for (const auto& r : final_reports)
    if (r.slice == to_string(slice)) return r;
  throw DataError("run has no final '" + std::string(to_string(slice)) + "' report (empty test split?)");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

void check_head_matches(const HeadConfig& head, const DatasetManifest& manifest, const FeatureSource& features) {
  if (head.output_dim != manifest.n_classes())
    throw DataError("head output_dim " + std::to_string(head.output_dim) + " does not match the manifest's " +
                    std::to_string(manifest.n_classes()) + " motifs");
  features.require_dim(head.input_dim);
}

}  // namespace

RunRecord train(const DatasetManifest& manifest, const FeatureSource& features, const TrainConfig& config,
                const std::optional<std::filesystem::path>& run_dir) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  manifest.validate();
  check_head_matches(config.head, manifest, features);
  if (!manifest.has_split()) throw DataError("manifest has no train/test split assigned");

  std::vector<const AnnotationRecord*> train_records;
  for (const auto& r : manifest.records)
    if (r.split == SplitRole::train) train_records.push_back(&r);
  if (train_records.empty()) throw DataError("train split is empty");
  const std::vector<std::string> test_ids = manifest.ids_in(SplitRole::test);
  std::vector<std::string> train_ids;
  for (const auto* r : train_records) train_ids.push_back(r->image_id);
  features.require_ids(manifest.all_ids());

  const DenseMatrix x_train = features.gather(train_ids);
  std::vector<TargetVector> targets;
  std::vector<double> weights;
  for (const auto* r : train_records) {
    targets.push_back(build_targets(*r, config.loss, manifest.n_classes()));
    weights.push_back(image_weight(*r, config.loss));
  }

  RunRecord record;
  record.config = config;
  record.params = init_params(config.head, config.seed);
  AdamState adam = AdamState::for_size(record.params.values.size(), config.lr);

  const std::size_t n = train_records.size();
  const std::size_t dim = x_train.cols();
  std::vector<std::size_t> order(n);
  const std::uint64_t shuffle_seed = mix_seed(config.seed, salt::shuffle);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(shuffle_seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, n - start);
      DenseMatrix batch(b, dim);
      std::vector<TargetVector> batch_targets(b);
      std::vector<double> batch_weights(b);
      for (std::size_t k = 0; k < b; ++k) {
        const std::size_t idx = order[start + k];
        const auto src = x_train.row(idx);
        std::copy(src.begin(), src.end(), batch.row(k).begin());
        batch_targets[k] = targets[idx];
        batch_weights[k] = weights[idx];
      }
      const ForwardTrace trace = forward_batch(record.params, batch);
      const LossAndGrad lg = batch_loss_and_grad(trace.logits, batch_targets, batch_weights);
      if (!std::isfinite(lg.loss))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1));
      const ParamGradients grads = backward(record.params, trace, lg.grad);
      adam_step(record.params.values, grads.values, adam);
      epoch_sum += lg.loss * static_cast<double>(b);
    }
    record.epoch_losses.push_back(epoch_sum / static_cast<double>(n));

    if (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0 && !test_ids.empty()) {
      const auto preds = predict(record.params, features, test_ids, config.metrics.threshold);
      record.evaluations.push_back({epoch + 1, slice_report(preds, manifest, Slice::all, config.metrics)});
    }
  }

  if (!test_ids.empty()) {
    const auto preds = predict(record.params, features, test_ids, config.metrics.threshold);
    record.final_reports = evaluate_slices(preds, manifest, config.metrics);
  }

  if (run_dir) {
    std::filesystem::create_directories(*run_dir);
    write_text(*run_dir / "config.json", to_json(config).dump(2) + "\n");
    std::string loss_log = "epoch\tloss\n";
    for (std::size_t e = 0; e < record.epoch_losses.size(); ++e)
      loss_log += std::to_string(e + 1) + "\t" + fmt_double(record.epoch_losses[e]) + "\n";
    write_text(*run_dir / "loss.tsv", loss_log);
    record.checkpoint_path = *run_dir / "checkpoint.mhck";
    save_checkpoint(record.checkpoint_path, record.params);
    for (const auto& rep : record.final_reports)
      write_text(*run_dir / ("metrics_" + rep.slice + ".json"), report_to_json(rep) + "\n");
    if (!record.final_reports.empty()) {
      std::ofstream table(*run_dir / "metrics.dat", std::ios::trunc);
      write_metrics_table(table, record.final_reports);
    }
    if (!record.evaluations.empty()) {
      std::string log = "epoch\tprecision\trecall\tf1\tf1_with_sm\tmax_accuracy\n";
      for (const auto& ev : record.evaluations)
        log += std::to_string(ev.epoch) + "\t" + fmt_double(ev.report.precision) + "\t" +
               fmt_double(ev.report.recall) + "\t" + fmt_double(ev.report.f1) + "\t" +
               fmt_double(ev.report.f1_with_sm) + "\t" + fmt_double(ev.report.max_accuracy) + "\n";
      write_text(*run_dir / "eval.tsv", log);
    }
  }
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

std::vector<PredictionSet> predict(const HeadParams& params, const FeatureSource& features,
                                   std::span<const std::string> ids, double threshold) {
  features.require_dim(params.config.input_dim);
  features.require_ids(ids);
  constexpr std::size_t kChunk = 256;
  std::vector<PredictionSet> out;
  out.reserve(ids.size());
  for (std::size_t start = 0; start < ids.size(); start += kChunk) {
    const auto chunk = ids.subspan(start, std::min(kChunk, ids.size() - start));
    const ForwardTrace trace = forward_batch(params, features.gather(chunk));
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const auto logits = trace.logits.row(k);
      std::vector<double> probs(logits.size());
      for (std::size_t j = 0; j < logits.size(); ++j) probs[j] = sigmoid(logits[j]);
      out.push_back(make_prediction(chunk[k], std::move(probs), threshold));
    }
  }
  return out;
}

std::vector<PredictionSet> predict(const std::filesystem::path& checkpoint, const FeatureSource& features,
                                   std::span<const std::string> ids, double threshold) {
  return predict(load_checkpoint(checkpoint), features, ids, threshold);
}

std::vector<MetricsReport> evaluate_slices(std::span<const PredictionSet> predictions,
                                           const DatasetManifest& manifest, const MetricOptions& options) {
  return {slice_report(predictions, manifest, Slice::all, options),
          slice_report(predictions, manifest, Slice::red_flag, options),
          slice_report(predictions, manifest, Slice::canonical, options)};
}

void write_predictions(std::ostream& out, std::span<const PredictionSet> predictions,
                       std::span<const std::string> motif_names) {
  auto label = [&](MotifId m) { return m < motif_names.size() ? motif_names[m] : std::to_string(m); };
  const std::size_t n = predictions.empty() ? 0 : predictions.front().probabilities.size();
  out << "image_id";
  for (std::size_t j = 0; j < n; ++j) out << "\tp_" << label(static_cast<MotifId>(j));
  out << "\tpredicted\targmax\n";
  char buf[32];
  for (const auto& p : predictions) {
    out << p.image_id;
    for (double v : p.probabilities) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << '\t' << buf;
    }
    out << '\t';
    for (std::size_t k = 0; k < p.predicted.size(); ++k) out << (k ? "," : "") << label(p.predicted[k]);
    out << '\t' << label(p.argmax) << '\n';
  }
}

void write_metrics_table(std::ostream& out, std::span<const MetricsReport> reports) {
  out << "Slice Images Precision Recall F1 F1SM MA ExactMatch\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s %zu %.6f %.6f %.6f %.6f %.6f %.6f\n", r.slice.c_str(), r.n_images,
                  r.precision, r.recall, r.f1, r.f1_with_sm, r.max_accuracy, r.exact_match);
    out << buf;
  }
}

}  // namespace motif
