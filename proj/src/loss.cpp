#include "motif/loss.hpp"

#include <cmath>

#include "motif/errors.hpp"

namespace motif {

void LossConfig::validate() const {
  if (!(smt >= 0.0 && smt <= 1.0)) throw ConfigError("smt out of range: " + std::to_string(smt) + " not in [0, 1]");
  if (!(rfw > 0.0 && rfw <= 1.0)) throw ConfigError("rfw out of range: " + std::to_string(rfw) + " not in (0, 1]");
  if (!(cw >= 1.0) || !std::isfinite(cw)) throw ConfigError("cw out of range: " + std::to_string(cw) + " is below 1");
}

TargetVector build_targets(const AnnotationRecord& annotation, const LossConfig& config, std::size_t n_classes) {
  TargetVector t(n_classes, 0.0);
  for (MotifId m : annotation.secondary) t.at(m) = config.smt;
  for (MotifId m : annotation.primary) t.at(m) = 1.0;
  return t;
}

double image_weight(const AnnotationRecord& annotation, const LossConfig& config) {
  // One tag per image, shared by all its Primary Motifs, so the highest
  // tier across primaries is the image's own tier.
  switch (annotation.tag) {
    case Tag::red_flag: return config.rfw;
    case Tag::standard: return 1.0;
    case Tag::canonical: return config.cw;
  }
  return 1.0;
}

double bce_per_class(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

double image_loss(std::span<const double> logits, const AnnotationRecord& annotation, const LossConfig& config) {
  const TargetVector t = build_targets(annotation, config, logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) sum += bce_per_class(logits[j], t[j]);
  return image_weight(annotation, config) * (sum / static_cast<double>(logits.size()));
}

LossAndGrad batch_loss_and_grad(const DenseMatrix& logits, std::span<const TargetVector> targets,
                                std::span<const double> weights) {
  const std::size_t batch = logits.rows();
  const std::size_t n = logits.cols();
  if (batch == 0) throw ShapeError("batch_loss_and_grad: empty batch");
  if (targets.size() != batch || weights.size() != batch)
    throw ShapeError("batch_loss_and_grad: targets/weights do not match batch size");

  LossAndGrad out{0.0, DenseMatrix(batch, n)};
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(batch));
  for (std::size_t b = 0; b < batch; ++b) {
    if (targets[b].size() != n) throw ShapeError("batch_loss_and_grad: target length mismatch");
    const auto x = logits.row(b);
    auto g = out.grad.row(b);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum += bce_per_class(x[j], targets[b][j]);
      g[j] = weights[b] * (sigmoid(x[j]) - targets[b][j]) * scale;
    }
    out.loss += weights[b] * (sum / static_cast<double>(n));
  }
  out.loss /= static_cast<double>(batch);
  return out;
}

LossAndGrad batch_loss_and_grad(const DenseMatrix& logits, std::span<const AnnotationRecord> annotations,
                                const LossConfig& config) {
  std::vector<TargetVector> targets;
  std::vector<double> weights;
  targets.reserve(annotations.size());
  for (const auto& a : annotations) {
    targets.push_back(build_targets(a, config, logits.cols()));
    weights.push_back(image_weight(a, config));
  }
  return batch_loss_and_grad(logits, targets, weights);
}

}  // namespace motif
