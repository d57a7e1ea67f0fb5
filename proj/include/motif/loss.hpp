#pragma once

// Tiered-annotation weighted binary cross-entropy.
//
// Targets: 1 for Primary Motifs, smt for Secondary Motifs, 0 otherwise.
// Per image: weight * mean over classes of the per-class BCE, where the
// weight is rfw, 1 or cw for Red Flag, standard and Canonical images.
// A batch loss is the plain mean of the per-image losses.

#include <span>
#include <vector>

#include "motif/data.hpp"
#include "motif/numkernel.hpp"

namespace motif {

struct LossConfig {
  double smt = 0.5;
  double rfw = 0.5;
  double cw = 2.0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

using TargetVector = std::vector<double>;

TargetVector build_targets(const AnnotationRecord& annotation, const LossConfig& config, std::size_t n_classes);

/// rfw, 1 or cw according to the record's representativeness tier.
double image_weight(const AnnotationRecord& annotation, const LossConfig& config);

/// max(x,0) - x*t + log(1 + exp(-|x|)), the stable form of
/// -[t log sigma(x) + (1-t) log(1 - sigma(x))].
double bce_per_class(double logit, double target);

double image_loss(std::span<const double> logits, const AnnotationRecord& annotation, const LossConfig& config);

struct LossAndGrad {
  double loss = 0.0;
  /// d(loss)/d(logit), same shape as the logit batch.
  DenseMatrix grad;
};

/// Mean weighted loss over the batch and its gradient w.r.t. every logit:
/// w_b * (sigma(x_bj) - t_bj) / (N * B).
LossAndGrad batch_loss_and_grad(const DenseMatrix& logits, std::span<const TargetVector> targets,
                                std::span<const double> weights);
LossAndGrad batch_loss_and_grad(const DenseMatrix& logits, std::span<const AnnotationRecord> annotations,
                                const LossConfig& config);

}  // namespace motif
