#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace motif {

/// Adam without weight decay. Moment buffers are flat, matching the
/// flat parameter vector of a head.
struct AdamState {
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zeroed moments for n parameters.
  static AdamState for_size(std::size_t n, double lr = 0.001);
};

/// One Adam update of params in place; state.step counts completed steps.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace motif
