#include "motif/optim.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "motif/errors.hpp"

namespace motif {

AdamState AdamState::for_size(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params, " + std::to_string(grads.size()) +
                     " grads, moment buffers of " + std::to_string(state.m.size()));
  const std::size_t t = state.step + 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double m_correction = 1.0 - std::pow(b1, static_cast<double>(t));
  const double v_correction = 1.0 - std::pow(b2, static_cast<double>(t));
  double* m = state.m.data();
  double* v = state.v.data();
  const auto n = static_cast<std::int64_t>(params.size());
#pragma omp parallel for schedule(static) if (params.size() > (1 << 16))
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double m_hat = m[i] / m_correction;
    const double v_hat = v[i] / v_correction;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  state.step = t;
}

}  // namespace motif
