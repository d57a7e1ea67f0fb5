// OpenMP kernels. Work is split across output elements only; each element
// is accumulated by one thread in the same order as the reference loops.

#include "motif/numkernel.hpp"
#include "numkernel_checks.hpp"

#include <cstdint>

namespace motif::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;
}  // namespace

DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b) {
  detail::check_matmul(a, b);
  DenseMatrix out(a.rows, b.cols);
  const auto m = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.rows * a.cols * b.cols > kParallelWork)
  for (std::int64_t ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto dst = out.row(i);
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double s = a(i, p);
      const auto src = b.row(p);
      for (std::size_t j = 0; j < b.cols; ++j) dst[j] += s * src[j];
    }
  }
  return out;
}

DenseMatrix matmul_bt(ConstMatrixView a, ConstMatrixView b) {
  detail::check_matmul_bt(a, b);
  DenseMatrix out(a.rows, b.rows);
  const auto m = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.rows * a.cols * b.rows > kParallelWork)
  for (std::int64_t ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto lhs = a.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const auto rhs = b.row(j);
      double sum = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) sum += lhs[p] * rhs[p];
      out(i, j) = sum;
    }
  }
  return out;
}

DenseMatrix matmul_at(ConstMatrixView a, ConstMatrixView b) {
  detail::check_matmul_at(a, b);
  DenseMatrix out(a.cols, b.cols);
  const auto m = static_cast<std::int64_t>(a.cols);
#pragma omp parallel for schedule(static) if (a.rows * a.cols * b.cols > kParallelWork)
  for (std::int64_t ii = 0; ii < m; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto dst = out.row(i);
    for (std::size_t p = 0; p < a.rows; ++p) {
      const double s = a(p, i);
      const auto src = b.row(p);
      for (std::size_t j = 0; j < b.cols; ++j) dst[j] += s * src[j];
    }
  }
  return out;
}

void add_row_vector(DenseMatrix& m, std::span<const double> bias) {
  detail::check_bias(m, bias);
  const auto rows = static_cast<std::int64_t>(m.rows());
#pragma omp parallel for schedule(static) if (m.size() > kParallelWork)
  for (std::int64_t i = 0; i < rows; ++i) {
    auto r = m.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

std::vector<double> column_sums(ConstMatrixView m) {
  std::vector<double> out(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) out[j] += r[j];
  }
  return out;
}

DenseMatrix relu(ConstMatrixView x) {
  DenseMatrix out(x.rows, x.cols);
  auto dst = out.values();
  const auto n = static_cast<std::int64_t>(x.data.size());
#pragma omp parallel for schedule(static) if (x.data.size() > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) dst[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return out;
}

void relu_backward(DenseMatrix& grad, ConstMatrixView pre_activation) {
  detail::check_same_shape(grad, pre_activation);
  auto g = grad.values();
  const auto n = static_cast<std::int64_t>(g.size());
#pragma omp parallel for schedule(static) if (g.size() > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i)
    if (!(pre_activation.data[i] > 0.0)) g[i] = 0.0;
}

FeatureGrid conv2d_valid(const FeatureGrid& input, KernelBankView k, std::span<const double> bias) {
  detail::check_conv(input, k, bias);
  const std::size_t oh = input.height() - k.size + 1;
  const std::size_t ow = input.width() - k.size + 1;
  FeatureGrid out(k.out_channels, oh, ow);
  const auto n_out = static_cast<std::int64_t>(k.out_channels);
  const std::size_t work = k.out_channels * oh * ow * k.in_channels * k.size * k.size;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t oo = 0; oo < n_out; ++oo) {
    const auto o = static_cast<std::size_t>(oo);
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k.in_channels; ++i)
          for (std::size_t ky = 0; ky < k.size; ++ky) {
            const double* in_row = &input.values()[(i * input.height() + y + ky) * input.width() + x];
            const double* k_row = &k.weights[((o * k.in_channels + i) * k.size + ky) * k.size];
            for (std::size_t kx = 0; kx < k.size; ++kx) sum += in_row[kx] * k_row[kx];
          }
        out.at(o, y, x) = bias.empty() ? sum : sum + bias[o];
      }
  }
  return out;
}

FeatureGrid conv2d_backward_input(const FeatureGrid& g, KernelBankView k, std::size_t h, std::size_t w) {
  detail::check_conv_backward_input(g, k, h, w);
  FeatureGrid out(k.in_channels, h, w);
  const auto n_in = static_cast<std::int64_t>(k.in_channels);
  const std::size_t work = k.in_channels * h * w * k.out_channels * k.size * k.size;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t ii = 0; ii < n_in; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double sum = 0.0;
        for (std::size_t o = 0; o < k.out_channels; ++o)
          for (std::size_t ky = 0; ky < k.size; ++ky) {
            if (y < ky || y - ky >= g.height()) continue;
            for (std::size_t kx = 0; kx < k.size; ++kx) {
              if (x < kx || x - kx >= g.width()) continue;
              sum += g.at(o, y - ky, x - kx) * k.at(o, i, ky, kx);
            }
          }
        out.at(i, y, x) = sum;
      }
  }
  return out;
}

std::vector<double> conv2d_backward_kernels(std::span<const FeatureGrid> inputs,
                                            std::span<const FeatureGrid> grads, std::size_t ks) {
  detail::check_conv_backward_kernels(inputs, grads, ks);
  const std::size_t n_out = grads[0].channels();
  const std::size_t n_in = inputs[0].channels();
  std::vector<double> out(n_out * n_in * ks * ks, 0.0);
  const auto pairs = static_cast<std::int64_t>(n_out * n_in);
  const std::size_t work = out.size() * inputs.size() * grads[0].height() * grads[0].width();
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t pp = 0; pp < pairs; ++pp) {
    const auto o = static_cast<std::size_t>(pp) / n_in;
    const auto i = static_cast<std::size_t>(pp) % n_in;
    for (std::size_t ky = 0; ky < ks; ++ky)
      for (std::size_t kx = 0; kx < ks; ++kx) {
        double sum = 0.0;
        for (std::size_t s = 0; s < inputs.size(); ++s) {
          const FeatureGrid& g = grads[s];
          const FeatureGrid& in = inputs[s];
          for (std::size_t y = 0; y < g.height(); ++y) {
            const double* g_row = &g.values()[(o * g.height() + y) * g.width()];
            const double* in_row = &in.values()[(i * in.height() + y + ky) * in.width() + kx];
            for (std::size_t x = 0; x < g.width(); ++x) sum += g_row[x] * in_row[x];
          }
        }
        out[((o * n_in + i) * ks + ky) * ks + kx] = sum;
      }
  }
  return out;
}

}  // namespace motif::kernels
