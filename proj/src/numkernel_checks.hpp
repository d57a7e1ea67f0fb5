#pragma once

#include <string>

#include "motif/numkernel.hpp"

namespace motif::detail {

inline std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

inline void check_matmul(ConstMatrixView a, ConstMatrixView b) {
  if (a.cols != b.rows)
    throw ShapeError("matmul: " + dims(a.rows, a.cols) + " times " + dims(b.rows, b.cols));
}

inline void check_matmul_bt(ConstMatrixView a, ConstMatrixView b) {
  if (a.cols != b.cols)
    throw ShapeError("matmul_bt: " + dims(a.rows, a.cols) + " times transpose of " + dims(b.rows, b.cols));
}

inline void check_matmul_at(ConstMatrixView a, ConstMatrixView b) {
  if (a.rows != b.rows)
    throw ShapeError("matmul_at: transpose of " + dims(a.rows, a.cols) + " times " + dims(b.rows, b.cols));
}

inline void check_bias(const DenseMatrix& m, std::span<const double> bias) {
  if (bias.size() != m.cols())
    throw ShapeError("add_row_vector: bias length " + std::to_string(bias.size()) + " for " +
                     std::to_string(m.cols()) + " columns");
}

inline void check_same_shape(const DenseMatrix& g, ConstMatrixView p) {
  if (g.rows() != p.rows || g.cols() != p.cols)
    throw ShapeError("relu_backward: gradient " + dims(g.rows(), g.cols()) + " vs pre-activation " +
                     dims(p.rows, p.cols));
}

inline void check_conv(const FeatureGrid& input, KernelBankView k, std::span<const double> bias) {
  if (k.size == 0) throw ShapeError("conv2d_valid: kernel size must be at least 1");
  if (k.in_channels != input.channels())
    throw ShapeError("conv2d_valid: kernel expects " + std::to_string(k.in_channels) + " channels, input has " +
                     std::to_string(input.channels()));
  if (k.size > input.height() || k.size > input.width())
    throw ShapeError("conv2d_valid: kernel " + std::to_string(k.size) + " larger than input " +
                     dims(input.height(), input.width()));
  if (k.weights.size() != k.out_channels * k.in_channels * k.size * k.size)
    throw ShapeError("conv2d_valid: kernel bank has wrong number of weights");
  if (!bias.empty() && bias.size() != k.out_channels)
    throw ShapeError("conv2d_valid: bias length does not match output channels");
}

inline void check_conv_backward_input(const FeatureGrid& g, KernelBankView k, std::size_t h, std::size_t w) {
  if (k.size == 0 || h < k.size || w < k.size || g.channels() != k.out_channels ||
      g.height() != h - k.size + 1 || g.width() != w - k.size + 1)
    throw ShapeError("conv2d_backward_input: gradient shape inconsistent with kernel bank and input size");
}

inline void check_conv_backward_kernels(std::span<const FeatureGrid> in, std::span<const FeatureGrid> g,
                                        std::size_t k) {
  if (in.empty() || in.size() != g.size())
    throw ShapeError("conv2d_backward_kernels: need equally many (non-zero) inputs and gradients");
  for (std::size_t s = 0; s < in.size(); ++s) {
    if (k == 0 || in[s].height() < k || in[s].width() < k || g[s].height() != in[s].height() - k + 1 ||
        g[s].width() != in[s].width() - k + 1 || in[s].channels() != in[0].channels() ||
        g[s].channels() != g[0].channels())
      throw ShapeError("conv2d_backward_kernels: sample " + std::to_string(s) + " has inconsistent shape");
  }
}

}  // namespace motif::detail
