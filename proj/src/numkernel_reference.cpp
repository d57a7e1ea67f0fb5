// Serial reference kernels. Straight loops, no threading.

#include "motif/numkernel.hpp"
#include "numkernel_checks.hpp"

namespace motif::kernels::reference {

DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b) {
  detail::check_matmul(a, b);
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) sum += a(i, p) * b(p, j);
      out(i, j) = sum;
    }
  return out;
}

DenseMatrix matmul_bt(ConstMatrixView a, ConstMatrixView b) {
  detail::check_matmul_bt(a, b);
  DenseMatrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) sum += a(i, p) * b(j, p);
      out(i, j) = sum;
    }
  return out;
}

DenseMatrix matmul_at(ConstMatrixView a, ConstMatrixView b) {
  detail::check_matmul_at(a, b);
  DenseMatrix out(a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < a.rows; ++p) sum += a(p, i) * b(p, j);
      out(i, j) = sum;
    }
  return out;
}

void add_row_vector(DenseMatrix& m, std::span<const double> bias) {
  detail::check_bias(m, bias);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += bias[j];
}

std::vector<double> column_sums(ConstMatrixView m) {
  std::vector<double> out(m.cols, 0.0);
  for (std::size_t j = 0; j < m.cols; ++j)
    for (std::size_t i = 0; i < m.rows; ++i) out[j] += m(i, j);
  return out;
}

DenseMatrix relu(ConstMatrixView x) {
  DenseMatrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i) out.values()[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return out;
}

void relu_backward(DenseMatrix& grad, ConstMatrixView pre_activation) {
  detail::check_same_shape(grad, pre_activation);
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(pre_activation.data[i] > 0.0)) grad.values()[i] = 0.0;
}

FeatureGrid conv2d_valid(const FeatureGrid& input, KernelBankView k, std::span<const double> bias) {
  detail::check_conv(input, k, bias);
  const std::size_t oh = input.height() - k.size + 1;
  const std::size_t ow = input.width() - k.size + 1;
  FeatureGrid out(k.out_channels, oh, ow);
  for (std::size_t o = 0; o < k.out_channels; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k.in_channels; ++i)
          for (std::size_t ky = 0; ky < k.size; ++ky)
            for (std::size_t kx = 0; kx < k.size; ++kx) sum += input.at(i, y + ky, x + kx) * k.at(o, i, ky, kx);
        out.at(o, y, x) = bias.empty() ? sum : sum + bias[o];
      }
  return out;
}

FeatureGrid conv2d_backward_input(const FeatureGrid& g, KernelBankView k, std::size_t h, std::size_t w) {
  detail::check_conv_backward_input(g, k, h, w);
  FeatureGrid out(k.in_channels, h, w);
  for (std::size_t i = 0; i < k.in_channels; ++i)
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
  return out;
}

std::vector<double> conv2d_backward_kernels(std::span<const FeatureGrid> inputs,
                                            std::span<const FeatureGrid> grads, std::size_t ks) {
  detail::check_conv_backward_kernels(inputs, grads, ks);
  const std::size_t n_out = grads[0].channels();
  const std::size_t n_in = inputs[0].channels();
  std::vector<double> out(n_out * n_in * ks * ks, 0.0);
  for (std::size_t o = 0; o < n_out; ++o)
    for (std::size_t i = 0; i < n_in; ++i)
      for (std::size_t ky = 0; ky < ks; ++ky)
        for (std::size_t kx = 0; kx < ks; ++kx) {
          double sum = 0.0;
          for (std::size_t s = 0; s < inputs.size(); ++s)
            for (std::size_t y = 0; y < grads[s].height(); ++y)
              for (std::size_t x = 0; x < grads[s].width(); ++x)
                sum += grads[s].at(o, y, x) * inputs[s].at(i, y + ky, x + kx);
          out[((o * n_in + i) * ks + ky) * ks + kx] = sum;
        }
  return out;
}

}  // namespace motif::kernels::reference
