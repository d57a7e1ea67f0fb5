#pragma once

// Dense kernels shared by the model, loss, and clustering code.
//
// Every kernel exists twice: a plain serial version in
// motif::kernels::reference and an OpenMP version in motif::kernels. Both
// accumulate each output element in the same fixed order (ascending inner
// index, starting from 0.0), so their results are bit-identical for any
// thread count. The reference versions are kept for tests and benchmarks.

#include <cstddef>
#include <span>
#include <vector>

#include "motif/errors.hpp"

namespace motif {

/// Non-owning row-major view of a matrix.
struct ConstMatrixView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

/// Owning row-major matrix of 64-bit floats.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Builds a matrix from nested rows; all rows must have equal length.
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  ConstMatrixView view() const { return {rows_, cols_, data_}; }
  operator ConstMatrixView() const { return view(); }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Channel-major 3-D feature map (channels x height x width).
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  FeatureGrid(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * height_ + y) * width_ + x]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const FeatureGrid&) const = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// Bank of square convolution kernels laid out (out, in, ky, kx).
struct KernelBankView {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t size = 0;
  std::span<const double> weights;

  double at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * size + ky) * size + kx];
  }
};

/// Numerically stable logistic function; never exponentiates a positive argument.
double sigmoid(double x);

/// log(sigmoid(x)) without forming sigmoid(x).
double log_sigmoid(double x);

namespace kernels {

DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b);
/// a * b^T, with a: m x k and b: n x k.
DenseMatrix matmul_bt(ConstMatrixView a, ConstMatrixView b);
/// a^T * b, with a: k x m and b: k x n.
DenseMatrix matmul_at(ConstMatrixView a, ConstMatrixView b);

void add_row_vector(DenseMatrix& m, std::span<const double> bias);
std::vector<double> column_sums(ConstMatrixView m);

DenseMatrix relu(ConstMatrixView x);
/// Zeroes grad wherever the matching pre-activation is not positive.
void relu_backward(DenseMatrix& grad, ConstMatrixView pre_activation);

/// Valid (unpadded, stride 1) cross-correlation; bias may be empty.
FeatureGrid conv2d_valid(const FeatureGrid& input, KernelBankView kernels, std::span<const double> bias = {});
/// Gradient of conv2d_valid with respect to its input.
FeatureGrid conv2d_backward_input(const FeatureGrid& grad_output, KernelBankView kernels,
                                  std::size_t input_height, std::size_t input_width);
/// Gradient with respect to the kernel bank, summed over a batch in sample order.
std::vector<double> conv2d_backward_kernels(std::span<const FeatureGrid> inputs,
                                            std::span<const FeatureGrid> grad_outputs,
                                            std::size_t kernel_size);

namespace reference {

DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b);
DenseMatrix matmul_bt(ConstMatrixView a, ConstMatrixView b);
DenseMatrix matmul_at(ConstMatrixView a, ConstMatrixView b);
void add_row_vector(DenseMatrix& m, std::span<const double> bias);
std::vector<double> column_sums(ConstMatrixView m);
DenseMatrix relu(ConstMatrixView x);
void relu_backward(DenseMatrix& grad, ConstMatrixView pre_activation);
FeatureGrid conv2d_valid(const FeatureGrid& input, KernelBankView kernels, std::span<const double> bias = {});
FeatureGrid conv2d_backward_input(const FeatureGrid& grad_output, KernelBankView kernels,
                                  std::size_t input_height, std::size_t input_width);
std::vector<double> conv2d_backward_kernels(std::span<const FeatureGrid> inputs,
                                            std::span<const FeatureGrid> grad_outputs,
                                            std::size_t kernel_size);

}  // namespace reference
}  // namespace kernels
}  // namespace motif
