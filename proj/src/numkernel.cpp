#include "motif/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace motif {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ShapeError("DenseMatrix: " + std::to_string(data_.size()) + " values for " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("DenseMatrix::from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return DenseMatrix(rows.size(), cols, std::move(data));
}

FeatureGrid::FeatureGrid(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}

FeatureGrid::FeatureGrid(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != channels_ * height_ * width_)
    throw ShapeError("FeatureGrid: " + std::to_string(data_.size()) + " values for " + std::to_string(channels_) +
                     "x" + std::to_string(height_) + "x" + std::to_string(width_));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  // log sigma(x) = min(x, 0) - log(1 + exp(-|x|))
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

}  // namespace motif
