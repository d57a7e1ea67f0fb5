#pragma once

// Classification heads over frozen embeddings.
//
// An MLP head is a stack of affine layers with ReLU between them. A conv
// head reads its input as a channel-major grid and runs
// conv -> ReLU -> conv -> ReLU -> flatten -> MLP. Heads output logits; the
// sigmoid belongs to the loss and the metrics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motif/numkernel.hpp"

namespace motif {

enum class HeadKind { mlp, conv };

std::string_view to_string(HeadKind kind);
HeadKind parse_head_kind(std::string_view text);

struct GridShape {
  std::size_t channels = 256;
  std::size_t height = 13;
  std::size_t width = 20;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const GridShape&) const = default;
};

struct HeadConfig {
  HeadKind kind = HeadKind::mlp;
  std::size_t input_dim = 1024;
  std::vector<std::size_t> hidden_dims{256};
  std::size_t output_dim = 20;
  // Conv head only.
  std::size_t conv_kernel = 3;
  std::array<std::size_t, 2> conv_channels{64, 32};
  GridShape grid{};
  /// L2-normalize each input vector before the first layer.
  bool normalize_input = false;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  bool operator==(const HeadConfig&) const = default;
};

struct ConvLayerShape {
  std::size_t in_channels, out_channels, kernel;
  std::size_t in_height, in_width, out_height, out_width;
  std::size_t weight_offset, bias_offset;
};

struct LinearLayerShape {
  std::size_t in, out;
  std::size_t weight_offset, bias_offset;
};

/// Where each layer's parameters live in the flat parameter vector.
/// Canonical order: conv layers (kernels then bias), then linear layers
/// (row-major out x in weights then bias), first layer first.
struct ParamLayout {
  std::vector<ConvLayerShape> convs;
  std::vector<LinearLayerShape> linears;
  std::size_t total = 0;
};

ParamLayout make_layout(const HeadConfig& config);
std::size_t parameter_count(const HeadConfig& config);

struct HeadParams {
  HeadConfig config;
  ParamLayout layout;
  std::vector<double> values;

  /// All-zero parameters for config.
  static HeadParams zeros(const HeadConfig& config);

  ConstMatrixView linear_weight(std::size_t layer) const;
  std::span<const double> linear_bias(std::size_t layer) const;
  KernelBankView conv_kernels(std::size_t layer) const;
  std::span<const double> conv_bias(std::size_t layer) const;
};

/// Flat gradient vector in the same layout as HeadParams::values.
struct ParamGradients {
  std::vector<double> values;
};

/// Intermediates kept by a batched forward pass for backprop.
struct ForwardTrace {
  HeadKind kind = HeadKind::mlp;
  std::size_t batch = 0;
  // Conv head: per layer, per sample.
  std::vector<std::vector<FeatureGrid>> conv_inputs;
  std::vector<std::vector<FeatureGrid>> conv_pre;
  // Linear stack: input and pre-activation of every layer.
  std::vector<DenseMatrix> linear_inputs;
  std::vector<DenseMatrix> linear_pre;
  /// batch x output_dim.
  DenseMatrix logits;
};

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
HeadParams init_params(const HeadConfig& config, std::uint64_t seed);

/// Batched forward for either head kind; one input vector per row.
ForwardTrace forward_batch(const HeadParams& params, const DenseMatrix& inputs);
/// Single-sample MLP forward; trace.logits has one row.
ForwardTrace forward(const HeadParams& params, std::span<const double> features);
/// Single-sample conv forward.
ForwardTrace forward_conv(const HeadParams& params, const FeatureGrid& grid);

/// Gradients of sum_{b,j} logit_grad(b,j) * logits(b,j) with respect to
/// every parameter. Batch sums run in sample order.
ParamGradients backward(const HeadParams& params, const ForwardTrace& trace, const DenseMatrix& logit_grad);

// Checkpoint: "MHCK" | version u32 | config block | param count u64 | f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const HeadParams& params);
HeadParams load_checkpoint(const std::filesystem::path& path);

}  // namespace motif
