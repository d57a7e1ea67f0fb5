#include "motif/model.hpp"

#include <cmath>
#include <random>

#include "motif/errors.hpp"
#include "motif/random.hpp"

namespace motif {

std::string_view to_string(HeadKind kind) { return kind == HeadKind::mlp ? "mlp" : "conv"; }

HeadKind parse_head_kind(std::string_view text) {
  if (text == "mlp") return HeadKind::mlp;
  if (text == "conv") return HeadKind::conv;
  throw ConfigError("unknown head kind '" + std::string(text) + "' (expected mlp or conv)");
}

void HeadConfig::validate() const {
  if (output_dim < 1) throw ConfigError("head output_dim must be at least 1");
  if (hidden_dims.size() > 3) throw ConfigError("head supports at most 3 hidden layers");
  for (std::size_t h : hidden_dims)
    if (h < 1) throw ConfigError("hidden layer sizes must be at least 1");
  if (kind == HeadKind::mlp) {
    if (input_dim < 1) throw ConfigError("head input_dim must be at least 1");
    return;
  }
  if (grid.channels < 1 || grid.height < 1 || grid.width < 1) throw ConfigError("conv grid dimensions must be >= 1");
  if (input_dim != grid.size())
    throw ConfigError("conv head input_dim " + std::to_string(input_dim) + " does not match grid size " +
                      std::to_string(grid.size()));
  if (conv_kernel < 1) throw ConfigError("conv_kernel must be at least 1");
  if (conv_channels[0] < 1 || conv_channels[1] < 1) throw ConfigError("conv channel counts must be at least 1");
  const std::size_t shrink = 2 * (conv_kernel - 1);
  if (grid.height <= shrink || grid.width <= shrink)
    throw ConfigError("conv_kernel " + std::to_string(conv_kernel) + " too large for a " +
                      std::to_string(grid.height) + "x" + std::to_string(grid.width) + " grid after the first layer");
}

ParamLayout make_layout(const HeadConfig& config) {
  config.validate();
  ParamLayout layout;
  std::size_t offset = 0;
  std::size_t flat = config.input_dim;
  if (config.kind == HeadKind::conv) {
    std::size_t ch = config.grid.channels, h = config.grid.height, w = config.grid.width;
    for (std::size_t out_ch : config.conv_channels) {
      ConvLayerShape s{ch, out_ch, config.conv_kernel, h, w, h - config.conv_kernel + 1, w - config.conv_kernel + 1,
                       0, 0};
      s.weight_offset = offset;
      offset += out_ch * ch * config.conv_kernel * config.conv_kernel;
      s.bias_offset = offset;
      offset += out_ch;
      layout.convs.push_back(s);
      ch = out_ch;
      h = s.out_height;
      w = s.out_width;
    }
    flat = ch * h * w;
  }
  std::vector<std::size_t> dims{flat};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(config.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LinearLayerShape s{dims[l], dims[l + 1], offset, 0};
    offset += dims[l] * dims[l + 1];
    s.bias_offset = offset;
    offset += dims[l + 1];
    layout.linears.push_back(s);
  }
  layout.total = offset;
  return layout;
}

std::size_t parameter_count(const HeadConfig& config) { return make_layout(config).total; }

HeadParams HeadParams::zeros(const HeadConfig& config) {
  HeadParams p{config, make_layout(config), {}};
  p.values.assign(p.layout.total, 0.0);
  return p;
}

ConstMatrixView HeadParams::linear_weight(std::size_t layer) const {
  const auto& s = layout.linears.at(layer);
  return {s.out, s.in, std::span<const double>(values).subspan(s.weight_offset, s.out * s.in)};
}

std::span<const double> HeadParams::linear_bias(std::size_t layer) const {
  const auto& s = layout.linears.at(layer);
  return std::span<const double>(values).subspan(s.bias_offset, s.out);
}

KernelBankView HeadParams::conv_kernels(std::size_t layer) const {
  const auto& s = layout.convs.at(layer);
  return {s.out_channels, s.in_channels, s.kernel,
          std::span<const double>(values).subspan(s.weight_offset, s.out_channels * s.in_channels * s.kernel * s.kernel)};
}

std::span<const double> HeadParams::conv_bias(std::size_t layer) const {
  const auto& s = layout.convs.at(layer);
  return std::span<const double>(values).subspan(s.bias_offset, s.out_channels);
}

HeadParams init_params(const HeadConfig& config, std::uint64_t seed) {
  HeadParams p = HeadParams::zeros(config);
  Rng rng(mix_seed(seed, salt::init));
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) p.values[offset + i] = dist(rng);
  };
  for (const auto& s : p.layout.convs)
    fill(s.weight_offset, s.out_channels * s.in_channels * s.kernel * s.kernel, s.in_channels * s.kernel * s.kernel);
  for (const auto& s : p.layout.linears) fill(s.weight_offset, s.out * s.in, s.in);
  return p;
}

namespace {

FeatureGrid relu_grid(const FeatureGrid& g) {
  FeatureGrid out = g;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

void normalize_rows(DenseMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (double& v : row) v *= inv;
    }
  }
}

std::vector<double> bias_grad(std::span<const FeatureGrid> grads) {
  std::vector<double> out(grads.front().channels(), 0.0);
  for (std::size_t c = 0; c < out.size(); ++c)
    for (const auto& g : grads) {
      const std::size_t plane = g.height() * g.width();
      for (std::size_t k = 0; k < plane; ++k) out[c] += g.values()[c * plane + k];
    }
  return out;
}

}  // namespace

ForwardTrace forward_batch(const HeadParams& params, const DenseMatrix& inputs) {
  const HeadConfig& cfg = params.config;
  if (inputs.cols() != cfg.input_dim)
    throw ShapeError("forward: input has " + std::to_string(inputs.cols()) + " features, head expects " +
                     std::to_string(cfg.input_dim));
  if (params.values.size() != params.layout.total) throw ShapeError("forward: parameter vector has wrong length");

  ForwardTrace trace;
  trace.kind = cfg.kind;
  trace.batch = inputs.rows();

  DenseMatrix x = inputs;
  if (cfg.normalize_input) normalize_rows(x);

  if (cfg.kind == HeadKind::conv) {
    const auto& layers = params.layout.convs;
    trace.conv_inputs.assign(layers.size(), {});
    trace.conv_pre.assign(layers.size(), {});
    const auto& last = layers.back();
    DenseMatrix flat(trace.batch, last.out_channels * last.out_height * last.out_width);
    for (std::size_t s = 0; s < trace.batch; ++s) {
      const auto row = x.row(s);
      FeatureGrid g(cfg.grid.channels, cfg.grid.height, cfg.grid.width, std::vector<double>(row.begin(), row.end()));
      for (std::size_t l = 0; l < layers.size(); ++l) {
        FeatureGrid pre = kernels::conv2d_valid(g, params.conv_kernels(l), params.conv_bias(l));
        trace.conv_inputs[l].push_back(std::move(g));
        g = relu_grid(pre);
        trace.conv_pre[l].push_back(std::move(pre));
      }
      std::copy(g.values().begin(), g.values().end(), flat.row(s).begin());
    }
    x = std::move(flat);
  }

  const std::size_t n_linear = params.layout.linears.size();
  for (std::size_t l = 0; l < n_linear; ++l) {
    DenseMatrix z = kernels::matmul_bt(x, params.linear_weight(l));
    kernels::add_row_vector(z, params.linear_bias(l));
    trace.linear_inputs.push_back(std::move(x));
    if (l + 1 < n_linear) x = kernels::relu(z);
    trace.linear_pre.push_back(std::move(z));
  }
  trace.logits = trace.linear_pre.back();
  return trace;
}

ForwardTrace forward(const HeadParams& params, std::span<const double> features) {
  if (params.config.kind != HeadKind::mlp) throw ShapeError("forward: head is not an MLP; use forward_conv");
  return forward_batch(params, DenseMatrix(1, features.size(), std::vector<double>(features.begin(), features.end())));
}

ForwardTrace forward_conv(const HeadParams& params, const FeatureGrid& grid) {
  const HeadConfig& cfg = params.config;
  if (cfg.kind != HeadKind::conv) throw ShapeError("forward_conv: head is not a conv head");
  if (grid.channels() != cfg.grid.channels || grid.height() != cfg.grid.height || grid.width() != cfg.grid.width)
    throw ShapeError("forward_conv: grid shape does not match head config");
  return forward_batch(params, DenseMatrix(1, grid.size(), std::vector<double>(grid.values().begin(), grid.values().end())));
}

ParamGradients backward(const HeadParams& params, const ForwardTrace& trace, const DenseMatrix& logit_grad) {
  const auto& linears = params.layout.linears;
  if (trace.kind != params.config.kind || trace.linear_pre.size() != linears.size() ||
      (trace.kind == HeadKind::conv && trace.conv_pre.size() != params.layout.convs.size()))
    throw ShapeError("backward: trace does not match head config");
  if (logit_grad.rows() != trace.batch || logit_grad.cols() != params.config.output_dim)
    throw ShapeError("backward: logit gradient shape does not match trace");

  ParamGradients grads{std::vector<double>(params.layout.total, 0.0)};
  auto store = [&](std::size_t offset, std::span<const double> src) {
    std::copy(src.begin(), src.end(), grads.values.begin() + static_cast<std::ptrdiff_t>(offset));
  };

  DenseMatrix delta = logit_grad;
  for (std::size_t l = linears.size(); l-- > 0;) {
    const DenseMatrix dw = kernels::matmul_at(delta, trace.linear_inputs[l]);
    store(linears[l].weight_offset, dw.values());
    store(linears[l].bias_offset, kernels::column_sums(delta));
    if (l == 0 && trace.kind == HeadKind::mlp) break;
    DenseMatrix dx = kernels::matmul(delta, params.linear_weight(l));
    if (l > 0) kernels::relu_backward(dx, trace.linear_pre[l - 1]);
    delta = std::move(dx);
  }
  if (trace.kind == HeadKind::mlp || trace.batch == 0) return grads;

  // delta now holds d(loss)/d(flattened conv output), one row per sample.
  const auto& convs = params.layout.convs;
  std::vector<FeatureGrid> g_out;
  g_out.reserve(trace.batch);
  for (std::size_t s = 0; s < trace.batch; ++s) {
    const auto& last = convs.back();
    const auto row = delta.row(s);
    g_out.emplace_back(last.out_channels, last.out_height, last.out_width, std::vector<double>(row.begin(), row.end()));
  }
  for (std::size_t l = convs.size(); l-- > 0;) {
    for (std::size_t s = 0; s < trace.batch; ++s) {
      auto g = g_out[s].values();
      const auto pre = trace.conv_pre[l][s].values();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!(pre[i] > 0.0)) g[i] = 0.0;
    }
    store(convs[l].weight_offset, kernels::conv2d_backward_kernels(trace.conv_inputs[l], g_out, convs[l].kernel));
    store(convs[l].bias_offset, bias_grad(g_out));
    if (l == 0) break;
    for (std::size_t s = 0; s < trace.batch; ++s)
      g_out[s] = kernels::conv2d_backward_input(g_out[s], params.conv_kernels(l), convs[l].in_height, convs[l].in_width);
  }
  return grads;
}

}  // namespace motif
