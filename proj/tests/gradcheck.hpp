#pragma once

// Central finite-difference check of the full training loss against the
// analytic gradient. The differenced loss comes from an independent
// long-double forward pass and loss written out here, so the check shares
// no arithmetic with the library beyond the parameter layout.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "motif/data.hpp"
#include "motif/loss.hpp"
#include "motif/model.hpp"

namespace gradcheck {

using real = long double;
using Rows = std::vector<std::vector<real>>;

inline real oracle_loss(const Rows& logits, std::span<const motif::AnnotationRecord> ann, const motif::LossConfig& cfg) {
  real total = 0;
  for (std::size_t b = 0; b < ann.size(); ++b) {
    const std::size_t n = logits[b].size();
    std::vector<real> t(n, 0.0L);
    for (auto m : ann[b].secondary) t[m] = cfg.smt;
    for (auto m : ann[b].primary) t[m] = 1.0L;
    const real w = ann[b].tag == motif::Tag::red_flag ? cfg.rfw : ann[b].tag == motif::Tag::canonical ? cfg.cw : 1.0;
    real s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const real x = logits[b][j];
      // log sig(x) and log(1 - sig(x)) = log sig(x) - x
      const real log_p = x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
      s += -(t[j] * log_p + (1 - t[j]) * (log_p - x));
    }
    total += w * s / static_cast<real>(n);
  }
  return total / static_cast<real>(ann.size());
}

// Straight-line forward pass in long double over the flat parameter vector.
class Oracle {
 public:
  Oracle(const motif::HeadParams& p, const motif::DenseMatrix& inputs)
      : layout_(p.layout), conv_(p.config.kind == motif::HeadKind::conv), grid_(p.config.grid),
        theta_(p.values.begin(), p.values.end()) {
    for (std::size_t b = 0; b < inputs.rows(); ++b) x_.emplace_back(inputs.row(b).begin(), inputs.row(b).end());
    if (!conv_) cache();
  }

  // Loss with parameter idx shifted by delta.
  real loss_at(std::size_t idx, real delta, std::span<const motif::AnnotationRecord> ann,
               const motif::LossConfig& cfg) {
    if (conv_) {
      const real saved = theta_[idx];
      theta_[idx] += delta;
      const real l = oracle_loss(full_forward(), ann, cfg);
      theta_[idx] = saved;
      return l;
    }
    // Only one pre-activation column of one linear layer moves.
    std::size_t l = 0;
    while (idx >= layout_.linears[l].bias_offset + layout_.linears[l].out) ++l;
    const auto& L = layout_.linears[l];
    Rows pre = pre_[l];
    for (std::size_t b = 0; b < pre.size(); ++b) {
      if (idx >= L.bias_offset) {
        pre[b][idx - L.bias_offset] += delta;
      } else {
        const std::size_t o = (idx - L.weight_offset) / L.in, i = (idx - L.weight_offset) % L.in;
        pre[b][o] += delta * act_[l][b][i];
      }
    }
    return oracle_loss(propagate(l, std::move(pre)), ann, cfg);
  }

 private:
  Rows linear(std::size_t l, const Rows& in) const {
    const auto& L = layout_.linears[l];
    Rows out(in.size(), std::vector<real>(L.out));
    for (std::size_t b = 0; b < in.size(); ++b)
      for (std::size_t o = 0; o < L.out; ++o) {
        real s = theta_[L.bias_offset + o];
        for (std::size_t i = 0; i < L.in; ++i) s += theta_[L.weight_offset + o * L.in + i] * in[b][i];
        out[b][o] = s;
      }
    return out;
  }

  static Rows relu(Rows r) {
    for (auto& row : r)
      for (auto& v : row) v = v > 0 ? v : 0;
    return r;
  }

  Rows propagate(std::size_t l, Rows pre) const {
    for (std::size_t k = l + 1; k < layout_.linears.size(); ++k) pre = linear(k, relu(std::move(pre)));
    return pre;
  }

  void cache() {
    Rows a = x_;
    for (std::size_t l = 0; l < layout_.linears.size(); ++l) {
      act_.push_back(a);
      pre_.push_back(linear(l, a));
      a = relu(pre_.back());
    }
  }

  Rows full_forward() const {
    Rows flat;
    for (const auto& sample : x_) {
      std::size_t ch = grid_.channels, h = grid_.height, w = grid_.width;
      std::vector<real> g = sample;
      for (const auto& c : layout_.convs) {
        const std::size_t k = c.kernel, oh = h - k + 1, ow = w - k + 1;
        std::vector<real> out(c.out_channels * oh * ow);
        for (std::size_t o = 0; o < c.out_channels; ++o)
          for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t xx = 0; xx < ow; ++xx) {
              real s = theta_[c.bias_offset + o];
              for (std::size_t i = 0; i < ch; ++i)
                for (std::size_t ky = 0; ky < k; ++ky)
                  for (std::size_t kx = 0; kx < k; ++kx)
                    s += theta_[c.weight_offset + ((o * ch + i) * k + ky) * k + kx] * g[(i * h + y + ky) * w + xx + kx];
              out[(o * oh + y) * ow + xx] = s > 0 ? s : 0;
            }
        g = std::move(out);
        ch = c.out_channels;
        h = oh;
        w = ow;
      }
      flat.push_back(std::move(g));
    }
    Rows pre = linear(0, flat);
    return propagate(0, std::move(pre));
  }

  motif::ParamLayout layout_;
  bool conv_;
  motif::GridShape grid_;
  std::vector<real> theta_;
  Rows x_;
  std::vector<Rows> act_, pre_;
};

// Random records over n classes: 1-2 primaries, sometimes a secondary,
// tags cycling through all three tiers.
inline std::vector<motif::AnnotationRecord> random_batch(std::size_t batch, std::size_t n, std::mt19937_64& rng) {
  std::vector<motif::AnnotationRecord> out;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const motif::Tag tags[3] = {motif::Tag::red_flag, motif::Tag::standard, motif::Tag::canonical};
  for (std::size_t b = 0; b < batch; ++b) {
    motif::AnnotationRecord r;
    r.image_id = "g" + std::to_string(b);
    r.primary.push_back(static_cast<motif::MotifId>(pick(rng)));
    if (n > 2 && b % 2 == 1) {
      const auto extra = static_cast<motif::MotifId>(pick(rng));
      if (extra != r.primary[0]) r.primary.push_back(extra);
    }
    if (n > 1 && b % 3 != 2) {
      for (int tries = 0; tries < 20; ++tries) {
        const auto s = static_cast<motif::MotifId>(pick(rng));
        if (std::find(r.primary.begin(), r.primary.end(), s) == r.primary.end()) {
          r.secondary.push_back(s);
          break;
        }
      }
    }
    std::sort(r.primary.begin(), r.primary.end());
    r.tag = tags[b % 3];
    out.push_back(std::move(r));
  }
  return out;
}

struct Result {
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

// Relative error with a floor on the denominator, so that coordinates
// whose true gradient is ~0 are judged on absolute error / floor.
inline constexpr double kFloor = 1e-8;

inline Result check(const motif::HeadParams& params, const motif::DenseMatrix& inputs,
                    std::span<const motif::AnnotationRecord> ann, const motif::LossConfig& cfg,
                    std::span<const std::size_t> coords, double h = 1e-5) {
  const auto trace = motif::forward_batch(params, inputs);
  const auto lg = motif::batch_loss_and_grad(trace.logits, ann, cfg);
  const auto grads = motif::backward(params, trace, lg.grad);

  Oracle oracle(params, inputs);
  Result res;
  for (std::size_t idx : coords) {
    const real up = oracle.loss_at(idx, h, ann, cfg);
    const real down = oracle.loss_at(idx, -h, ann, cfg);
    const double numeric = static_cast<double>((up - down) / (2 * static_cast<real>(h)));
    const double analytic = grads.values[idx];
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
    if (rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_index = idx;
    }
    ++res.checked;
  }
  return res;
}

inline std::vector<std::size_t> all_coords(const motif::HeadParams& p) {
  std::vector<std::size_t> c(p.values.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = i;
  return c;
}

// init_params leaves biases at exactly zero, which can park a
// pre-activation on the ReLU kink when every upstream unit is dead; a
// difference across the kink then sees half the slope. Random biases
// keep the check away from it.
inline motif::HeadParams random_params(const motif::HeadConfig& cfg, std::uint64_t seed) {
  auto p = motif::init_params(cfg, seed);
  std::mt19937_64 rng(seed ^ 0xB1A5ULL);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (const auto& c : p.layout.convs)
    for (std::size_t i = 0; i < c.out_channels; ++i) p.values[c.bias_offset + i] = u(rng);
  for (const auto& l : p.layout.linears)
    for (std::size_t i = 0; i < l.out; ++i) p.values[l.bias_offset + i] = u(rng);
  return p;
}

inline motif::DenseMatrix random_inputs(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  motif::DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

}  // namespace gradcheck
