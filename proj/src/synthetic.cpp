#include <cmath>
#include <cstdio>

#include "motif/data.hpp"
#include "motif/errors.hpp"
#include "motif/random.hpp"

namespace motif {

namespace {

// Gram-Schmidt on Gaussian draws, run twice per vector for stability.
std::vector<std::vector<double>> orthonormal_anchors(std::size_t n, std::size_t dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> anchors;
  while (anchors.size() < n) {
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& a : anchors) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += v[i] * a[i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * a[i];
      }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;  // degenerate draw, try again
    for (auto& x : v) x /= norm;
    anchors.push_back(std::move(v));
  }
  return anchors;
}

void check_rate(double r, const char* name) {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes == 0) throw ConfigError("synthetic dataset needs at least one class");
  if (spec.per_class == 0) throw ConfigError("per_class must be at least 1");
  if (spec.dim < spec.n_classes)
    throw ConfigError("dim (" + std::to_string(spec.dim) + ") must be at least n_classes (" +
                      std::to_string(spec.n_classes) + ") for orthogonal anchors");
  check_rate(spec.sm_rate, "sm_rate");
  check_rate(spec.rf_rate, "rf_rate");
  check_rate(spec.can_rate, "can_rate");
  if (spec.rf_rate + spec.can_rate > 1.0) throw ConfigError("rf_rate + can_rate must not exceed 1");
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) throw ConfigError("noise must be finite and >= 0");
  if (spec.sm_rate > 0.0 && spec.n_classes < 2) throw ConfigError("secondary motifs need at least two classes");

  Rng rng(mix_seed(spec.seed, salt::synthetic));
  SyntheticDataset out;
  out.anchors = orthonormal_anchors(spec.n_classes, spec.dim, rng);

  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "motif_%02zu", c);
    out.manifest.motif_names.emplace_back(name);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> other(0, spec.n_classes >= 2 ? spec.n_classes - 2 : 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t serial = 0;
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    for (std::size_t k = 0; k < spec.per_class; ++k) {
      AnnotationRecord rec;
      char id[32];
      std::snprintf(id, sizeof id, "syn-%06zu", serial++);
      rec.image_id = id;
      rec.primary = {static_cast<MotifId>(c)};

      const double tag_draw = unit(rng);
      if (tag_draw < spec.rf_rate)
        rec.tag = Tag::red_flag;
      else if (tag_draw < spec.rf_rate + spec.can_rate)
        rec.tag = Tag::canonical;

      std::vector<double> centre = out.anchors[c];
      if (unit(rng) < spec.sm_rate) {
        std::size_t s = other(rng);
        if (s >= c) ++s;
        rec.secondary = {static_cast<MotifId>(s)};
        for (std::size_t i = 0; i < spec.dim; ++i) centre[i] += spec.secondary_blend * out.anchors[s][i];
      }

      EmbeddingRecord emb{rec.image_id, std::vector<float>(spec.dim)};
      for (std::size_t i = 0; i < spec.dim; ++i)
        emb.features[i] = static_cast<float>(centre[i] + spec.noise * normal(rng));
      out.manifest.records.push_back(std::move(rec));
      out.embeddings.push_back(std::move(emb));
    }
  }
  out.manifest.validate();
  return out;
}

}  // namespace motif
