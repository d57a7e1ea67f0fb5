#include "motif/cluster.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "motif/errors.hpp"
#include "motif/random.hpp"

namespace motif {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

// Per-point distance to its assigned centroid, computed in parallel.
std::vector<double> distances_to(const DenseMatrix& points, const DenseMatrix& centroids,
                                 const std::vector<std::size_t>& assignment) {
  std::vector<double> d(points.rows());
  const auto n = static_cast<std::int64_t>(points.rows());
#pragma omp parallel for schedule(static) if (points.size() > (1 << 14))
  for (std::int64_t i = 0; i < n; ++i)
    d[i] = squared_distance(points.row(static_cast<std::size_t>(i)), centroids.row(assignment[i]));
  return d;
}

double ordered_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

DenseMatrix plus_plus_seeds(const DenseMatrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  DenseMatrix centroids(k, points.cols());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t pick = first(rng);
  for (std::size_t c = 0; c < k; ++c) {
    chosen[pick] = true;
    const auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    if (c + 1 == k) break;
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], squared_distance(points.row(i), src));
    const double total = ordered_sum(nearest);
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (nearest[i] > 0.0 && acc >= target) {
          pick = i;
          break;
        }
      }
      if (pick == n)  // rounding left target just above acc
        for (std::size_t i = n; i-- > 0;)
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      // Every point coincides with a seed; take the first unused one.
      pick = 0;
      while (chosen[pick]) ++pick;
    }
  }
  return centroids;
}

}  // namespace

DenseMatrix l2_normalized(const DenseMatrix& points) {
  DenseMatrix out = points;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (double& v : row) v *= inv;
    }
  }
  return out;
}

std::vector<std::size_t> assign_nearest(const DenseMatrix& points, const DenseMatrix& centroids) {
  if (points.cols() != centroids.cols()) throw ShapeError("assign_nearest: dimension mismatch");
  std::vector<std::size_t> out(points.rows(), 0);
  const auto n = static_cast<std::int64_t>(points.rows());
#pragma omp parallel for schedule(static) if (points.rows() * centroids.size() > (1 << 14))
  for (std::int64_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        out[i] = c;
      }
    }
  }
  return out;
}

ClusterAssignment kmeans(const DenseMatrix& points, const KMeansOptions& opt) {
  const std::size_t n = points.rows();
  if (opt.k == 0) throw ConfigError("k must be at least 1");
  if (opt.k > n)
    throw ConfigError("k (" + std::to_string(opt.k) + ") exceeds the number of points (" + std::to_string(n) + ")");

  Rng rng(mix_seed(opt.seed, salt::kmeans));
  ClusterAssignment out;
  out.k = opt.k;
  out.centroids = plus_plus_seeds(points, opt.k, rng);

  const std::size_t dim = points.cols();
  for (std::size_t iter = 0; iter < std::max<std::size_t>(opt.max_iters, 1); ++iter) {
    out.assignment = assign_nearest(points, out.centroids);
    std::vector<double> dist = distances_to(points, out.centroids, out.assignment);
    out.inertia = ordered_sum(dist);
    out.inertia_history.push_back(out.inertia);
    out.iterations = iter + 1;

    DenseMatrix next(opt.k, dim);
    std::vector<std::size_t> counts(opt.k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = out.assignment[i];
      ++counts[c];
      auto dst = next.row(c);
      const auto src = points.row(i);
      for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
    }
    for (std::size_t c = 0; c < opt.k; ++c) {
      if (counts[c] == 0) continue;
      for (double& v : next.row(c)) v /= static_cast<double>(counts[c]);
    }
    // Empty clusters take the point farthest from its centroid, drawn from
    // clusters that can spare one.
    for (std::size_t c = 0; c < opt.k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[out.assignment[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      if (far == n) continue;
      --counts[out.assignment[far]];
      ++counts[c];
      out.assignment[far] = c;
      dist[far] = 0.0;
      const auto src = points.row(far);
      std::copy(src.begin(), src.end(), next.row(c).begin());
    }

    double max_shift = 0.0;
    for (std::size_t c = 0; c < opt.k; ++c)
      max_shift = std::max(max_shift, std::sqrt(squared_distance(next.row(c), out.centroids.row(c))));
    out.centroids = std::move(next);
    if (max_shift < opt.tol) {
      out.converged = true;
      break;
    }
  }
  // Final assignment against the final centroids.
  out.assignment = assign_nearest(points, out.centroids);
  out.inertia = ordered_sum(distances_to(points, out.centroids, out.assignment));
  out.inertia_history.push_back(out.inertia);
  return out;
}

ClusterAssignment kmeans(const FeatureSource& features, std::span<const std::string> ids, const KMeansOptions& options) {
  ClusterAssignment out = kmeans(l2_normalized(features.gather(ids)), options);
  out.ids.assign(ids.begin(), ids.end());
  return out;
}

ClusterAgreement cluster_label_agreement(const ClusterAssignment& a, const DatasetManifest& manifest) {
  std::unordered_map<std::string, const AnnotationRecord*> by_id;
  for (const auto& r : manifest.records) by_id.emplace(r.image_id, &r);
  ClusterAgreement out;
  out.contingency.assign(a.k, std::vector<std::size_t>(manifest.n_classes(), 0));
  if (a.ids.size() != a.assignment.size()) throw DataError("cluster assignment ids and labels are not aligned");
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    const auto it = by_id.find(a.ids[i]);
    if (it == by_id.end()) {
      missing.push_back(a.ids[i]);
      continue;
    }
    ++out.contingency.at(a.assignment[i]).at(it->second->first_primary());
  }
  if (!missing.empty()) throw DataError("cluster assignment has " + std::to_string(missing.size()) +
                                        " id(s) missing from the manifest, first: " + missing.front());
  std::size_t best_total = 0;
  for (const auto& row : out.contingency) best_total += *std::max_element(row.begin(), row.end());
  out.purity = a.ids.empty() ? 0.0 : static_cast<double>(best_total) / static_cast<double>(a.ids.size());
  return out;
}

void write_assignment(std::ostream& out, const ClusterAssignment& a) {
  out << "image_id\tcluster\n";
  for (std::size_t i = 0; i < a.ids.size(); ++i) out << a.ids[i] << '\t' << a.assignment[i] << '\n';
}

void write_contingency(std::ostream& out, const ClusterAgreement& agreement, std::span<const std::string> names) {
  out << "cluster";
  for (const auto& n : names) out << '\t' << n;
  out << '\n';
  for (std::size_t c = 0; c < agreement.contingency.size(); ++c) {
    out << c;
    for (std::size_t v : agreement.contingency[c]) out << '\t' << v;
    out << '\n';
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "# purity %.6f\n", agreement.purity);
  out << buf;
}

}  // namespace motif
