#pragma once

// k-means over L2-normalized embeddings with k-means++ seeding.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "motif/data.hpp"
#include "motif/numkernel.hpp"

namespace motif {

struct KMeansOptions {
  std::size_t k = 20;
  std::uint64_t seed = 0;
  std::size_t max_iters = 300;
  /// Stop once no centroid moves farther than this (Euclidean).
  double tol = 1e-6;
};

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::string> ids;
  /// Cluster index per id, aligned with ids.
  std::vector<std::size_t> assignment;
  DenseMatrix centroids;
  double inertia = 0.0;
  /// Inertia after each assignment step, first to last.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Rows scaled to unit L2 norm; zero rows stay zero.
DenseMatrix l2_normalized(const DenseMatrix& points);

/// Clusters the rows of points as given (no normalization).
ClusterAssignment kmeans(const DenseMatrix& points, const KMeansOptions& options);

/// Clusters the normalized features of ids.
ClusterAssignment kmeans(const FeatureSource& features, std::span<const std::string> ids, const KMeansOptions& options);

/// Nearest centroid for every row (ties to the lowest index).
std::vector<std::size_t> assign_nearest(const DenseMatrix& points, const DenseMatrix& centroids);

struct ClusterAgreement {
  /// k x N counts, keyed by each image's lowest Primary Motif.
  std::vector<std::vector<std::size_t>> contingency;
  double purity = 0.0;
};

ClusterAgreement cluster_label_agreement(const ClusterAssignment& assignment, const DatasetManifest& manifest);

void write_assignment(std::ostream& out, const ClusterAssignment& assignment);
void write_contingency(std::ostream& out, const ClusterAgreement& agreement, std::span<const std::string> motif_names);

}  // namespace motif
