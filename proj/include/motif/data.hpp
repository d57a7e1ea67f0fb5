#pragma once

// Annotated dataset model: manifest records, stratified splitting, and the
// synthetic dataset generator used by the test suites.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "motif/embedding_store.hpp"

namespace motif {

using MotifId = std::uint32_t;

/// Sorted, duplicate-free set of motif indices.
using MotifSet = std::vector<MotifId>;

enum class Tag { red_flag, standard, canonical };
enum class SplitRole { train, test };

std::string_view to_string(Tag tag);
std::string_view to_string(SplitRole role);
Tag parse_tag(std::string_view text);
SplitRole parse_split_role(std::string_view text);

struct AnnotationRecord {
  std::string image_id;
  MotifSet primary;
  MotifSet secondary;
  Tag tag = Tag::standard;
  std::optional<SplitRole> split;

  /// Lowest-index Primary Motif; the stratification and contingency key.
  MotifId first_primary() const { return primary.front(); }
};

struct DatasetManifest {
  std::vector<std::string> motif_names;
  std::vector<AnnotationRecord> records;

  std::size_t n_classes() const { return motif_names.size(); }
  bool has_split() const;
  /// Ids of records with the given split role, in manifest order.
  std::vector<std::string> ids_in(SplitRole role) const;
  std::vector<std::string> all_ids() const;
  /// Throws DataError for unknown ids.
  const AnnotationRecord& at(std::string_view image_id) const;
  std::optional<MotifId> motif_index(std::string_view name) const;

  /// Checks every record invariant; throws DataError describing the first violation.
  void validate() const;
};

DatasetManifest parse_manifest(std::istream& in, const std::string& source = "<stream>");
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Assigns train/test per record, stratified by lowest Primary Motif.
DatasetManifest stratified_split(const DatasetManifest& manifest, double test_fraction, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n_classes = 20;
  std::size_t dim = 64;
  std::size_t per_class = 50;
  double sm_rate = 0.015;
  double rf_rate = 0.056;
  double can_rate = 0.108;
  double noise = 0.1;
  std::uint64_t seed = 1;
  /// Weight of the Secondary Motif's anchor mixed into a sample.
  double secondary_blend = 0.3;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<EmbeddingRecord> embeddings;
  /// Unit-norm, mutually orthogonal class directions (n_classes x dim).
  std::vector<std::vector<double>> anchors;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace motif
