#pragma once

// Binary embedding store, little-endian:
//
//   "MHED" | version u32 | embedding_dim u32 | record count u64
//   index:    count x (id length u16 | UTF-8 id bytes | payload offset u64)
//   payloads: count x embedding_dim float32
//
// Payload offsets are absolute byte offsets from the start of the file.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "motif/numkernel.hpp"

namespace motif {

inline constexpr char kStoreMagic[4] = {'M', 'H', 'E', 'D'};
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 20;

struct EmbeddingRecord {
  std::string image_id;
  std::vector<float> features;
};

/// Anything that can hand out widened feature vectors by image id.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t dim() const = 0;
  virtual bool contains(const std::string& image_id) const = 0;
  /// Writes the widened features of image_id into out (length dim()).
  virtual void read_widened(const std::string& image_id, std::span<double> out) const = 0;

  /// Throws DataError listing every id that is absent.
  void require_ids(std::span<const std::string> ids) const;
  /// Throws DataError when dim() differs from expected.
  void require_dim(std::size_t expected) const;
  /// Stacks the features of ids into a matrix, one row per id.
  DenseMatrix gather(std::span<const std::string> ids) const;
};

/// Read-only handle over a store file. Reads use pread, so a single handle
/// can serve concurrent readers.
class EmbeddingStore final : public FeatureSource {
 public:
  static EmbeddingStore open(const std::filesystem::path& path);

  EmbeddingStore(EmbeddingStore&& other) noexcept;
  EmbeddingStore& operator=(EmbeddingStore&& other) noexcept;
  EmbeddingStore(const EmbeddingStore&) = delete;
  EmbeddingStore& operator=(const EmbeddingStore&) = delete;
  ~EmbeddingStore() override;

  std::size_t dim() const override { return dim_; }
  std::size_t count() const { return ids_.size(); }
  std::uint32_t version() const { return version_; }
  /// Ids in index order.
  const std::vector<std::string>& ids() const { return ids_; }
  const std::filesystem::path& path() const { return path_; }

  bool contains(const std::string& image_id) const override { return offsets_.contains(image_id); }
  std::vector<float> read(const std::string& image_id) const;
  void read_widened(const std::string& image_id, std::span<double> out) const override;

 private:
  EmbeddingStore() = default;
  void read_payload(std::uint64_t offset, std::span<float> out) const;

  int fd_ = -1;
  std::filesystem::path path_;
  std::uint32_t version_ = 0;
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::uint64_t> offsets_;
};

/// In-memory feature table, used for tests and freshly generated data.
class InMemoryFeatures final : public FeatureSource {
 public:
  InMemoryFeatures(std::size_t dim, std::span<const EmbeddingRecord> records);

  std::size_t dim() const override { return dim_; }
  bool contains(const std::string& image_id) const override { return rows_.contains(image_id); }
  void read_widened(const std::string& image_id, std::span<double> out) const override;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<float>> rows_;
};

/// Writes a store; every record must have exactly dim features.
void write_embedding_store(const std::filesystem::path& path, std::size_t dim,
                           std::span<const EmbeddingRecord> records);

/// Structural and finiteness check of a store file. Never throws for a
/// malformed file; problems are collected with their byte offsets.
struct StoreReport {
  bool ok = false;
  std::uint32_t version = 0;
  std::size_t dim = 0;
  std::uint64_t count = 0;
  std::vector<std::string> problems;
};

StoreReport verify_store(const std::filesystem::path& path);

}  // namespace motif
