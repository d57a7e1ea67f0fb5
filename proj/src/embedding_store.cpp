#include "motif/embedding_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "byte_io.hpp"
#include "motif/errors.hpp"

namespace motif {

namespace {

std::string describe(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

bool read_exact(int fd, char* dst, std::size_t n, std::uint64_t offset) {
  while (n > 0) {
    const ssize_t got = ::pread(fd, dst, n, static_cast<off_t>(offset));
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) return false;
    dst += got;
    n -= static_cast<std::size_t>(got);
    offset += static_cast<std::uint64_t>(got);
  }
  return true;
}

// Parsed header and index; shared by open() and verify_store().
struct StoreLayout {
  std::uint32_t version = 0;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  std::uint64_t index_end = 0;
  std::vector<std::string> ids;
  std::vector<std::uint64_t> offsets;
};

// Reads header and index from the first bytes of the file. Throws
// DataError with a byte offset on the first structural problem.
StoreLayout parse_layout(int fd, std::uint64_t file_size, const std::string& name) {
  StoreLayout layout;
  char header[kStoreHeaderBytes];
  if (file_size < kStoreHeaderBytes || !read_exact(fd, header, kStoreHeaderBytes, 0))
    throw DataError(name + ": truncated header (file is " + std::to_string(file_size) + " bytes)");
  if (std::memcmp(header, kStoreMagic, 4) != 0) throw DataError(name + ": bad magic at offset 0, expected MHED");
  layout.version = detail::get_le<std::uint32_t>(header + 4);
  layout.dim = detail::get_le<std::uint32_t>(header + 8);
  layout.count = detail::get_le<std::uint64_t>(header + 12);
  if (layout.version != kStoreVersion)
    throw DataError(name + ": unsupported format version " + std::to_string(layout.version) + " at offset 4");
  if (layout.dim == 0) throw DataError(name + ": embedding_dim is 0 at offset 8");

  std::uint64_t pos = kStoreHeaderBytes;
  // Every index entry is at least 10 bytes; rejects absurd counts early.
  if (layout.count > (file_size - pos) / 10)
    throw DataError(name + ": record count " + std::to_string(layout.count) + " at offset 12 exceeds file size");
  layout.ids.reserve(layout.count);
  layout.offsets.reserve(layout.count);
  std::unordered_set<std::string> seen;
  for (std::uint64_t r = 0; r < layout.count; ++r) {
    char len_bytes[2];
    if (!read_exact(fd, len_bytes, 2, pos)) throw DataError(name + ": truncated index at offset " + std::to_string(pos));
    const auto len = detail::get_le<std::uint16_t>(len_bytes);
    std::string id(len, '\0');
    char off_bytes[8];
    if (!read_exact(fd, id.data(), len, pos + 2) || !read_exact(fd, off_bytes, 8, pos + 2 + len))
      throw DataError(name + ": truncated index at offset " + std::to_string(pos));
    if (!seen.insert(id).second)
      throw DataError(name + ": duplicate id '" + id + "' in index at offset " + std::to_string(pos));
    layout.ids.push_back(std::move(id));
    layout.offsets.push_back(detail::get_le<std::uint64_t>(off_bytes));
    pos += 2 + len + 8;
  }
  layout.index_end = pos;
  return layout;
}

std::uint64_t file_size_of(int fd) {
  struct stat st {};
  if (::fstat(fd, &st) != 0) return 0;
  return static_cast<std::uint64_t>(st.st_size);
}

class Fd {
 public:
  explicit Fd(const std::filesystem::path& p) : fd_(::open(p.c_str(), O_RDONLY | O_CLOEXEC)) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }
  int release() { return std::exchange(fd_, -1); }

 private:
  int fd_;
};

}  // namespace

void FeatureSource::require_ids(std::span<const std::string> ids) const {
  std::vector<std::string> missing;
  for (const auto& id : ids)
    if (!contains(id)) missing.push_back(id);
  if (missing.empty()) return;
  std::ostringstream msg;
  msg << missing.size() << " id(s) missing from embedding store:";
  for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg << ' ' << missing[i];
  if (missing.size() > 20) msg << " ...";
  throw DataError(msg.str());
}

void FeatureSource::require_dim(std::size_t expected) const {
  if (dim() != expected)
    throw DataError("embedding dimension mismatch: store has " + std::to_string(dim()) + ", model expects " +
                    std::to_string(expected));
}

DenseMatrix FeatureSource::gather(std::span<const std::string> ids) const {
  require_ids(ids);
  DenseMatrix out(ids.size(), dim());
  for (std::size_t r = 0; r < ids.size(); ++r) read_widened(ids[r], out.row(r));
  return out;
}

EmbeddingStore EmbeddingStore::open(const std::filesystem::path& path) {
  Fd fd(path);
  if (fd.get() < 0) throw DataError("cannot open embedding store " + describe(path) + ": " + std::strerror(errno));
  const std::uint64_t size = file_size_of(fd.get());
  StoreLayout layout = parse_layout(fd.get(), size, describe(path));

  const std::uint64_t payload_bytes = std::uint64_t{layout.dim} * sizeof(float);
  for (std::size_t r = 0; r < layout.ids.size(); ++r) {
    const std::uint64_t off = layout.offsets[r];
    if (off < layout.index_end || off > size || size - off < payload_bytes)
      throw DataError(describe(path) + ": payload of '" + layout.ids[r] + "' at offset " + std::to_string(off) +
                      " runs past end of file (truncated store)");
  }

  EmbeddingStore store;
  store.path_ = path;
  store.version_ = layout.version;
  store.dim_ = layout.dim;
  store.offsets_.reserve(layout.ids.size());
  for (std::size_t r = 0; r < layout.ids.size(); ++r) store.offsets_.emplace(layout.ids[r], layout.offsets[r]);
  store.ids_ = std::move(layout.ids);
  store.fd_ = fd.release();
  return store;
}

EmbeddingStore::EmbeddingStore(EmbeddingStore&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      path_(std::move(other.path_)),
      version_(other.version_),
      dim_(other.dim_),
      ids_(std::move(other.ids_)),
      offsets_(std::move(other.offsets_)) {}

EmbeddingStore& EmbeddingStore::operator=(EmbeddingStore&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    path_ = std::move(other.path_);
    version_ = other.version_;
    dim_ = other.dim_;
    ids_ = std::move(other.ids_);
    offsets_ = std::move(other.offsets_);
  }
  return *this;
}

EmbeddingStore::~EmbeddingStore() {
  if (fd_ >= 0) ::close(fd_);
}

void EmbeddingStore::read_payload(std::uint64_t offset, std::span<float> out) const {
  std::vector<char> raw(out.size() * sizeof(float));
  if (!read_exact(fd_, raw.data(), raw.size(), offset))
    throw DataError(describe(path_) + ": short read at offset " + std::to_string(offset));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::get_f32(raw.data() + i * sizeof(float));
}

std::vector<float> EmbeddingStore::read(const std::string& image_id) const {
  const auto it = offsets_.find(image_id);
  if (it == offsets_.end()) throw DataError("id '" + image_id + "' not in embedding store " + describe(path_));
  std::vector<float> out(dim_);
  read_payload(it->second, out);
  return out;
}

void EmbeddingStore::read_widened(const std::string& image_id, std::span<double> out) const {
  if (out.size() != dim_) throw ShapeError("read_widened: output span has wrong length");
  const auto values = read(image_id);
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!std::isfinite(values[i]))
      throw DataError("non-finite feature " + std::to_string(i) + " for '" + image_id + "' in " + describe(path_));
    out[i] = values[i];
  }
}

InMemoryFeatures::InMemoryFeatures(std::size_t dim, std::span<const EmbeddingRecord> records) : dim_(dim) {
  for (const auto& r : records) {
    if (r.features.size() != dim) throw DataError("record '" + r.image_id + "' has wrong feature length");
    if (!rows_.emplace(r.image_id, r.features).second) throw DataError("duplicate id '" + r.image_id + "'");
  }
}

void InMemoryFeatures::read_widened(const std::string& image_id, std::span<double> out) const {
  const auto it = rows_.find(image_id);
  if (it == rows_.end()) throw DataError("id '" + image_id + "' not in feature table");
  if (out.size() != dim_) throw ShapeError("read_widened: output span has wrong length");
  for (std::size_t i = 0; i < dim_; ++i) out[i] = it->second[i];
}

void write_embedding_store(const std::filesystem::path& path, std::size_t dim,
                           std::span<const EmbeddingRecord> records) {
  if (dim == 0 || dim > UINT32_MAX) throw DataError("embedding_dim must be in [1, 2^32)");
  std::vector<char> buf;
  buf.insert(buf.end(), kStoreMagic, kStoreMagic + 4);
  detail::put_le<std::uint32_t>(buf, kStoreVersion);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(dim));
  detail::put_le<std::uint64_t>(buf, records.size());

  std::uint64_t index_bytes = 0;
  for (const auto& r : records) {
    if (r.image_id.size() > UINT16_MAX) throw DataError("image id longer than 65535 bytes");
    if (r.features.size() != dim)
      throw DataError("record '" + r.image_id + "' has " + std::to_string(r.features.size()) +
                      " features, expected " + std::to_string(dim));
    index_bytes += 2 + r.image_id.size() + 8;
  }
  std::uint64_t offset = kStoreHeaderBytes + index_bytes;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.image_id).second) throw DataError("duplicate id '" + r.image_id + "'");
    detail::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(r.image_id.size()));
    buf.insert(buf.end(), r.image_id.begin(), r.image_id.end());
    detail::put_le<std::uint64_t>(buf, offset);
    offset += dim * sizeof(float);
  }
  for (const auto& r : records)
    for (float f : r.features) detail::put_f32(buf, f);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embedding store " + describe(path));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write failed for " + describe(path));
}

StoreReport verify_store(const std::filesystem::path& path) {
  StoreReport report;
  Fd fd(path);
  if (fd.get() < 0) {
    report.problems.push_back("cannot open " + describe(path) + ": " + std::strerror(errno));
    return report;
  }
  const std::uint64_t size = file_size_of(fd.get());
  StoreLayout layout;
  try {
    layout = parse_layout(fd.get(), size, describe(path));
  } catch (const DataError& e) {
    report.problems.emplace_back(e.what());
    return report;
  }
  report.version = layout.version;
  report.dim = layout.dim;
  report.count = layout.count;

  const std::uint64_t payload_bytes = std::uint64_t{layout.dim} * sizeof(float);
  std::vector<char> raw(payload_bytes);
  for (std::size_t r = 0; r < layout.ids.size(); ++r) {
    const std::uint64_t off = layout.offsets[r];
    const std::string& id = layout.ids[r];
    if (off < layout.index_end) {
      report.problems.push_back("payload of '" + id + "' at offset " + std::to_string(off) +
                                " overlaps header/index (index ends at " + std::to_string(layout.index_end) + ")");
      continue;
    }
    if (off > size || size - off < payload_bytes) {
      report.problems.push_back("truncated payload for '" + id + "': expected " + std::to_string(payload_bytes) +
                                " bytes at offset " + std::to_string(off) + ", file ends at " + std::to_string(size));
      continue;
    }
    read_exact(fd.get(), raw.data(), raw.size(), off);
    for (std::size_t i = 0; i < layout.dim; ++i) {
      if (!std::isfinite(detail::get_f32(raw.data() + i * sizeof(float)))) {
        report.problems.push_back("non-finite value in '" + id + "' (feature " + std::to_string(i) + ", offset " +
                                  std::to_string(off + i * sizeof(float)) + ")");
        break;
      }
    }
  }
  report.ok = report.problems.empty();
  return report;
}

}  // namespace motif
