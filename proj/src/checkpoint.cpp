#include <cstring>
#include <fstream>

#include "byte_io.hpp"
#include "motif/errors.hpp"
#include "motif/model.hpp"

namespace motif {

namespace {

constexpr char kMagic[4] = {'M', 'H', 'C', 'K'};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::string name) : buf_(buf), name_(std::move(name)) {}

  template <typename U>
  U le() {
    need(sizeof(U));
    const U v = detail::get_le<U>(buf_.data() + pos_);
    pos_ += sizeof(U);
    return v;
  }
  double f64() {
    need(8);
    const double v = detail::get_f64(buf_.data() + pos_);
    pos_ += 8;
    return v;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw DataError(name_ + ": truncated checkpoint at offset " + std::to_string(pos_));
  }
  const std::vector<char>& buf_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const HeadParams& params) {
  const HeadConfig& c = params.config;
  std::vector<char> buf(kMagic, kMagic + 4);
  detail::put_le<std::uint32_t>(buf, kCheckpointVersion);
  detail::put_le<std::uint32_t>(buf, c.kind == HeadKind::mlp ? 0 : 1);
  detail::put_le<std::uint64_t>(buf, c.input_dim);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(c.hidden_dims.size()));
  for (std::size_t h : c.hidden_dims) detail::put_le<std::uint64_t>(buf, h);
  detail::put_le<std::uint64_t>(buf, c.output_dim);
  detail::put_le<std::uint64_t>(buf, c.conv_kernel);
  detail::put_le<std::uint64_t>(buf, c.conv_channels[0]);
  detail::put_le<std::uint64_t>(buf, c.conv_channels[1]);
  detail::put_le<std::uint64_t>(buf, c.grid.channels);
  detail::put_le<std::uint64_t>(buf, c.grid.height);
  detail::put_le<std::uint64_t>(buf, c.grid.width);
  detail::put_le<std::uint32_t>(buf, c.normalize_input ? 1 : 0);
  detail::put_le<std::uint64_t>(buf, params.values.size());
  for (double v : params.values) detail::put_f64(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write failed for checkpoint '" + path.string() + "'");
}

HeadParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<char> buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::string name = "'" + path.string() + "'";
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) throw DataError(name + ": bad checkpoint magic");

  Reader r(buf, name);
  r.le<std::uint32_t>();  // magic
  if (const auto version = r.le<std::uint32_t>(); version != kCheckpointVersion)
    throw DataError(name + ": unsupported checkpoint version " + std::to_string(version));
  HeadConfig c;
  const auto kind = r.le<std::uint32_t>();
  if (kind > 1) throw DataError(name + ": unknown head kind " + std::to_string(kind));
  c.kind = kind == 0 ? HeadKind::mlp : HeadKind::conv;
  c.input_dim = r.le<std::uint64_t>();
  const auto n_hidden = r.le<std::uint32_t>();
  if (n_hidden > 3) throw DataError(name + ": too many hidden layers");
  c.hidden_dims.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i) c.hidden_dims.push_back(r.le<std::uint64_t>());
  c.output_dim = r.le<std::uint64_t>();
  c.conv_kernel = r.le<std::uint64_t>();
  c.conv_channels[0] = r.le<std::uint64_t>();
  c.conv_channels[1] = r.le<std::uint64_t>();
  c.grid.channels = r.le<std::uint64_t>();
  c.grid.height = r.le<std::uint64_t>();
  c.grid.width = r.le<std::uint64_t>();
  c.normalize_input = r.le<std::uint32_t>() != 0;

  HeadParams p;
  try {
    p = HeadParams::zeros(c);
  } catch (const ConfigError& e) {
    throw DataError(name + ": invalid head config: " + e.what());
  }
  const auto count = r.le<std::uint64_t>();
  if (count != p.values.size())
    throw DataError(name + ": parameter count " + std::to_string(count) + " does not match config (" +
                    std::to_string(p.values.size()) + ")");
  if (r.remaining() != count * 8) throw DataError(name + ": checkpoint payload has wrong length");
  for (double& v : p.values) v = r.f64();
  return p;
}

}  // namespace motif
