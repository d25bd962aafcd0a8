#include "dknn/store.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "dknn/binary_io.hpp"
#include "dknn/error.hpp"

namespace dknn {

namespace {
constexpr std::string_view kStoreMagic = "DKNS";
constexpr std::uint16_t kStoreVersion = 1;
constexpr double kKeyRowTol = 1e-6;
}  // namespace

RepresentationStore::RepresentationStore(Metric metric, std::size_t dim, std::size_t num_labels,
                                         std::uint64_t fingerprint, std::vector<float> keys,
                                         std::vector<std::uint32_t> labels)
    : metric_(metric),
      dim_(dim),
      num_labels_(num_labels),
      fingerprint_(fingerprint),
      keys_(std::move(keys)),
      labels_(std::move(labels)) {
  require(dim_ > 0, ErrorKind::Dimension, "store dimension must be positive");
  require(keys_.size() == labels_.size() * dim_, ErrorKind::Dimension, "store key block does not match N x dim");
  for (auto y : labels_) require(y < num_labels_, ErrorKind::InvalidArgument, "store label outside [0, c)");
  for (float k : keys_) require(std::isfinite(k), ErrorKind::NonFinite, "store key is not finite");
  if (metric_ == Metric::KL) {
    for (std::size_t i = 0; i < size(); ++i) {
      double sum = 0.0;
      for (float v : key(i)) {
        require(v >= 0.0f, ErrorKind::InvalidArgument, "KL store key has a negative entry");
        sum += v;
      }
      require(std::abs(sum - 1.0) <= kKeyRowTol, ErrorKind::InvalidArgument,
              "KL store key row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

std::string RepresentationStore::serialize() const {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  require(dim_ <= kMax && size() <= kMax && num_labels_ <= kMax, ErrorKind::Dimension,
          "store too large for file format");
  ByteWriter w;
  w.bytes(kStoreMagic);
  w.u16(kStoreVersion);
  w.u8(static_cast<std::uint8_t>(metric_));
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u32(static_cast<std::uint32_t>(size()));
  w.u32(static_cast<std::uint32_t>(num_labels_));
  w.u64(fingerprint_);
  for (float k : keys_) w.f32(k);
  for (auto y : labels_) w.u32(y);
  return w.take();
}

RepresentationStore RepresentationStore::parse(std::string_view bytes) {
  ByteReader r(bytes, "store");
  require(r.remaining() >= 4 && r.bytes(4) == kStoreMagic, ErrorKind::Corrupt, "corrupt store: bad magic");
  const std::uint16_t version = r.u16();
  require(version == kStoreVersion, ErrorKind::Corrupt, "corrupt store: unsupported version " + std::to_string(version));
  const std::uint8_t metric = r.u8();
  require(metric <= 1, ErrorKind::Corrupt, "corrupt store: unknown metric tag " + std::to_string(metric));
  const std::size_t dim = r.u32();
  const std::size_t n = r.u32();
  const std::size_t c = r.u32();
  const std::uint64_t fingerprint = r.u64();
  require(dim > 0 && c > 0, ErrorKind::Corrupt, "corrupt store: zero dimension");
  r.need(n * dim * 4 + n * 4);
  std::vector<float> keys(n * dim);
  for (float& k : keys) k = r.f32();
  std::vector<std::uint32_t> labels(n);
  for (auto& y : labels) y = r.u32();
  r.expect_end();
  try {
    return RepresentationStore(static_cast<Metric>(metric), dim, c, fingerprint, std::move(keys), std::move(labels));
  } catch (const Error& e) {
    fail(ErrorKind::Corrupt, std::string("corrupt store: ") + e.what());
  }
}

void RepresentationStore::write(const std::filesystem::path& path) const { write_file(path, serialize()); }

RepresentationStore RepresentationStore::read(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string export_tsv(const RepresentationStore& store) {
  std::string out = "label";
  for (std::size_t j = 0; j < store.dim(); ++j) out += "\tk" + std::to_string(j);
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < store.size(); ++i) {
    out += std::to_string(store.label(i));
    for (float v : store.key(i)) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out += '\t';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

}  // namespace dknn
