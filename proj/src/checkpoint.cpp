#include <fstream>
#include <iterator>
#include <limits>

#include "dknn/binary_io.hpp"
#include "dknn/features.hpp"
#include "dknn/model.hpp"

namespace dknn {

namespace {
constexpr std::string_view kModelMagic = "DKNM";
constexpr std::uint16_t kModelVersion = 1;
}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

std::string serialize_checkpoint(const ModelParams& params) {
  params.check_shapes();
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  require(params.feature_dim() <= kMax && params.embed_dim() <= kMax && params.num_labels() <= kMax,
          ErrorKind::Dimension, "model too large for checkpoint format");
  ByteWriter w;
  w.bytes(kModelMagic);
  w.u16(kModelVersion);
  w.u32(static_cast<std::uint32_t>(params.feature_dim()));
  w.u32(static_cast<std::uint32_t>(params.embed_dim()));
  w.u32(static_cast<std::uint32_t>(params.num_labels()));
  params.for_each_tensor([&](const char*, std::span<const double> values) {
    for (double v : values) w.f32(static_cast<float>(v));
  });
  return w.take();
}

ModelParams parse_checkpoint(std::string_view bytes) {
  ByteReader r(bytes, "checkpoint");
  require(r.remaining() >= 4 && r.bytes(4) == kModelMagic, ErrorKind::Corrupt, "corrupt checkpoint: bad magic");
  const std::uint16_t version = r.u16();
  require(version == kModelVersion, ErrorKind::Corrupt,
          "corrupt checkpoint: unsupported version " + std::to_string(version));
  const std::size_t f = r.u32(), d = r.u32(), c = r.u32();
  require(f > 0 && d > 0 && c > 0, ErrorKind::Corrupt, "corrupt checkpoint: zero dimension");
  const std::size_t floats = f * d + d + d * c + c + c * d;
  r.need(floats * 4);
  ModelParams params = ModelParams::zeros(f, d, c);
  params.for_each_tensor([&](const char*, std::span<double> values) {
    for (double& v : values) v = static_cast<double>(r.f32());
  });
  r.expect_end();
  return params;
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  write_file(path, serialize_checkpoint(params));
}

ModelParams read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

std::uint64_t model_fingerprint(const ModelParams& params) { return fnv1a64(serialize_checkpoint(params)); }

}  // namespace dknn
