#include "pyrofocus/data/msf.hpp"

#include <limits>

#include "pyrofocus/data/binary_io.hpp"

namespace pyrofocus::data {

std::vector<std::uint8_t> encode_scene(const Scene& scene) {
  scene.validate();
  const auto limit = std::numeric_limits<std::uint32_t>::max();
  if (scene.height > limit || scene.width > limit || scene.channels() > limit) {
    throw DataError("scene dimensions exceed the MSF u32 range");
  }
  std::uint32_t flags = 0;
  if (scene.frp) flags |= kMsfHasFrp;
  if (scene.class_mask) flags |= kMsfHasClassMask;
  if (scene.geolocation) flags |= kMsfHasGeolocation;

  ByteWriter w;
  w.magic({kMsfMagic, 4});
  w.u32(static_cast<std::uint32_t>(scene.height));
  w.u32(static_cast<std::uint32_t>(scene.width));
  w.u32(static_cast<std::uint32_t>(scene.channels()));
  w.u32(flags);
  w.array<float>(scene.wavelengths);
  w.array<float>(scene.bands);
  if (scene.frp) w.array<float>(*scene.frp);
  if (scene.class_mask) w.array<std::uint8_t>(*scene.class_mask);
  if (scene.geolocation) {
    w.array<double>(scene.geolocation->latitude);
    w.array<double>(scene.geolocation->longitude);
  }
  return std::move(w.buffer());
}

Scene decode_scene(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic({kMsfMagic, 4});
  Scene s;
  s.height = r.u32();
  s.width = r.u32();
  const auto dims_offset = r.offset();
  const std::uint64_t channels = r.u32();
  const std::uint32_t flags = r.u32();
  if (flags & ~std::uint32_t{kMsfHasFrp | kMsfHasClassMask | kMsfHasGeolocation}) {
    throw FormatError("unknown MSF flag bits " + std::to_string(flags), r.offset() - 4);
  }
  if (s.height == 0 || s.width == 0 || channels == 0) throw FormatError("zero MSF dimension", dims_offset - 8);
  // 64-bit products of u32 dims cannot overflow; compare against the bytes present instead.
  const std::uint64_t plane = static_cast<std::uint64_t>(s.height) * s.width;
  if (plane > r.remaining() || channels > r.remaining() / plane) {
    throw FormatError("MSF dimensions " + std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
                          std::to_string(channels) + " exceed file size",
                      dims_offset - 8);
  }
  s.wavelengths = r.array<float>(channels, "wavelengths");
  s.bands = r.array<float>(channels * plane, "band planes");
  if (flags & kMsfHasFrp) s.frp = r.array<float>(plane, "FRP plane");
  if (flags & kMsfHasClassMask) s.class_mask = r.array<std::uint8_t>(plane, "class mask");
  if (flags & kMsfHasGeolocation) {
    Geolocation g;
    g.latitude = r.array<double>(plane, "latitude plane");
    g.longitude = r.array<double>(plane, "longitude plane");
    s.geolocation = std::move(g);
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after MSF payload", r.offset());
  }
  return s;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  write_file(path, encode_scene(scene));
}

Scene load_scene(const std::filesystem::path& path) { return decode_scene(read_file(path)); }

}  // namespace pyrofocus::data
