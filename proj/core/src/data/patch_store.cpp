#include "pyrofocus/data/patch_store.hpp"

#include "pyrofocus/data/binary_io.hpp"

namespace pyrofocus::data {

void save_partition(const Partition& partition, const std::filesystem::path& path) {
  ByteWriter w;
  w.magic("PFPS");
  w.u32(kPatchStoreVersion);
  w.u32(static_cast<std::uint32_t>(partition.size()));
  const auto& ps = partition.patches();
  const std::uint32_t c = ps.empty() ? 0 : static_cast<std::uint32_t>(ps.front().channels);
  const std::uint32_t h = ps.empty() ? kPatchHeight : static_cast<std::uint32_t>(ps.front().height);
  const std::uint32_t wd = ps.empty() ? kPatchWidth : static_cast<std::uint32_t>(ps.front().width);
  w.u32(c);
  w.u32(h);
  w.u32(wd);
  for (const auto& p : ps) {
    if (p.channels != c || p.height != h || p.width != wd) throw DataError("patch store requires uniform patch dims");
    w.u32(p.scene_id);
    w.u32(static_cast<std::uint32_t>(p.row));
    w.u32(static_cast<std::uint32_t>(p.col));
    w.u8(static_cast<std::uint8_t>(p.label));
    w.array<float>(p.data);
    w.array<std::uint8_t>(p.class_mask);
    w.array<float>(p.frp);
  }
  write_file(path, w.buffer());
}

Partition load_partition(const std::filesystem::path& path, SplitKind kind) {
  const auto bytes = read_file(path);
  ByteReader r(bytes);
  r.expect_magic("PFPS");
  const auto version = r.u32();
  if (version != kPatchStoreVersion) {
    throw FormatError("unsupported patch store version " + std::to_string(version), r.offset() - 4);
  }
  const auto count = r.u32();
  const auto c = r.u32(), h = r.u32(), w = r.u32();
  std::vector<Patch> patches;
  patches.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Patch p;
    p.scene_id = r.u32();
    p.row = r.u32();
    p.col = r.u32();
    const auto label = r.u8();
    if (label >= kNumClasses) throw FormatError("bad patch label", r.offset() - 1);
    p.label = static_cast<FireClass>(label);
    p.channels = c;
    p.height = h;
    p.width = w;
    p.data = r.array<float>(static_cast<std::uint64_t>(c) * h * w, "patch data");
    p.class_mask = r.array<std::uint8_t>(static_cast<std::uint64_t>(h) * w, "patch mask");
    p.frp = r.array<float>(static_cast<std::uint64_t>(h) * w, "patch FRP");
    patches.push_back(std::move(p));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in patch store", r.offset());
  return Partition(kind, std::move(patches));
}

}  // namespace pyrofocus::data
