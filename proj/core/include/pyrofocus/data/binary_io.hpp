#pragma once

// Little-endian helpers shared by the MSF, patch store and checkpoint codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pyrofocus/errors.hpp"

namespace pyrofocus::data {

static_assert(std::endian::native == std::endian::little, "codecs assume a little-endian host");

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buffer_.insert(buffer_.end(), p, p + n);
  }
  void magic(std::string_view m) { bytes(m.data(), m.size()); }
  void u8(std::uint8_t v) { buffer_.push_back(v); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  template <typename T>
  void array(std::span<const T> values) {
    bytes(values.data(), values.size_bytes());
  }
  std::vector<std::uint8_t>& buffer() { return buffer_; }

 private:
  std::vector<std::uint8_t> buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint64_t offset() const { return offset_; }
  std::size_t remaining() const { return data_.size() - offset_; }

  void expect_magic(std::string_view magic) {
    need(magic.size(), "magic");
    if (std::memcmp(data_.data() + offset_, magic.data(), magic.size()) != 0) {
      std::string got(reinterpret_cast<const char*>(data_.data() + offset_), magic.size());
      throw FormatError("bad magic \"" + got + "\", expected \"" + std::string(magic) + "\"", offset_);
    }
    offset_ += magic.size();
  }
  std::uint8_t u8() {
    need(1, "u8");
    return data_[offset_++];
  }
  std::uint32_t u32() { return scalar<std::uint32_t>("u32"); }
  std::uint64_t u64() { return scalar<std::uint64_t>("u64"); }
  template <typename T>
  std::vector<T> array(std::uint64_t count, const char* what) {
    if (count > remaining() / sizeof(T)) {
      throw FormatError(std::string("truncated ") + what + ": need " + std::to_string(count) + " x " +
                            std::to_string(sizeof(T)) + " bytes, " + std::to_string(remaining()) + " left",
                        offset_);
    }
    std::vector<T> out(static_cast<std::size_t>(count));
    std::memcpy(out.data(), data_.data() + offset_, out.size() * sizeof(T));
    offset_ += out.size() * sizeof(T);
    return out;
  }
  std::string string(std::uint64_t length, const char* what) {
    auto chars = array<char>(length, what);
    return {chars.begin(), chars.end()};
  }

 private:
  template <typename T>
  T scalar(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, data_.data() + offset_, sizeof v);
    offset_ += sizeof v;
    return v;
  }
  void need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw FormatError(std::string("truncated file while reading ") + what, offset_);
    }
  }

  std::span<const std::uint8_t> data_;
  std::uint64_t offset_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// FNV-1a, used for content fingerprints and prediction hashes.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace pyrofocus::data
