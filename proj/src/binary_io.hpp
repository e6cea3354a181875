#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camboost/error.hpp"

namespace camboost::detail {

static_assert(std::endian::native == std::endian::little, "containers are little-endian");

class ByteWriter {
 public:
  void magic(std::string_view tag) { raw(tag.data(), tag.size()); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64s(std::span<const double> values) { raw(values.data(), values.size() * sizeof(double)); }

  const std::vector<char>& bytes() const noexcept { return bytes_; }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const char> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void expect_magic(std::string_view tag) {
    need(tag.size());
    if (std::string_view(bytes_.data() + pos_, tag.size()) != tag) {
      throw FormatError(what_ + ": bad magic, expected " + std::string(tag));
    }
    pos_ += tag.size();
  }
  std::uint8_t u8() { return pod<std::uint8_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  void f64s(std::span<double> out) {
    need(out.size() * sizeof(double));
    std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  void expect_end() const {
    if (!at_end()) throw FormatError(what_ + ": trailing bytes");
  }

 private:
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(what_ + ": truncated");
  }

  std::span<const char> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, std::span<const char> bytes);
std::vector<char> read_file(const std::filesystem::path& path);

}  // namespace camboost::detail
