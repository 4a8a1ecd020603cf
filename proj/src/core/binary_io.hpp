#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace spikeyolo::binio {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xffu));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

// Bounds-checked little-endian reader. Running past the end raises `code`.
class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, ErrorCode code) : bytes_(bytes), code_(code) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  void magic(const char (&tag)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0) fail(code_, std::string("bad magic, expected ") + tag);
    pos_ += 4;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail(code_, "unexpected end of data at byte " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  ErrorCode code_;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace spikeyolo::binio
