// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ja4ml {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Decodes hexadecimal text. Whitespace anywhere is ignored and digits are
/// case-insensitive; an odd digit count or a non-hex character throws
/// ParseError.
Bytes from_hex(std::string_view text);

/// Lowercase hex rendering.
std::string to_hex(ByteView bytes);

/// Four lowercase hex digits, zero-padded ("002f").
std::string hex16(std::uint16_t value);

/// Lowercase hex SHA-256 of `text`.
std::string sha256_hex(std::string_view text);

/// Big-endian cursor over a byte buffer that reports failures as ParseError
/// with an absolute offset. `base` is added to every reported offset so that
/// nested readers point into the enclosing buffer.
class ByteReader {
public:
  explicit ByteReader(ByteView data, std::size_t base = 0) : data_(data), base_(base) {}

  std::uint8_t u8(const char *field);
  std::uint16_t u16(const char *field);
  std::uint32_t u24(const char *field);
  ByteView take(std::size_t n, const char *field);

  /// Reads an 8- or 16-bit length prefix and returns a reader over the body.
  ByteReader vec8(const char *field);
  ByteReader vec16(const char *field);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool empty() const noexcept { return remaining() == 0; }
  std::size_t offset() const noexcept { return base_ + pos_; }

private:
  void need(std::size_t n, const char *field) const;

  ByteView data_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

} // namespace ja4ml
