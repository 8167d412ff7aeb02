// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/bytes.hpp"

#include <array>
#include <cctype>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include "ja4ml/error.hpp"

namespace ja4ml {

ParseError::ParseError(std::string field, std::size_t offset, const std::string &what)
    : Error(fmt::format("{} at offset {}: {}", field, offset, what)), field_(std::move(field)),
      offset_(offset) {}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

} // namespace

Bytes from_hex(std::string_view text) {
  Bytes out;
  out.reserve(text.size() / 2);
  int pending = -1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    const int v = hex_value(c);
    if (v < 0) throw ParseError("hex", i, fmt::format("invalid hex character '{}'", c));
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(pending << 4 | v));
      pending = -1;
    }
  }
  if (pending >= 0) throw ParseError("hex", text.size(), "odd number of hex digits");
  return out;
}

std::string to_hex(ByteView bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

std::string hex16(std::uint16_t value) { return fmt::format("{:04x}", value); }

std::string sha256_hex(std::string_view text) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  return to_hex(ByteView(digest.data(), len));
}

void ByteReader::need(std::size_t n, const char *field) const {
  if (remaining() < n) {
    throw ParseError(field, offset(),
                     fmt::format("needs {} bytes, only {} available", n, remaining()));
  }
}

std::uint8_t ByteReader::u8(const char *field) {
  need(1, field);
  return data_[pos_++];
}

std::uint16_t ByteReader::u16(const char *field) {
  need(2, field);
  const auto v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u24(const char *field) {
  need(3, field);
  const auto v = static_cast<std::uint32_t>(data_[pos_] << 16 | data_[pos_ + 1] << 8 | data_[pos_ + 2]);
  pos_ += 3;
  return v;
}

ByteView ByteReader::take(std::size_t n, const char *field) {
  need(n, field);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

ByteReader ByteReader::vec8(const char *field) {
  const std::size_t len = u8(field);
  const std::size_t at = offset();
  return ByteReader(take(len, field), at);
}

ByteReader ByteReader::vec16(const char *field) {
  const std::size_t len = u16(field);
  const std::size_t at = offset();
  return ByteReader(take(len, field), at);
}

} // namespace ja4ml
