// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ja4ml/bytes.hpp"

namespace ja4ml {

enum class Transport { Tcp, UdpQuic };

std::string_view to_string(Transport t);

namespace ext {
inline constexpr std::uint16_t kServerName = 0x0000;
inline constexpr std::uint16_t kSignatureAlgorithms = 0x000d;
inline constexpr std::uint16_t kAlpn = 0x0010;
inline constexpr std::uint16_t kSupportedVersions = 0x002b;
} // namespace ext

struct Extension {
  std::uint16_t type = 0;
  Bytes body;

  friend bool operator==(const Extension &, const Extension &) = default;
};

/// Decoded TLS ClientHello. Everything the wire carries is kept, in wire
/// order, including GREASE code points and duplicated extensions.
struct ClientHello {
  std::uint16_t legacy_version = 0;
  std::array<std::uint8_t, 32> random{};
  Bytes session_id;
  std::vector<std::uint16_t> cipher_suites;
  Bytes compression_methods;
  /// False when the hello ends after compression_methods (no extensions block).
  bool has_extensions_block = false;
  std::vector<Extension> extensions;

  std::optional<std::string> sni_hostname;
  std::vector<Bytes> alpn_protocols;
  std::vector<std::uint16_t> signature_algorithms;
  std::vector<std::uint16_t> supported_versions;
  Transport transport = Transport::Tcp;

  bool has_extension(std::uint16_t type) const;

  friend bool operator==(const ClientHello &, const ClientHello &) = default;
};

/// The sixteen reserved GREASE code points (0x0a0a, 0x1a1a, ... 0xfafa).
inline constexpr std::array<std::uint16_t, 16> kGreaseValues = {
    0x0a0a, 0x1a1a, 0x2a2a, 0x3a3a, 0x4a4a, 0x5a5a, 0x6a6a, 0x7a7a,
    0x8a8a, 0x9a9a, 0xaaaa, 0xbaba, 0xcaca, 0xdada, 0xeaea, 0xfafa,
};

constexpr bool is_grease(std::uint16_t code) noexcept {
  return (code & 0x0f0f) == 0x0a0a && (code >> 8) == (code & 0xff);
}

/// Parses a handshake message that starts at the handshake type byte (0x01).
/// The 3-byte handshake length must cover the buffer exactly. Throws
/// ParseError naming the field and offset on any violation.
ClientHello parse_clienthello(ByteView bytes, Transport transport);

/// Wire encoding of the raw fields (version, random, session id, ciphers,
/// compression, extension bodies). Decoded convenience fields are ignored, so
/// callers that edit extensions should re-parse the result.
Bytes serialize_clienthello(const ClientHello &hello);

/// Extension body builders for the decoded extensions.
Bytes server_name_body(std::string_view hostname);
Bytes alpn_body(const std::vector<Bytes> &protocols);
Bytes code_list_body16(const std::vector<std::uint16_t> &codes); // u16 length prefix
Bytes code_list_body8(const std::vector<std::uint16_t> &codes);  // u8 length prefix

} // namespace ja4ml
