// SPDX-License-Identifier: Apache-2.0
// Test-only ClientHello encoder, written independently of the library's
// serializer so round-trip checks compare two implementations.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ja4ml::testing {

using Buf = std::vector<std::uint8_t>;

struct HelloSpec {
  std::uint16_t legacy_version = 0x0303;
  Buf random = Buf(32, 0x11);
  Buf session_id = Buf(32, 0x22);
  std::vector<std::uint16_t> ciphers;
  Buf compression = {0x00};
  bool with_extensions = true;
  std::vector<std::pair<std::uint16_t, Buf>> extensions;
};

Buf encode_hello(const HelloSpec &spec);

Buf sni_body(const std::string &host);
Buf alpn_body(const std::vector<std::string> &protocols);
Buf sigalgs_body(const std::vector<std::uint16_t> &algs);
Buf versions_body(const std::vector<std::uint16_t> &versions);
Buf groups_body(const std::vector<std::uint16_t> &groups);

/// Wraps a handshake message in TLS records of at most `max_fragment` bytes.
Buf tls_records(const Buf &handshake, std::size_t max_fragment = 0x4000);

/// A small browser-like spec with GREASE, SNI, ALPN h2 and signature algorithms.
HelloSpec browser_spec();

} // namespace ja4ml::testing
