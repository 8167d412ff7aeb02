// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/clienthello.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ja4ml/error.hpp"

namespace ja4ml {

std::string_view to_string(Transport t) { return t == Transport::Tcp ? "tcp" : "udp-quic"; }

bool ClientHello::has_extension(std::uint16_t type) const {
  return std::any_of(extensions.begin(), extensions.end(),
                     [type](const Extension &e) { return e.type == type; });
}

namespace {

void expect_consumed(const ByteReader &r, const char *field) {
  if (!r.empty()) {
    throw ParseError(field, r.offset(), fmt::format("{} unexpected trailing bytes", r.remaining()));
  }
}

std::vector<std::uint16_t> read_code_list(ByteReader list, const char *field) {
  if (list.remaining() % 2 != 0) {
    throw ParseError(field, list.offset(), "odd length for a list of 16-bit codes");
  }
  std::vector<std::uint16_t> codes;
  codes.reserve(list.remaining() / 2);
  while (!list.empty()) codes.push_back(list.u16(field));
  return codes;
}

// server_name: list of (name_type, opaque<1..2^16-1>); host_name is type 0.
void decode_server_name(ByteReader body, ClientHello &hello) {
  auto list = body.vec16("server_name.list");
  expect_consumed(body, "server_name");
  while (!list.empty()) {
    const auto name_type = list.u8("server_name.name_type");
    auto name = list.vec16("server_name.host_name");
    if (name_type == 0 && !hello.sni_hostname) {
      auto raw = name.take(name.remaining(), "server_name.host_name");
      hello.sni_hostname.emplace(raw.begin(), raw.end());
    }
  }
}

void decode_alpn(ByteReader body, ClientHello &hello) {
  auto list = body.vec16("alpn.protocol_name_list");
  expect_consumed(body, "alpn");
  while (!list.empty()) {
    auto proto = list.vec8("alpn.protocol_name");
    auto raw = proto.take(proto.remaining(), "alpn.protocol_name");
    hello.alpn_protocols.emplace_back(raw.begin(), raw.end());
  }
}

void decode_signature_algorithms(ByteReader body, ClientHello &hello) {
  auto list = body.vec16("signature_algorithms.list");
  expect_consumed(body, "signature_algorithms");
  hello.signature_algorithms = read_code_list(list, "signature_algorithms.list");
}

void decode_supported_versions(ByteReader body, ClientHello &hello) {
  auto list = body.vec8("supported_versions.list");
  expect_consumed(body, "supported_versions");
  hello.supported_versions = read_code_list(list, "supported_versions.list");
}

// Only the first occurrence of a known extension feeds the decoded fields;
// duplicates stay in `extensions` untouched.
void decode_known(const Extension &e, std::size_t body_offset, ClientHello &hello,
                  std::uint32_t &seen) {
  auto once = [&seen](std::uint32_t bit) {
    if (seen & bit) return false;
    seen |= bit;
    return true;
  };
  ByteReader body(e.body, body_offset);
  switch (e.type) {
  case ext::kServerName:
    if (once(1)) decode_server_name(body, hello);
    break;
  case ext::kAlpn:
    if (once(2)) decode_alpn(body, hello);
    break;
  case ext::kSignatureAlgorithms:
    if (once(4)) decode_signature_algorithms(body, hello);
    break;
  case ext::kSupportedVersions:
    if (once(8)) decode_supported_versions(body, hello);
    break;
  default:
    break;
  }
}

} // namespace

ClientHello parse_clienthello(ByteView bytes, Transport transport) {
  ByteReader r(bytes);
  const auto type = r.u8("handshake_type");
  if (type != 0x01) {
    throw ParseError("handshake_type", 0, fmt::format("expected 0x01 (ClientHello), got 0x{:02x}", type));
  }
  const std::size_t declared = r.u24("handshake_length");
  if (declared != r.remaining()) {
    throw ParseError("handshake_length", 1,
                     fmt::format("declares {} bytes but {} follow", declared, r.remaining()));
  }

  ClientHello hello;
  hello.transport = transport;
  hello.legacy_version = r.u16("legacy_version");
  auto random = r.take(32, "random");
  std::copy(random.begin(), random.end(), hello.random.begin());

  auto session = r.vec8("session_id");
  if (session.remaining() > 32) {
    throw ParseError("session_id", session.offset() - 1,
                     fmt::format("length {} exceeds 32", session.remaining()));
  }
  auto sid = session.take(session.remaining(), "session_id");
  hello.session_id.assign(sid.begin(), sid.end());

  auto ciphers = r.vec16("cipher_suites");
  hello.cipher_suites = read_code_list(ciphers, "cipher_suites");

  auto compression = r.vec8("compression_methods");
  if (compression.empty()) {
    throw ParseError("compression_methods", compression.offset() - 1, "empty compression method list");
  }
  auto cm = compression.take(compression.remaining(), "compression_methods");
  hello.compression_methods.assign(cm.begin(), cm.end());

  if (r.empty()) return hello;

  hello.has_extensions_block = true;
  auto block = r.vec16("extensions");
  expect_consumed(r, "extensions");
  std::uint32_t seen = 0;
  while (!block.empty()) {
    Extension e;
    e.type = block.u16("extension.type");
    auto body = block.vec16("extension.length");
    const auto body_offset = body.offset();
    auto raw = body.take(body.remaining(), "extension.body");
    e.body.assign(raw.begin(), raw.end());
    decode_known(e, body_offset, hello, seen);
    hello.extensions.push_back(std::move(e));
  }
  return hello;
}

namespace {

void put16(Bytes &out, std::size_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void check_len(std::size_t n, std::size_t max, const char *field) {
  if (n > max) throw ParseError(field, 0, "too long to encode");
}

} // namespace

Bytes serialize_clienthello(const ClientHello &hello) {
  Bytes body;
  put16(body, hello.legacy_version);
  body.insert(body.end(), hello.random.begin(), hello.random.end());
  check_len(hello.session_id.size(), 32, "session_id");
  body.push_back(static_cast<std::uint8_t>(hello.session_id.size()));
  body.insert(body.end(), hello.session_id.begin(), hello.session_id.end());
  check_len(hello.cipher_suites.size() * 2, 0xfffe, "cipher_suites");
  put16(body, hello.cipher_suites.size() * 2);
  for (auto c : hello.cipher_suites) put16(body, c);
  check_len(hello.compression_methods.size(), 0xff, "compression_methods");
  body.push_back(static_cast<std::uint8_t>(hello.compression_methods.size()));
  body.insert(body.end(), hello.compression_methods.begin(), hello.compression_methods.end());
  if (hello.has_extensions_block || !hello.extensions.empty()) {
    Bytes exts;
    for (const auto &e : hello.extensions) {
      check_len(e.body.size(), 0xffff, "extension");
      put16(exts, e.type);
      put16(exts, e.body.size());
      exts.insert(exts.end(), e.body.begin(), e.body.end());
    }
    check_len(exts.size(), 0xffff, "extensions");
    put16(body, exts.size());
    body.insert(body.end(), exts.begin(), exts.end());
  }
  check_len(body.size(), 0xffffff, "handshake");
  Bytes out;
  out.reserve(body.size() + 4);
  out.push_back(0x01);
  out.push_back(static_cast<std::uint8_t>(body.size() >> 16));
  put16(out, body.size() & 0xffff);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Bytes server_name_body(std::string_view hostname) {
  Bytes out;
  put16(out, hostname.size() + 3);
  out.push_back(0x00);
  put16(out, hostname.size());
  out.insert(out.end(), hostname.begin(), hostname.end());
  return out;
}

Bytes alpn_body(const std::vector<Bytes> &protocols) {
  Bytes list;
  for (const auto &p : protocols) {
    check_len(p.size(), 0xff, "alpn");
    list.push_back(static_cast<std::uint8_t>(p.size()));
    list.insert(list.end(), p.begin(), p.end());
  }
  Bytes out;
  put16(out, list.size());
  out.insert(out.end(), list.begin(), list.end());
  return out;
}

Bytes code_list_body16(const std::vector<std::uint16_t> &codes) {
  Bytes out;
  put16(out, codes.size() * 2);
  for (auto c : codes) put16(out, c);
  return out;
}

Bytes code_list_body8(const std::vector<std::uint16_t> &codes) {
  check_len(codes.size() * 2, 0xff, "code list");
  Bytes out{static_cast<std::uint8_t>(codes.size() * 2)};
  for (auto c : codes) put16(out, c);
  return out;
}

} // namespace ja4ml
