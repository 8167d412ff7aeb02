// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/ja4.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace ja4ml {

namespace {

constexpr std::size_t kHashChars = 12;
const std::string kZeroHash(kHashChars, '0');

std::string two_digits(std::size_t count) { return fmt::format("{:02d}", std::min<std::size_t>(count, 99)); }

std::string join_hex(const std::vector<std::uint16_t> &codes) {
  std::string out;
  out.reserve(codes.size() * 5);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) out.push_back(',');
    out += hex16(codes[i]);
  }
  return out;
}

std::vector<std::uint16_t> non_grease(const std::vector<std::uint16_t> &codes) {
  std::vector<std::uint16_t> out;
  out.reserve(codes.size());
  std::copy_if(codes.begin(), codes.end(), std::back_inserter(out),
               [](std::uint16_t c) { return !is_grease(c); });
  return out;
}

std::size_t non_grease_extension_count(const ClientHello &hello) {
  return static_cast<std::size_t>(std::count_if(hello.extensions.begin(), hello.extensions.end(),
                                                [](const Extension &e) { return !is_grease(e.type); }));
}

// Extensions hashed into ja4_c: non-GREASE, minus SNI and ALPN, sorted.
std::vector<std::uint16_t> hashed_extensions(const ClientHello &hello) {
  std::vector<std::uint16_t> out;
  for (const auto &e : hello.extensions) {
    if (is_grease(e.type) || e.type == ext::kServerName || e.type == ext::kAlpn) continue;
    out.push_back(e.type);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string truncated_hash(const std::string &input) { return sha256_hex(input).substr(0, kHashChars); }

bool is_alnum(std::uint8_t b) { return std::isalnum(b) && b < 0x80; }

} // namespace

std::string_view tls_version_code(std::uint16_t version) {
  switch (version) {
  case 0x0304: return "13";
  case 0x0303: return "12";
  case 0x0302: return "11";
  case 0x0301: return "10";
  case 0x0300: return "s3";
  case 0x0002: return "s2";
  default: return "00";
  }
}

std::uint16_t effective_version(const ClientHello &hello) {
  if (!hello.has_extension(ext::kSupportedVersions)) return hello.legacy_version;
  const auto versions = non_grease(hello.supported_versions);
  if (versions.empty()) return hello.legacy_version;
  return *std::max_element(versions.begin(), versions.end());
}

std::string alpn_code(const ClientHello &hello) {
  if (hello.alpn_protocols.empty() || hello.alpn_protocols.front().empty()) return "00";
  const auto &proto = hello.alpn_protocols.front();
  const std::uint8_t first = proto.front();
  const std::uint8_t last = proto.back();
  if (is_alnum(first) && is_alnum(last)) {
    return {static_cast<char>(first), static_cast<char>(last)};
  }
  const auto first_hex = fmt::format("{:02x}", first);
  const auto last_hex = fmt::format("{:02x}", last);
  return {first_hex.front(), last_hex.back()};
}

std::string ja4_a_component(const ClientHello &hello) {
  std::string out;
  out.reserve(10);
  out.push_back(hello.transport == Transport::UdpQuic ? 'q' : 't');
  out += tls_version_code(effective_version(hello));
  out.push_back(hello.has_extension(ext::kServerName) ? 'd' : 'i');
  out += two_digits(non_grease(hello.cipher_suites).size());
  out += two_digits(non_grease_extension_count(hello));
  out += alpn_code(hello);
  return out;
}

std::string ja4_b_input(const ClientHello &hello) {
  auto ciphers = non_grease(hello.cipher_suites);
  std::sort(ciphers.begin(), ciphers.end());
  return join_hex(ciphers);
}

std::string ja4_c_input(const ClientHello &hello) {
  auto out = join_hex(hashed_extensions(hello));
  const auto sigalgs = non_grease(hello.signature_algorithms);
  if (!sigalgs.empty()) {
    out.push_back('_');
    out += join_hex(sigalgs);
  }
  return out;
}

Ja4Fingerprint compute_ja4(const ClientHello &hello) {
  Ja4Fingerprint fp;
  fp.ja4_a = ja4_a_component(hello);
  fp.ja4_b = non_grease(hello.cipher_suites).empty() ? kZeroHash : truncated_hash(ja4_b_input(hello));
  fp.ja4_c = hashed_extensions(hello).empty() ? kZeroHash : truncated_hash(ja4_c_input(hello));
  fp.full = fp.ja4_a + "_" + fp.ja4_b + "_" + fp.ja4_c;
  return fp;
}

} // namespace ja4ml
