// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "ja4ml/clienthello.hpp"

namespace ja4ml {

/// JA4 client fingerprint: `ja4_a` (10 readable chars), `ja4_b` (cipher
/// hash) and `ja4_c` (extension + signature algorithm hash), joined by '_'.
struct Ja4Fingerprint {
  std::string full;
  std::string ja4_a;
  std::string ja4_b;
  std::string ja4_c;

  friend bool operator==(const Ja4Fingerprint &, const Ja4Fingerprint &) = default;
};

Ja4Fingerprint compute_ja4(const ClientHello &hello);

/// protocol, version, SNI flag, cipher count, extension count, ALPN code.
std::string ja4_a_component(const ClientHello &hello);

/// Two-character version code; "00" for unknown versions.
std::string_view tls_version_code(std::uint16_t version);

/// Version used by the fingerprint: highest non-GREASE supported_versions
/// entry when that extension is present, otherwise legacy_version.
std::uint16_t effective_version(const ClientHello &hello);

/// Two-character ALPN code of the first ALPN entry.
std::string alpn_code(const ClientHello &hello);

/// Pre-hash inputs, exposed for diagnostics ("0035,009c,..." and
/// "0005,000a,..._0403,0804,...").
std::string ja4_b_input(const ClientHello &hello);
std::string ja4_c_input(const ClientHello &hello);

} // namespace ja4ml
