// SPDX-License-Identifier: Apache-2.0
// Test-only classic pcap writer for edge-case captures.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ja4ml::testing {

using Frame = std::vector<std::uint8_t>;

struct PcapOptions {
  bool swapped = false;    // big-endian header fields
  bool nanosecond = false; // a1b23c4d magic
  std::uint32_t link_type = 1;
};

void write_pcap(const std::filesystem::path &path, const std::vector<Frame> &frames, const PcapOptions &opts = {});

struct TcpSegment {
  std::string src = "10.0.0.1";
  std::string dst = "10.0.0.2";
  std::uint16_t sport = 40000;
  std::uint16_t dport = 443;
  std::uint32_t seq = 1;
  std::vector<std::uint8_t> payload;
  bool ipv6 = false;
  std::vector<std::uint16_t> vlan_tags; // ethernet only
  std::uint16_t frag_field = 0x4000;    // IPv4 flags/offset (DF)
};

/// Ethernet frame carrying IPv4/IPv6 + TCP.
Frame ethernet_tcp(const TcpSegment &seg);
/// Bare IP packet (link type 101).
Frame raw_ip_tcp(const TcpSegment &seg);
Frame ethernet_udp(const std::string &src, const std::string &dst, std::uint16_t sport, std::uint16_t dport,
                   const std::vector<std::uint8_t> &payload);

std::filesystem::path temp_dir(const std::string &name);

} // namespace ja4ml::testing
