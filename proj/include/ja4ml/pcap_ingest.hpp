// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ja4ml/bytes.hpp"
#include "ja4ml/clienthello.hpp"

namespace ja4ml {

enum class SourceKind { PcapFile, HexString, RawBytes };

namespace linktype {
inline constexpr std::uint32_t kEthernet = 1;
inline constexpr std::uint32_t kRawIp = 101;
inline constexpr std::uint32_t kLinuxCooked = 113;
} // namespace linktype

/// Where candidate handshakes come from. For pcap files `origin` is the path
/// and `link_type` is filled in when the global header is read. Hex and raw
/// sources carry their bytes inline and a transport tag (QUIC hellos enter
/// only this way, as already-decrypted handshake bytes).
struct CaptureSource {
  SourceKind kind = SourceKind::PcapFile;
  std::string origin;
  std::uint32_t link_type = 0;
  Transport transport = Transport::Tcp;
  Bytes inline_bytes;

  static CaptureSource pcap_file(std::string path);
  static CaptureSource hex_string(std::string text, Transport transport = Transport::Tcp);
  static CaptureSource raw_bytes(Bytes bytes, Transport transport = Transport::Tcp);
};

/// Directional 5-tuple of the packet that carried the candidate.
struct FlowId {
  std::string src_addr;
  std::string dst_addr;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Transport transport = Transport::Tcp;

  /// "192.0.2.10:50000->198.51.100.20:443/tcp"
  std::string to_string() const;
  /// First 16 hex chars of SHA-256 over to_string().
  std::string digest() const;

  friend bool operator==(const FlowId &, const FlowId &) = default;
};

struct HandshakeCandidate {
  FlowId flow;
  Bytes payload;
  Transport transport = Transport::Tcp;
};

/// Streams candidates out of a capture source: per flow, the first TCP
/// payload that opens with a TLS handshake record, extended with the
/// in-sequence segments that follow from the same side until the records
/// cover the whole handshake message. Non-TLS flows and UDP traffic in pcaps
/// are skipped. The reader is single-pass and deterministic; candidates are
/// yielded when complete, incomplete ones at end of capture.
class CaptureReader {
public:
  explicit CaptureReader(CaptureSource source);
  ~CaptureReader();
  CaptureReader(CaptureReader &&) noexcept;
  CaptureReader &operator=(CaptureReader &&) noexcept;

  std::optional<HandshakeCandidate> next();

  const CaptureSource &source() const noexcept { return source_; }
  std::uint64_t packets_read() const noexcept { return packets_; }

private:
  std::optional<HandshakeCandidate> next_from_pcap();
  void decode_frame(ByteView frame);
  void flush_pending();

  CaptureSource source_;
  std::unique_ptr<std::ifstream> file_;
  bool swapped_ = false;
  bool inline_done_ = false;
  std::uint64_t offset_ = 0;
  std::uint64_t packets_ = 0;
  struct Pending {
    HandshakeCandidate candidate;
    std::uint32_t next_seq = 0;
    std::uint64_t order = 0;
  };

  std::set<std::string> seen_flows_;
  std::map<std::string, Pending> pending_;
  std::deque<HandshakeCandidate> ready_;
  std::uint64_t pending_counter_ = 0;
  bool eof_ = false;
};

/// Opens and validates the source (magic number, link type) and returns a reader.
CaptureReader open_capture(CaptureSource source);

/// Convenience: drains a reader.
std::vector<HandshakeCandidate> read_candidates(CaptureSource source);

/// Returns the ClientHello handshake message (starting at type byte 0x01),
/// reassembled from consecutive TLS records of the candidate payload when
/// fragmented. The returned size always equals 4 + the declared handshake
/// length. QUIC candidates carry bare handshake bytes without record framing.
Bytes extract_clienthello_bytes(const HandshakeCandidate &candidate);

} // namespace ja4ml
