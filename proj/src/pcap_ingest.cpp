// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/pcap_ingest.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <array>
#include <cstring>

#include <fmt/format.h>

#include "ja4ml/error.hpp"

namespace ja4ml {

namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicMicroSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::uint32_t kMagicNanoSwapped = 0x4d3cb2a1;
constexpr std::uint32_t kMagicPcapng = 0x0a0d0d0a;

constexpr std::size_t kGlobalHeaderSize = 24;
constexpr std::size_t kRecordHeaderSize = 16;
constexpr std::uint32_t kMaxRecordSize = 256u * 1024u * 1024u;
constexpr std::size_t kMaxRecordFragment = 0x4000;

constexpr std::uint8_t kContentHandshake = 0x16;
constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

std::uint32_t load_le32(const std::uint8_t *p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

std::uint16_t load_be16(const std::uint8_t *p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }

std::string ipv4_text(const std::uint8_t *p) {
  char buf[INET_ADDRSTRLEN];
  inet_ntop(AF_INET, p, buf, sizeof buf);
  return buf;
}

std::string ipv6_text(const std::uint8_t *p) {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(AF_INET6, p, buf, sizeof buf);
  return buf;
}

bool looks_like_tls_handshake(ByteView payload) {
  return payload.size() >= 6 && payload[0] == kContentHandshake && payload[1] == 0x03;
}

// Bidirectional key so that the server's reply lands in the same flow.
std::string canonical_flow_key(const FlowId &f) {
  auto a = fmt::format("{}|{}", f.src_addr, f.src_port);
  auto b = fmt::format("{}|{}", f.dst_addr, f.dst_port);
  if (b < a) std::swap(a, b);
  return fmt::format("{}#{}#{}", a, b, to_string(f.transport));
}

Bytes frame_handshake(ByteView handshake) {
  Bytes out;
  std::size_t pos = 0;
  do {
    const auto n = std::min(kMaxRecordFragment, handshake.size() - pos);
    out.push_back(kContentHandshake);
    out.push_back(0x03);
    out.push_back(0x01);
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n & 0xff));
    out.insert(out.end(), handshake.begin() + static_cast<std::ptrdiff_t>(pos),
               handshake.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
  } while (pos < handshake.size());
  return out;
}

struct L4 {
  FlowId flow;
  std::uint8_t protocol = 0;
  std::uint32_t seq = 0;
  ByteView payload;
};

// Max bytes buffered per flow while waiting for the rest of a ClientHello.
constexpr std::size_t kMaxReassembly = 1u << 20;

// True once the handshake records in `payload` cover the declared handshake
// length, or when the bytes can no longer become a valid ClientHello (the
// extractor then reports the problem).
bool handshake_complete(ByteView payload) {
  std::size_t pos = 0, have = 0;
  std::optional<std::size_t> need;
  std::array<std::uint8_t, 4> head{};
  while (pos + 5 <= payload.size()) {
    if (payload[pos] != kContentHandshake) return true;
    const std::size_t len = load_be16(payload.data() + pos + 3);
    const std::size_t avail = std::min(len, payload.size() - pos - 5);
    for (std::size_t i = 0; i < avail && have + i < 4; ++i) head[have + i] = payload[pos + 5 + i];
    have += avail;
    if (!need && have >= 4) {
      need = 4 + (static_cast<std::size_t>(head[1]) << 16 | static_cast<std::size_t>(head[2]) << 8 | head[3]);
    }
    if (need && have >= *need) return true;
    if (avail < len) return false;
    pos += 5 + len;
  }
  return false;
}

std::optional<L4> decode_transport(std::uint8_t protocol, ByteView seg, L4 l4) {
  l4.protocol = protocol;
  if (protocol == kProtoTcp) {
    if (seg.size() < 20) return std::nullopt;
    const std::size_t header = static_cast<std::size_t>(seg[12] >> 4) * 4;
    if (header < 20 || header > seg.size()) return std::nullopt;
    l4.flow.src_port = load_be16(seg.data());
    l4.flow.dst_port = load_be16(seg.data() + 2);
    l4.flow.transport = Transport::Tcp;
    l4.seq = static_cast<std::uint32_t>(seg[4]) << 24 | static_cast<std::uint32_t>(seg[5]) << 16 |
             static_cast<std::uint32_t>(seg[6]) << 8 | seg[7];
    l4.payload = seg.subspan(header);
    return l4;
  }
  if (protocol == kProtoUdp) {
    if (seg.size() < 8) return std::nullopt;
    l4.flow.src_port = load_be16(seg.data());
    l4.flow.dst_port = load_be16(seg.data() + 2);
    l4.flow.transport = Transport::UdpQuic;
    l4.payload = seg.subspan(8);
    return l4;
  }
  return std::nullopt;
}

std::optional<L4> decode_ipv4(ByteView pkt) {
  if (pkt.size() < 20) return std::nullopt;
  const std::size_t ihl = static_cast<std::size_t>(pkt[0] & 0x0f) * 4;
  std::size_t total = load_be16(pkt.data() + 2);
  if (ihl < 20 || ihl > pkt.size()) return std::nullopt;
  if (total < ihl) return std::nullopt;
  total = std::min(total, pkt.size());
  const std::uint16_t frag = load_be16(pkt.data() + 6);
  if ((frag & 0x3fff) != 0) return std::nullopt; // fragmented datagrams are not reassembled
  L4 l4;
  l4.flow.src_addr = ipv4_text(pkt.data() + 12);
  l4.flow.dst_addr = ipv4_text(pkt.data() + 16);
  return decode_transport(pkt[9], pkt.subspan(ihl, total - ihl), std::move(l4));
}

std::optional<L4> decode_ipv6(ByteView pkt) {
  if (pkt.size() < 40) return std::nullopt;
  const std::size_t plen = load_be16(pkt.data() + 4);
  std::uint8_t next = pkt[6];
  L4 l4;
  l4.flow.src_addr = ipv6_text(pkt.data() + 8);
  l4.flow.dst_addr = ipv6_text(pkt.data() + 24);
  auto rest = pkt.subspan(40, std::min(plen, pkt.size() - 40));
  // hop-by-hop, routing, destination options; fragments are skipped
  while (next == 0 || next == 43 || next == 60) {
    if (rest.size() < 8) return std::nullopt;
    const std::size_t len = (static_cast<std::size_t>(rest[1]) + 1) * 8;
    if (len > rest.size()) return std::nullopt;
    next = rest[0];
    rest = rest.subspan(len);
  }
  return decode_transport(next, rest, std::move(l4));
}

std::optional<L4> decode_ip(ByteView pkt) {
  if (pkt.empty()) return std::nullopt;
  switch (pkt[0] >> 4) {
  case 4: return decode_ipv4(pkt);
  case 6: return decode_ipv6(pkt);
  default: return std::nullopt;
  }
}

std::optional<L4> decode_ethertype(std::uint16_t type, ByteView pkt) {
  // 802.1Q / 802.1ad tags
  while (type == 0x8100 || type == 0x88a8) {
    if (pkt.size() < 4) return std::nullopt;
    type = load_be16(pkt.data() + 2);
    pkt = pkt.subspan(4);
  }
  if (type == 0x0800 || type == 0x86dd) return decode_ip(pkt);
  return std::nullopt;
}

} // namespace

CaptureSource CaptureSource::pcap_file(std::string path) {
  CaptureSource s;
  s.kind = SourceKind::PcapFile;
  s.origin = std::move(path);
  return s;
}

CaptureSource CaptureSource::hex_string(std::string text, Transport transport) {
  CaptureSource s;
  s.kind = SourceKind::HexString;
  s.inline_bytes = from_hex(text);
  s.origin = std::move(text);
  s.transport = transport;
  return s;
}

CaptureSource CaptureSource::raw_bytes(Bytes bytes, Transport transport) {
  CaptureSource s;
  s.kind = SourceKind::RawBytes;
  s.origin = "raw";
  s.inline_bytes = std::move(bytes);
  s.transport = transport;
  return s;
}

std::string FlowId::to_string() const {
  return fmt::format("{}:{}->{}:{}/{}", src_addr, src_port, dst_addr, dst_port, ja4ml::to_string(transport));
}

std::string FlowId::digest() const { return sha256_hex(to_string()).substr(0, 16); }

CaptureReader::CaptureReader(CaptureSource source) : source_(std::move(source)) {
  if (source_.kind != SourceKind::PcapFile) return;

  file_ = std::make_unique<std::ifstream>(source_.origin, std::ios::binary);
  if (!*file_) throw CaptureError(fmt::format("cannot open capture '{}'", source_.origin));

  std::array<std::uint8_t, kGlobalHeaderSize> header{};
  file_->read(reinterpret_cast<char *>(header.data()), header.size());
  const auto got = static_cast<std::size_t>(file_->gcount());
  if (got >= 4 && load_le32(header.data()) == kMagicPcapng) {
    throw CaptureError(fmt::format("'{}' is pcapng; only classic pcap is supported", source_.origin));
  }
  if (got < kGlobalHeaderSize) {
    throw CaptureError(fmt::format("'{}': truncated pcap global header at offset {}", source_.origin, got));
  }
  const auto magic = load_le32(header.data());
  switch (magic) {
  case kMagicMicro:
  case kMagicNano: swapped_ = false; break;
  case kMagicMicroSwapped:
  case kMagicNanoSwapped: swapped_ = true; break;
  default:
    throw CaptureError(fmt::format("'{}': bad pcap magic 0x{:08x}", source_.origin, magic));
  }
  auto field = [&](std::size_t at) {
    const auto v = load_le32(header.data() + at);
    return swapped_ ? byteswap32(v) : v;
  };
  source_.link_type = field(20) & 0x0fffffff;
  if (source_.link_type != linktype::kEthernet && source_.link_type != linktype::kRawIp &&
      source_.link_type != linktype::kLinuxCooked) {
    throw CaptureError(fmt::format("'{}': unsupported link type {}", source_.origin, source_.link_type));
  }
  offset_ = kGlobalHeaderSize;
}

CaptureReader::~CaptureReader() = default;
CaptureReader::CaptureReader(CaptureReader &&) noexcept = default;
CaptureReader &CaptureReader::operator=(CaptureReader &&) noexcept = default;

std::optional<HandshakeCandidate> CaptureReader::next() {
  if (source_.kind == SourceKind::PcapFile) return next_from_pcap();
  if (inline_done_) return std::nullopt;
  inline_done_ = true;
  if (source_.inline_bytes.empty()) return std::nullopt;

  HandshakeCandidate c;
  c.transport = source_.transport;
  c.flow.src_addr = source_.kind == SourceKind::HexString ? "hex" : "raw";
  c.flow.dst_addr = "inline";
  c.flow.transport = source_.transport;
  if (source_.transport == Transport::Tcp && source_.inline_bytes.front() == 0x01) {
    c.payload = frame_handshake(source_.inline_bytes);
  } else {
    c.payload = source_.inline_bytes;
  }
  return c;
}

std::optional<HandshakeCandidate> CaptureReader::next_from_pcap() {
  Bytes frame;
  while (ready_.empty() && !eof_) {
    std::array<std::uint8_t, kRecordHeaderSize> rec{};
    file_->read(reinterpret_cast<char *>(rec.data()), rec.size());
    const auto got = static_cast<std::size_t>(file_->gcount());
    if (got == 0) {
      eof_ = true;
      flush_pending();
      break;
    }
    if (got < kRecordHeaderSize) {
      throw CaptureError(fmt::format("'{}': truncated pcap record header at offset {}", source_.origin, offset_));
    }
    auto field = [&](std::size_t at) {
      const auto v = load_le32(rec.data() + at);
      return swapped_ ? byteswap32(v) : v;
    };
    const std::uint32_t incl_len = field(8);
    if (incl_len > kMaxRecordSize) {
      throw CaptureError(fmt::format("'{}': implausible record length {} at offset {}", source_.origin, incl_len, offset_));
    }
    frame.resize(incl_len);
    file_->read(reinterpret_cast<char *>(frame.data()), incl_len);
    if (static_cast<std::uint32_t>(file_->gcount()) != incl_len) {
      throw CaptureError(fmt::format("'{}': truncated pcap record at offset {} (needs {} bytes, {} available)",
                                     source_.origin, offset_, incl_len, file_->gcount()));
    }
    offset_ += kRecordHeaderSize + incl_len;
    ++packets_;
    decode_frame(frame);
  }
  if (ready_.empty()) return std::nullopt;
  auto c = std::move(ready_.front());
  ready_.pop_front();
  return c;
}

void CaptureReader::flush_pending() {
  std::vector<Pending *> left;
  for (auto &[_, p] : pending_) left.push_back(&p);
  std::sort(left.begin(), left.end(), [](const Pending *a, const Pending *b) { return a->order < b->order; });
  for (auto *p : left) ready_.push_back(std::move(p->candidate));
  pending_.clear();
}

void CaptureReader::decode_frame(ByteView frame) {
  std::optional<L4> l4;
  switch (source_.link_type) {
  case linktype::kEthernet:
    if (frame.size() < 14) return;
    l4 = decode_ethertype(load_be16(frame.data() + 12), frame.subspan(14));
    break;
  case linktype::kLinuxCooked:
    if (frame.size() < 16) return;
    l4 = decode_ethertype(load_be16(frame.data() + 14), frame.subspan(16));
    break;
  case linktype::kRawIp:
    l4 = decode_ip(frame);
    break;
  default:
    return;
  }
  // QUIC Initial packets are encrypted; UDP flows in pcaps are not fingerprinted.
  if (!l4 || l4->protocol != kProtoTcp || l4->payload.empty()) return;
  const auto key = canonical_flow_key(l4->flow);

  if (auto it = pending_.find(key); it != pending_.end()) {
    auto &p = it->second;
    // continuation: same direction, next in sequence
    if (!(l4->flow == p.candidate.flow) || l4->seq != p.next_seq) return;
    p.candidate.payload.insert(p.candidate.payload.end(), l4->payload.begin(), l4->payload.end());
    p.next_seq += static_cast<std::uint32_t>(l4->payload.size());
    if (handshake_complete(p.candidate.payload) || p.candidate.payload.size() > kMaxReassembly) {
      ready_.push_back(std::move(p.candidate));
      pending_.erase(it);
    }
    return;
  }

  if (!looks_like_tls_handshake(l4->payload)) return;
  if (!seen_flows_.insert(key).second) return;

  HandshakeCandidate c;
  c.flow = std::move(l4->flow);
  c.transport = Transport::Tcp;
  c.payload.assign(l4->payload.begin(), l4->payload.end());
  if (handshake_complete(c.payload)) {
    ready_.push_back(std::move(c));
    return;
  }
  Pending p;
  p.next_seq = l4->seq + static_cast<std::uint32_t>(l4->payload.size());
  p.order = pending_counter_++;
  p.candidate = std::move(c);
  pending_.emplace(key, std::move(p));
}

CaptureReader open_capture(CaptureSource source) { return CaptureReader(std::move(source)); }

std::vector<HandshakeCandidate> read_candidates(CaptureSource source) {
  auto reader = open_capture(std::move(source));
  std::vector<HandshakeCandidate> out;
  while (auto c = reader.next()) out.push_back(std::move(*c));
  return out;
}

Bytes extract_clienthello_bytes(const HandshakeCandidate &candidate) {
  const ByteView payload(candidate.payload);

  auto check_type = [](std::uint8_t type, std::size_t at) {
    if (type != 0x01) {
      throw ParseError("handshake_type", at,
                       fmt::format("not a ClientHello (handshake type 0x{:02x}{})", type,
                                   type == 0x02 ? ", ServerHello" : ""));
    }
  };

  if (candidate.transport == Transport::UdpQuic) {
    ByteReader r(payload);
    check_type(r.u8("handshake_type"), 0);
    const std::size_t len = r.u24("handshake_length");
    if (len > r.remaining()) {
      throw ParseError("handshake_length", 1,
                       fmt::format("declares {} bytes but only {} available (truncated)", len, r.remaining()));
    }
    return Bytes(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(4 + len));
  }

  Bytes handshake;
  std::optional<std::size_t> needed;
  std::size_t pos = 0;
  while (!needed || handshake.size() < *needed) {
    if (pos >= payload.size()) {
      throw ParseError("tls_record", pos,
                       fmt::format("ClientHello truncated: {} of {} handshake bytes present", handshake.size(),
                                   needed ? *needed : std::size_t{4}));
    }
    ByteReader r(payload.subspan(pos), pos);
    const auto content_type = r.u8("tls_record.content_type");
    if (content_type != kContentHandshake) {
      throw ParseError("tls_record.content_type", pos,
                       fmt::format("expected handshake record 0x16, got 0x{:02x}", content_type));
    }
    r.u16("tls_record.version");
    const std::size_t len = r.u16("tls_record.length");
    if (len > r.remaining()) {
      throw ParseError("tls_record.length", pos + 3,
                       fmt::format("record length {} exceeds the {} bytes available (truncated)", len, r.remaining()));
    }
    auto fragment = r.take(len, "tls_record.fragment");
    if (handshake.empty() && !fragment.empty()) check_type(fragment[0], pos + 5);
    handshake.insert(handshake.end(), fragment.begin(), fragment.end());
    if (!needed && handshake.size() >= 4) {
      needed = 4 + (static_cast<std::size_t>(handshake[1]) << 16 | static_cast<std::size_t>(handshake[2]) << 8 |
                    handshake[3]);
    }
    pos += 5 + len;
  }
  handshake.resize(*needed);
  return handshake;
}

} // namespace ja4ml
