// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>

#include <fmt/format.h>

#include "hello_builder.hpp"
#include "pcap_writer.hpp"
#include "test_paths.hpp"

#include "ja4ml/error.hpp"
#include "ja4ml/ja4.hpp"
#include "ja4ml/pcap_ingest.hpp"

using namespace ja4ml;
using namespace ja4ml::testing;

namespace {

std::vector<std::string> fingerprints(CaptureSource src) {
  std::vector<std::string> out;
  for (const auto &c : read_candidates(std::move(src))) {
    out.push_back(compute_ja4(parse_clienthello(extract_clienthello_bytes(c), c.transport)).full);
  }
  return out;
}

std::vector<std::string> fingerprints(const std::filesystem::path &p) {
  return fingerprints(CaptureSource::pcap_file(p.string()));
}

Buf browser_records(std::size_t max_fragment = 0x4000) {
  return tls_records(encode_hello(browser_spec()), max_fragment);
}

const std::string kBrowserJa4 = "t13d1108h2_5e2a75874763_73cfa5cd11ab";

std::string capture_error(const std::filesystem::path &p) {
  try {
    read_candidates(CaptureSource::pcap_file(p.string()));
  } catch (const CaptureError &e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(PcapIngest, FixtureCapturesMatchReferenceTooling) {
  const auto doc = expected_fingerprints();
  for (const auto &cap : doc["captures"]) {
    const auto file = cap["file"].get<std::string>();
    SCOPED_TRACE(file);
    EXPECT_EQ(fingerprints(test_data("captures/" + file)), cap["ja4"].get<std::vector<std::string>>());
    if (cap.contains("handshake_length")) {
      const auto cands = read_candidates(CaptureSource::pcap_file(test_data("captures/" + file).string()));
      ASSERT_EQ(cands.size(), 1u);
      EXPECT_EQ(extract_clienthello_bytes(cands[0]).size(), cap["handshake_length"].get<std::size_t>());
    }
  }
}

TEST(PcapIngest, ByteOrderAndTimestampVariants) {
  const auto dir = temp_dir("pcap_variants");
  TcpSegment seg;
  seg.payload = browser_records();
  for (bool swapped : {false, true}) {
    for (bool nano : {false, true}) {
      const auto p = dir / fmt::format("v_{}_{}.pcap", swapped, nano);
      write_pcap(p, {ethernet_tcp(seg)}, {swapped, nano, linktype::kEthernet});
      EXPECT_EQ(fingerprints(p), std::vector<std::string>{kBrowserJa4}) << p;
    }
  }
}

TEST(PcapIngest, VlanIpv6AndRawIp) {
  const auto dir = temp_dir("pcap_links");
  TcpSegment v4;
  v4.payload = browser_records();
  v4.vlan_tags = {100, 200};
  TcpSegment v6 = v4;
  v6.vlan_tags.clear();
  v6.ipv6 = true;
  v6.src = "2001:db8::1";
  v6.dst = "2001:db8::2";
  write_pcap(dir / "vlan.pcap", {ethernet_tcp(v4)});
  write_pcap(dir / "v6.pcap", {ethernet_tcp(v6)});
  write_pcap(dir / "raw.pcap", {raw_ip_tcp(v6)}, {false, false, linktype::kRawIp});
  EXPECT_EQ(fingerprints(dir / "vlan.pcap"), std::vector<std::string>{kBrowserJa4});
  EXPECT_EQ(fingerprints(dir / "v6.pcap"), std::vector<std::string>{kBrowserJa4});
  EXPECT_EQ(fingerprints(dir / "raw.pcap"), std::vector<std::string>{kBrowserJa4});
  const auto c = read_candidates(CaptureSource::pcap_file((dir / "raw.pcap").string()));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].flow.to_string(), "2001:db8::1:40000->2001:db8::2:443/tcp");
  EXPECT_EQ(c[0].flow.digest().size(), 16u);
}

TEST(PcapIngest, RejectsPcapng) {
  const auto p = temp_dir("pcapng") / "x.pcapng";
  std::ofstream(p, std::ios::binary) << std::string("\x0a\x0d\x0d\x0a\x1c\x00\x00\x00\x4d\x3c\x2b\x1a", 12);
  EXPECT_NE(capture_error(p).find("pcapng"), std::string::npos);
}

TEST(PcapIngest, RejectsBadMagicAndShortHeader) {
  const auto dir = temp_dir("pcap_bad");
  std::ofstream(dir / "magic.pcap", std::ios::binary) << std::string(24, 'x');
  std::ofstream(dir / "short.pcap", std::ios::binary) << std::string("\xd4\xc3\xb2\xa1\x02\x00", 6);
  EXPECT_NE(capture_error(dir / "magic.pcap").find("magic"), std::string::npos);
  const auto msg = capture_error(dir / "short.pcap");
  EXPECT_NE(msg.find("truncated"), std::string::npos);
  EXPECT_NE(msg.find("offset 6"), std::string::npos);
  EXPECT_FALSE(capture_error(dir / "does_not_exist.pcap").empty());
}

TEST(PcapIngest, RejectsUnsupportedLinkType) {
  const auto p = temp_dir("pcap_link") / "x.pcap";
  write_pcap(p, {}, {false, false, 105});
  EXPECT_NE(capture_error(p).find("link type 105"), std::string::npos);
}

TEST(PcapIngest, TruncatedRecordReportsOffset) {
  const auto p = temp_dir("pcap_trunc") / "x.pcap";
  TcpSegment seg;
  seg.payload = browser_records();
  write_pcap(p, {ethernet_tcp(seg)});
  const auto size = std::filesystem::file_size(p);
  std::filesystem::resize_file(p, size - 10);
  const auto msg = capture_error(p);
  EXPECT_NE(msg.find("truncated pcap record at offset 24"), std::string::npos) << msg;
  std::filesystem::resize_file(p, 24 + 7);
  EXPECT_NE(capture_error(p).find("record header at offset 24"), std::string::npos);
}

TEST(PcapIngest, SkipsIpv4FragmentsAndUdp) {
  const auto p = temp_dir("pcap_frag") / "x.pcap";
  TcpSegment seg;
  seg.payload = browser_records();
  seg.frag_field = 0x2000; // more fragments
  write_pcap(p, {ethernet_tcp(seg), ethernet_udp("10.0.0.1", "10.0.0.2", 5000, 443, browser_records())});
  EXPECT_TRUE(fingerprints(p).empty());
}

TEST(PcapIngest, ReassemblesSegmentsInSequence) {
  const auto p = temp_dir("pcap_segments") / "x.pcap";
  const auto records = browser_records(64);
  std::vector<Frame> frames;
  TcpSegment reply;
  reply.src = "10.0.0.2";
  reply.dst = "10.0.0.1";
  reply.sport = 443;
  reply.dport = 40000;
  std::uint32_t seq = 1000;
  for (std::size_t off = 0; off < records.size(); off += 100) {
    TcpSegment seg;
    seg.seq = seq;
    seg.payload.assign(records.begin() + off, records.begin() + std::min(records.size(), off + 100));
    seq += static_cast<std::uint32_t>(seg.payload.size());
    frames.push_back(ethernet_tcp(seg));
    frames.push_back(ethernet_tcp(reply)); // empty ACK from the server
  }
  write_pcap(p, frames);
  EXPECT_EQ(fingerprints(p), std::vector<std::string>{kBrowserJa4});
}

TEST(PcapIngest, IncompleteHandshakeAtEndIsTruncated) {
  const auto p = temp_dir("pcap_incomplete") / "x.pcap";
  const auto records = browser_records();
  TcpSegment seg;
  seg.payload.assign(records.begin(), records.begin() + 60);
  write_pcap(p, {ethernet_tcp(seg)});
  const auto c = read_candidates(CaptureSource::pcap_file(p.string()));
  ASSERT_EQ(c.size(), 1u);
  try {
    extract_clienthello_bytes(c[0]);
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(PcapIngest, OutOfSequenceSegmentIsNotAppended) {
  const auto p = temp_dir("pcap_gap") / "x.pcap";
  const auto records = browser_records();
  TcpSegment a, b;
  a.seq = 1;
  a.payload.assign(records.begin(), records.begin() + 100);
  b.seq = 500; // gap
  b.payload.assign(records.begin() + 100, records.end());
  write_pcap(p, {ethernet_tcp(a), ethernet_tcp(b)});
  const auto c = read_candidates(CaptureSource::pcap_file(p.string()));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].payload.size(), 100u);
  EXPECT_THROW(extract_clienthello_bytes(c[0]), ParseError);
}

TEST(PcapIngest, ServerHelloIsNotAClientHello) {
  auto spec = browser_spec();
  auto hs = encode_hello(spec);
  hs[0] = 0x02;
  try {
    extract_clienthello_bytes({{}, tls_records(hs), Transport::Tcp});
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.field(), "handshake_type");
    EXPECT_EQ(e.offset(), 5u);
    EXPECT_NE(std::string(e.what()).find("ServerHello"), std::string::npos);
  }
}

TEST(PcapIngest, NonHandshakeRecordRejected) {
  auto rec = browser_records();
  rec[0] = 0x17;
  EXPECT_THROW(extract_clienthello_bytes({{}, rec, Transport::Tcp}), ParseError);
}

TEST(PcapIngest, HexInputsAcceptRecordOrMessageForm) {
  const auto msg = encode_hello(browser_spec());
  EXPECT_EQ(fingerprints(CaptureSource::hex_string(to_hex(msg))), std::vector<std::string>{kBrowserJa4});
  EXPECT_EQ(fingerprints(CaptureSource::hex_string(to_hex(tls_records(msg, 50)))),
            std::vector<std::string>{kBrowserJa4});
  EXPECT_EQ(fingerprints(CaptureSource::raw_bytes(msg)), std::vector<std::string>{kBrowserJa4});
  const auto q = fingerprints(CaptureSource::hex_string(to_hex(msg), Transport::UdpQuic));
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].front(), 'q');
  EXPECT_TRUE(read_candidates(CaptureSource::raw_bytes({})).empty());
}

TEST(PcapIngest, OneCandidatePerFlow) {
  const auto p = temp_dir("pcap_flows") / "x.pcap";
  TcpSegment a;
  a.payload = browser_records();
  TcpSegment again = a;
  again.seq = 99999;
  TcpSegment other = a;
  other.sport = 40001;
  write_pcap(p, {ethernet_tcp(a), ethernet_tcp(again), ethernet_tcp(other)});
  const auto c = read_candidates(CaptureSource::pcap_file(p.string()));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].flow.src_port, 40000);
  EXPECT_EQ(c[1].flow.src_port, 40001);
}
