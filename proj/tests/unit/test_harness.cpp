// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "hello_builder.hpp"
#include "pcap_writer.hpp"

#include "ja4ml/error.hpp"
#include "ja4ml/harness.hpp"
#include "ja4ml/ja4.hpp"

using namespace ja4ml;
using namespace ja4ml::testing;

namespace {

std::filesystem::path scenarios_path() { return std::filesystem::path(JA4ML_DATA_DIR) / "harness/scenarios.json"; }

ClientHello browser() { return parse_clienthello(encode_hello(browser_spec()), Transport::Tcp); }

ClientHello scripted() {
  HelloSpec s;
  s.ciphers = {0x1302, 0x1303, 0x1301, 0xc02c, 0xc030, 0x009f};
  s.extensions = {{0x0000, sni_body("api.example.net")},
                  {0x000b, {0x01, 0x00}},
                  {0x000a, groups_body({0x001d, 0x0017})},
                  {0x000d, sigalgs_body({0x0403, 0x0503})},
                  {0x002b, versions_body({0x0304, 0x0303})}};
  return parse_clienthello(encode_hello(s), Transport::Tcp);
}

EvasionScenario scenario(Mutation m, Expectation e) {
  EvasionScenario sc;
  sc.name = "unit";
  sc.threat_row = "unit";
  sc.base_hello = browser();
  sc.metadata = {"Mozilla/5.0", "198.51.100.7"};
  sc.mutation = m;
  sc.expected = e;
  return sc;
}

} // namespace

TEST(Harness, BundledScenariosAllPass) {
  const auto scenarios = load_scenarios(scenarios_path());
  ASSERT_GE(scenarios.size(), 8u);
  for (const auto &sc : scenarios) {
    const auto r = run_scenario(sc);
    EXPECT_EQ(r.verdict, Verdict::Pass) << sc.name << ": " << r.detail;
  }
}

TEST(Harness, BundledScenariosCoverEveryThreatRowAndMutation) {
  const auto scenarios = load_scenarios(scenarios_path());
  std::set<std::string> rows;
  std::set<Mutation> mutations;
  for (const auto &sc : scenarios) {
    rows.insert(sc.threat_row);
    mutations.insert(sc.mutation);
  }
  EXPECT_EQ(rows, (std::set<std::string>{"Automated Scripts and Web Scrapers", "Header Spoofing (User-Agent/IP Rotation)",
                                         "Full Stack Emulation via Browser Automation",
                                         "Sophisticated TLS Fingerprint Spoofing"}));
  EXPECT_EQ(mutations.size(), 6u);
}

TEST(Harness, MetadataRotationLeavesBytesAlone) {
  for (auto m : {Mutation::RotateUserAgentMetadata, Mutation::RotateIpMetadata}) {
    auto sc = scenario(m, Expectation::FingerprintUnchanged);
    const auto r = run_scenario(sc);
    EXPECT_EQ(r.verdict, Verdict::Pass);
    EXPECT_EQ(r.before, r.after);
    EXPECT_EQ(r.mutated_bytes, serialize_clienthello(sc.base_hello));
    if (m == Mutation::RotateUserAgentMetadata) {
      EXPECT_NE(r.mutated_metadata.user_agent, sc.metadata.user_agent);
      EXPECT_EQ(r.mutated_metadata.client_ip, sc.metadata.client_ip);
    } else {
      EXPECT_NE(r.mutated_metadata.client_ip, sc.metadata.client_ip);
    }
  }
}

TEST(Harness, GreasePermutationChangesBytesNotFingerprint) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto sc = scenario(Mutation::PermuteGrease, Expectation::FingerprintUnchanged);
    sc.seed = seed;
    const auto r = run_scenario(sc);
    EXPECT_EQ(r.verdict, Verdict::Pass) << seed << ": " << r.detail;
    EXPECT_NE(r.mutated_bytes, serialize_clienthello(sc.base_hello));
  }
}

TEST(Harness, GreaseInsertedIntoGreaselessClientIsInvisible) {
  auto sc = scenario(Mutation::PermuteGrease, Expectation::FingerprintUnchanged);
  sc.base_hello = scripted();
  const auto r = run_scenario(sc);
  EXPECT_EQ(r.verdict, Verdict::Pass);
  const auto h = parse_clienthello(r.mutated_bytes, Transport::Tcp);
  EXPECT_EQ(std::count_if(h.cipher_suites.begin(), h.cipher_suites.end(), is_grease), 1);
}

TEST(Harness, CipherReorderSkipsSingleCipher) {
  auto sc = scenario(Mutation::ReorderCiphers, Expectation::FingerprintUnchanged);
  HelloSpec one;
  one.ciphers = {0x1301};
  sc.base_hello = parse_clienthello(encode_hello(one), Transport::Tcp);
  EXPECT_EQ(run_scenario(sc).verdict, Verdict::Skip);
}

TEST(Harness, StackSwapAndMimic) {
  auto swap = scenario(Mutation::SwapTlsStack, Expectation::FingerprintChanged);
  swap.target = scripted();
  const auto r = run_scenario(swap);
  EXPECT_EQ(r.verdict, Verdict::Pass);
  EXPECT_EQ(r.after, compute_ja4(scripted()).full);

  auto mimic = scenario(Mutation::BitwiseMimic, Expectation::FingerprintEqualsTarget);
  mimic.base_hello = scripted();
  mimic.target = browser();
  const auto m = run_scenario(mimic);
  EXPECT_EQ(m.verdict, Verdict::Pass);
  EXPECT_EQ(m.mutated_bytes, serialize_clienthello(browser()));
  EXPECT_EQ(m.after, m.target);

  mimic.fresh_connection_values = true;
  const auto f = run_scenario(mimic);
  EXPECT_EQ(f.verdict, Verdict::Pass);
  EXPECT_NE(f.mutated_bytes, serialize_clienthello(browser()));
  EXPECT_EQ(f.after, f.target);
}

TEST(Harness, WrongExpectationFails) {
  auto sc = scenario(Mutation::SwapTlsStack, Expectation::FingerprintUnchanged);
  sc.target = scripted();
  EXPECT_EQ(run_scenario(sc).verdict, Verdict::Fail);
  auto mimic = scenario(Mutation::BitwiseMimic, Expectation::FingerprintEqualsTarget);
  mimic.target = browser();
  mimic.omit_extensions = {0x002d};
  EXPECT_EQ(run_scenario(mimic).verdict, Verdict::Fail);
  mimic.omit_extensions = {0x4444};
  EXPECT_EQ(run_scenario(mimic).verdict, Verdict::Skip);
}

TEST(Harness, EnumNamesRoundTrip) {
  for (auto m : {Mutation::RotateUserAgentMetadata, Mutation::RotateIpMetadata, Mutation::PermuteGrease,
                 Mutation::ReorderCiphers, Mutation::SwapTlsStack, Mutation::BitwiseMimic}) {
    EXPECT_EQ(mutation_from_string(to_string(m)), m);
  }
  for (auto e : {Expectation::FingerprintUnchanged, Expectation::FingerprintChanged,
                 Expectation::FingerprintEqualsTarget}) {
    EXPECT_EQ(expectation_from_string(to_string(e)), e);
  }
  EXPECT_THROW(mutation_from_string("teleport"), Error);
}

TEST(Harness, TapOutput) {
  std::vector<ScenarioResult> rs(3);
  rs[0] = {"a", Verdict::Pass, "x", "x", "", "expected fingerprint_unchanged", {}, {}};
  rs[1] = {"b", Verdict::Fail, "x", "y", "z", "expected fingerprint_equals_target", {}, {}};
  rs[2] = {"c", Verdict::Skip, "x", "x", "", "no GREASE values", {}, {}};
  const auto tap = tap_report(rs);
  EXPECT_EQ(tap.rfind("TAP version 13\n1..3\n", 0), 0u);
  EXPECT_NE(tap.find("ok 1 - a\n"), std::string::npos);
  EXPECT_NE(tap.find("not ok 2 - b\n"), std::string::npos);
  EXPECT_NE(tap.find("  # target: z\n"), std::string::npos);
  EXPECT_NE(tap.find("ok 3 - c # SKIP no GREASE values\n"), std::string::npos);
}

TEST(Harness, LoaderRejectsBadDocuments) {
  const auto dir = temp_dir("harness_bad");
  std::ofstream(dir / "a.json") << R"({"format":"other","version":1})";
  EXPECT_THROW(load_scenarios(dir / "a.json"), Error);
  std::ofstream(dir / "b.json")
      << R"({"format":"ja4ml-harness-scenarios","version":1,"profiles":{},"scenarios":[{"name":"x","threat_row":"r","base":"nope","mutation":"reorder_ciphers","expected":"fingerprint_unchanged"}]})";
  EXPECT_THROW(load_scenarios(dir / "b.json"), Error);
}

TEST(Harness, CommandLineRunnerPasses) {
  EXPECT_EQ(std::system(JA4ML_HARNESS_PATH " > /dev/null"), 0);
}
