// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/harness.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ja4ml/error.hpp"
#include "ja4ml/ja4.hpp"
#include "ja4ml/prng.hpp"

namespace ja4ml {

namespace {

constexpr std::uint16_t kSupportedGroups = 0x000a;
constexpr std::uint16_t kPreSharedKey = 0x0029;

const std::vector<std::string> kUserAgents = {
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/124.0.0.0 Safari/537.36",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 14_4) AppleWebKit/605.1.15 (KHTML, like Gecko) Version/17.4 Safari/605.1.15",
    "Mozilla/5.0 (X11; Linux x86_64; rv:125.0) Gecko/20100101 Firefox/125.0",
    "Mozilla/5.0 (iPhone; CPU iPhone OS 17_4 like Mac OS X) AppleWebKit/605.1.15 (KHTML, like Gecko) Mobile/15E148",
};

std::uint16_t other_grease(std::uint16_t current, SplitMix64 &rng) {
  for (;;) {
    const auto g = kGreaseValues[rng.below(kGreaseValues.size())];
    if (g != current) return g;
  }
}

ClientHello reparse(const ClientHello &h, Bytes *bytes_out = nullptr) {
  auto bytes = serialize_clienthello(h);
  auto parsed = parse_clienthello(bytes, h.transport);
  if (bytes_out) *bytes_out = std::move(bytes);
  return parsed;
}

// Rewrites GREASE entries of a u16 code list that sits behind a length prefix
// of `prefix` bytes.
void regrease_list(Bytes &body, std::size_t prefix, SplitMix64 &rng, bool &changed) {
  for (std::size_t i = prefix; i + 1 < body.size(); i += 2) {
    const auto code = static_cast<std::uint16_t>(body[i] << 8 | body[i + 1]);
    if (!is_grease(code)) continue;
    const auto g = other_grease(code, rng);
    body[i] = static_cast<std::uint8_t>(g >> 8);
    body[i + 1] = static_cast<std::uint8_t>(g);
    changed = true;
  }
}

// Replaces every GREASE value with a different one; with `move`, also shifts
// GREASE ciphers/extensions to new positions and inserts one more GREASE cipher.
bool regrease(ClientHello &h, SplitMix64 &rng, bool move) {
  bool changed = false;
  std::vector<std::uint16_t> plain, grease;
  for (auto c : h.cipher_suites) (is_grease(c) ? grease : plain).push_back(c);
  for (auto &g : grease) {
    g = other_grease(g, rng);
    changed = true;
  }
  if (move) {
    grease.push_back(other_grease(0, rng));
    changed = true;
    h.cipher_suites = plain;
    for (auto g : grease) {
      const auto at = rng.below(h.cipher_suites.size() + 1);
      h.cipher_suites.insert(h.cipher_suites.begin() + static_cast<std::ptrdiff_t>(at), g);
    }
  } else {
    std::size_t k = 0;
    for (auto &c : h.cipher_suites) {
      if (is_grease(c)) c = grease[k++];
    }
  }

  std::vector<Extension> plain_ext, grease_ext;
  for (auto &e : h.extensions) {
    if (is_grease(e.type)) {
      e.type = other_grease(e.type, rng);
      grease_ext.push_back(e);
      changed = true;
    } else {
      if (e.type == ext::kSupportedVersions) regrease_list(e.body, 1, rng, changed);
      if (e.type == kSupportedGroups || e.type == ext::kSignatureAlgorithms) regrease_list(e.body, 2, rng, changed);
      plain_ext.push_back(e);
    }
  }
  if (move && !grease_ext.empty()) {
    // pre_shared_key must stay last
    std::optional<Extension> psk;
    if (!plain_ext.empty() && plain_ext.back().type == kPreSharedKey) {
      psk = plain_ext.back();
      plain_ext.pop_back();
    }
    for (auto &g : grease_ext) {
      const auto at = rng.below(plain_ext.size() + 1);
      plain_ext.insert(plain_ext.begin() + static_cast<std::ptrdiff_t>(at), g);
    }
    if (psk) plain_ext.push_back(*psk);
    h.extensions = std::move(plain_ext);
  }
  return changed;
}

std::string fp(const ClientHello &h) { return compute_ja4(h).full; }

ScenarioResult skip(ScenarioResult r, std::string why) {
  r.verdict = Verdict::Skip;
  r.detail = std::move(why);
  return r;
}

} // namespace

std::string_view to_string(Mutation m) {
  switch (m) {
  case Mutation::RotateUserAgentMetadata: return "rotate_user_agent_metadata";
  case Mutation::RotateIpMetadata: return "rotate_ip_metadata";
  case Mutation::PermuteGrease: return "permute_grease";
  case Mutation::ReorderCiphers: return "reorder_ciphers";
  case Mutation::SwapTlsStack: return "swap_tls_stack";
  case Mutation::BitwiseMimic: return "bitwise_mimic";
  }
  return "?";
}

std::string_view to_string(Expectation e) {
  switch (e) {
  case Expectation::FingerprintUnchanged: return "fingerprint_unchanged";
  case Expectation::FingerprintChanged: return "fingerprint_changed";
  case Expectation::FingerprintEqualsTarget: return "fingerprint_equals_target";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
  case Verdict::Pass: return "pass";
  case Verdict::Fail: return "fail";
  case Verdict::Skip: return "skip";
  }
  return "?";
}

Mutation mutation_from_string(std::string_view s) {
  for (auto m : {Mutation::RotateUserAgentMetadata, Mutation::RotateIpMetadata, Mutation::PermuteGrease,
                 Mutation::ReorderCiphers, Mutation::SwapTlsStack, Mutation::BitwiseMimic}) {
    if (to_string(m) == s) return m;
  }
  throw DataError(fmt::format("unknown mutation '{}'", s));
}

Expectation expectation_from_string(std::string_view s) {
  for (auto e : {Expectation::FingerprintUnchanged, Expectation::FingerprintChanged,
                 Expectation::FingerprintEqualsTarget}) {
    if (to_string(e) == s) return e;
  }
  throw DataError(fmt::format("unknown expectation '{}'", s));
}

ScenarioResult run_scenario(const EvasionScenario &sc) {
  ScenarioResult r;
  r.name = sc.name;
  r.before = fp(sc.base_hello);
  r.mutated_metadata = sc.metadata;
  if (sc.target) r.target = fp(*sc.target);
  SplitMix64 rng(sc.seed);
  ClientHello mutated = sc.base_hello;
  std::string check_note;

  switch (sc.mutation) {
  case Mutation::RotateUserAgentMetadata: {
    auto &ua = r.mutated_metadata.user_agent;
    const auto start = rng.below(kUserAgents.size());
    for (std::size_t i = 0; i < kUserAgents.size() && ua == sc.metadata.user_agent; ++i) {
      ua = kUserAgents[(start + i) % kUserAgents.size()];
    }
    if (ua == sc.metadata.user_agent) return skip(r, "no alternative user agent available");
    break;
  }
  case Mutation::RotateIpMetadata: {
    auto &ip = r.mutated_metadata.client_ip;
    while (ip == sc.metadata.client_ip) {
      ip = fmt::format("198.51.100.{}", 1 + rng.below(254));
    }
    break;
  }
  case Mutation::PermuteGrease:
    if (!regrease(mutated, rng, true)) return skip(r, "base hello carries no GREASE values");
    break;
  case Mutation::ReorderCiphers: {
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < mutated.cipher_suites.size(); ++i) {
      if (!is_grease(mutated.cipher_suites[i])) slots.push_back(i);
    }
    if (slots.size() < 2) return skip(r, "fewer than two non-GREASE ciphers to reorder");
    std::vector<std::uint16_t> plain;
    for (auto i : slots) plain.push_back(mutated.cipher_suites[i]);
    auto shuffled = plain;
    for (int attempt = 0; attempt < 16 && shuffled == plain; ++attempt) {
      for (std::size_t i = shuffled.size(); i-- > 1;) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    }
    if (shuffled == plain) std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
    for (std::size_t k = 0; k < slots.size(); ++k) mutated.cipher_suites[slots[k]] = shuffled[k];
    break;
  }
  case Mutation::SwapTlsStack:
    if (!sc.target) throw DataError(fmt::format("scenario '{}': swap_tls_stack needs a target profile", sc.name));
    mutated.legacy_version = sc.target->legacy_version;
    mutated.cipher_suites = sc.target->cipher_suites;
    mutated.compression_methods = sc.target->compression_methods;
    mutated.has_extensions_block = sc.target->has_extensions_block;
    mutated.extensions = sc.target->extensions;
    break;
  case Mutation::BitwiseMimic: {
    if (!sc.target) throw DataError(fmt::format("scenario '{}': bitwise_mimic needs a target profile", sc.name));
    mutated = *sc.target;
    if (sc.fresh_connection_values) {
      for (auto &b : mutated.random) b = static_cast<std::uint8_t>(rng.below(256));
      for (auto &b : mutated.session_id) b = static_cast<std::uint8_t>(rng.below(256));
      regrease(mutated, rng, false);
    }
    if (!sc.omit_extensions.empty()) {
      const auto before = mutated.extensions.size();
      std::erase_if(mutated.extensions, [&](const Extension &e) {
        return std::find(sc.omit_extensions.begin(), sc.omit_extensions.end(), e.type) != sc.omit_extensions.end();
      });
      if (mutated.extensions.size() == before) return skip(r, "target has none of the extensions to omit");
    }
    break;
  }
  }

  const auto reparsed = reparse(mutated, &r.mutated_bytes);
  r.after = fp(reparsed);

  bool ok = false;
  switch (sc.expected) {
  case Expectation::FingerprintUnchanged:
    ok = r.after == r.before;
    break;
  case Expectation::FingerprintChanged:
    ok = r.after != r.before;
    break;
  case Expectation::FingerprintEqualsTarget:
    ok = sc.target && r.after == r.target;
    break;
  }

  const bool metadata_mutation =
      sc.mutation == Mutation::RotateUserAgentMetadata || sc.mutation == Mutation::RotateIpMetadata;
  if (metadata_mutation && r.mutated_bytes != serialize_clienthello(sc.base_hello)) {
    ok = false;
    check_note = "metadata rotation altered the hello bytes";
  }
  if (sc.mutation == Mutation::BitwiseMimic && !sc.fresh_connection_values && sc.omit_extensions.empty() &&
      r.mutated_bytes != serialize_clienthello(*sc.target)) {
    ok = false;
    check_note = "mimic bytes differ from the target profile";
  }
  if (!metadata_mutation && sc.mutation != Mutation::BitwiseMimic &&
      r.mutated_bytes == serialize_clienthello(sc.base_hello)) {
    ok = false;
    check_note = "mutation left the hello bytes untouched";
  }

  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
  r.detail = check_note.empty() ? fmt::format("expected {}", to_string(sc.expected))
                                : fmt::format("expected {}; {}", to_string(sc.expected), check_note);
  return r;
}

std::vector<EvasionScenario> load_scenarios(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(fmt::format("'{}': {}", path.string(), e.what()));
  }
  if (doc.value("format", "") != "ja4ml-harness-scenarios" || doc.value("version", 0) != 1) {
    throw DataError(fmt::format("'{}' is not a version 1 scenario file", path.string()));
  }
  const auto dir = path.parent_path();
  std::map<std::string, ClientHello> profiles;
  for (const auto &[name, spec] : doc.at("profiles").items()) {
    const auto file = dir / spec.at("file").get<std::string>();
    std::ifstream hex(file);
    if (!hex) throw DataError(fmt::format("cannot read profile '{}'", file.string()));
    std::stringstream ss;
    ss << hex.rdbuf();
    const auto transport = spec.value("transport", "tcp") == "udp-quic" ? Transport::UdpQuic : Transport::Tcp;
    profiles.emplace(name, parse_clienthello(from_hex(ss.str()), transport));
  }
  auto profile = [&](const std::string &name) {
    auto it = profiles.find(name);
    if (it == profiles.end()) throw DataError(fmt::format("unknown profile '{}'", name));
    return it->second;
  };

  std::vector<EvasionScenario> out;
  for (const auto &s : doc.at("scenarios")) {
    EvasionScenario sc;
    sc.name = s.at("name").get<std::string>();
    sc.threat_row = s.value("threat_row", "");
    sc.base_hello = profile(s.at("base").get<std::string>());
    if (s.contains("metadata")) {
      sc.metadata.user_agent = s["metadata"].value("user_agent", "");
      sc.metadata.client_ip = s["metadata"].value("client_ip", "");
    }
    sc.mutation = mutation_from_string(s.at("mutation").get<std::string>());
    sc.expected = expectation_from_string(s.at("expected").get<std::string>());
    if (s.contains("target")) sc.target = profile(s["target"].get<std::string>());
    sc.fresh_connection_values = s.value("fresh_connection_values", false);
    for (const auto &code : s.value("omit_extensions", nlohmann::json::array())) {
      sc.omit_extensions.push_back(static_cast<std::uint16_t>(std::stoul(code.get<std::string>(), nullptr, 16)));
    }
    sc.seed = s.value("seed", std::uint64_t{42});
    out.push_back(std::move(sc));
  }
  return out;
}

std::string tap_report(const std::vector<ScenarioResult> &results) {
  std::string out = fmt::format("TAP version 13\n1..{}\n", results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto &r = results[i];
    const bool ok = r.verdict != Verdict::Fail;
    out += fmt::format("{} {} - {}", ok ? "ok" : "not ok", i + 1, r.name);
    if (r.verdict == Verdict::Skip) out += fmt::format(" # SKIP {}", r.detail);
    out += '\n';
    out += fmt::format("  # before: {}\n  # after:  {}\n", r.before, r.after);
    if (!r.target.empty()) out += fmt::format("  # target: {}\n", r.target);
    if (r.verdict != Verdict::Skip) out += fmt::format("  # {}\n", r.detail);
  }
  return out;
}

} // namespace ja4ml
