// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ja4ml/clienthello.hpp"

namespace ja4ml {

enum class Mutation {
  RotateUserAgentMetadata,
  RotateIpMetadata,
  PermuteGrease,
  ReorderCiphers,
  SwapTlsStack,
  BitwiseMimic,
};

enum class Expectation { FingerprintUnchanged, FingerprintChanged, FingerprintEqualsTarget };

enum class Verdict { Pass, Fail, Skip };

std::string_view to_string(Mutation m);
std::string_view to_string(Expectation e);
std::string_view to_string(Verdict v);
Mutation mutation_from_string(std::string_view s);
Expectation expectation_from_string(std::string_view s);

/// What a defender sees besides the TLS bytes. None of it reaches JA4.
struct ConnectionMetadata {
  std::string user_agent;
  std::string client_ip;
};

struct EvasionScenario {
  std::string name;
  std::string threat_row; // capability row this scenario exercises
  ClientHello base_hello;
  ConnectionMetadata metadata;
  Mutation mutation = Mutation::RotateUserAgentMetadata;
  Expectation expected = Expectation::FingerprintUnchanged;
  /// Profile to swap to or mimic (swap_tls_stack, bitwise_mimic).
  std::optional<ClientHello> target;
  /// bitwise_mimic: regenerate random, session id and GREASE values the way a
  /// real browser engine does on every connection.
  bool fresh_connection_values = false;
  /// bitwise_mimic: extensions the mimic fails to reproduce.
  std::vector<std::uint16_t> omit_extensions;
  std::uint64_t seed = 42;
};

struct ScenarioResult {
  std::string name;
  Verdict verdict = Verdict::Fail;
  std::string before;
  std::string after;
  std::string target; // empty unless the scenario has a target
  std::string detail;
  Bytes mutated_bytes;
  ConnectionMetadata mutated_metadata;
};

/// Applies the mutation and recomputes JA4 from re-serialized bytes.
ScenarioResult run_scenario(const EvasionScenario &scenario);

/// Loads scenarios from a JSON file; hex profile paths resolve relative to it.
std::vector<EvasionScenario> load_scenarios(const std::filesystem::path &path);

/// TAP version 13 output for a batch of results.
std::string tap_report(const std::vector<ScenarioResult> &results);

} // namespace ja4ml
