// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace ja4ml::testing {

inline std::filesystem::path test_data(const std::string &rel) { return std::filesystem::path(JA4ML_TEST_DATA) / rel; }

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json load_json(const std::filesystem::path &p) { return nlohmann::json::parse(slurp(p)); }

inline nlohmann::json expected_fingerprints() { return load_json(test_data("expected_fingerprints.json")); }

} // namespace ja4ml::testing
