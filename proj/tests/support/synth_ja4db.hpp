// SPDX-License-Identifier: Apache-2.0
// Deterministic synthetic JA4DB-shaped exports for pipeline tests.
#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

namespace ja4ml::testing {

struct SynthOptions {
  std::size_t n = 2000;
  std::uint64_t seed = 1;
  double bot_fraction = 0.25;
  double good_bot_fraction = 0.10;
  double missing_fraction = 0.02;
  double malformed_fraction = 0.01;
  /// Share of bad bots that present a browser fingerprint (mimicry).
  double mimic_fraction = 0.05;
};

nlohmann::json synth_ja4db(const SynthOptions &opts);

/// The ten-record example: 2 good bots, 3 bad bots, 5 benign.
nlohmann::json ten_record_example();

} // namespace ja4ml::testing
