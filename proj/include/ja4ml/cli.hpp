// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ja4ml/gbdt.hpp"

namespace ja4ml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitEmpty = 2;

inline constexpr std::uint64_t kDefaultSeed = 42;

/// --seed wins over JA4ML_SEED, which wins over the default.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag);

struct FingerprintOptions {
  std::vector<std::string> pcaps;
  std::vector<std::string> hex;
  std::string transport = "tcp"; // for hex inputs: tcp | quic
  std::string output;            // empty: stdout
  std::string echo;              // empty: derived from output

  nlohmann::json to_json() const;
  static FingerprintOptions from_json(const nlohmann::json &j);
};

struct IngestOptions {
  std::string input;
  std::string out_dir;
  std::uint64_t seed = kDefaultSeed;
  double ratio = 0.8;
  std::vector<std::string> good_bots;

  nlohmann::json to_json() const;
  static IngestOptions from_json(const nlohmann::json &j);
};

struct TrainOptions {
  std::string dataset;
  std::string manifest;
  std::string out_dir;
  TrainConfig config;
  bool include_application = false;

  nlohmann::json to_json() const;
  static TrainOptions from_json(const nlohmann::json &j);
};

struct EvalOptions {
  std::string model;
  std::string encoder; // empty: encoder.json next to the model
  std::string dataset;
  std::string manifest;
  std::string out_dir;

  nlohmann::json to_json() const;
  static EvalOptions from_json(const nlohmann::json &j);
};

struct ScoreOptions {
  std::string model;
  std::string encoder;
  std::vector<std::string> ja4;
  std::vector<std::string> pcaps;
  std::string output;
  std::string echo;

  nlohmann::json to_json() const;
  static ScoreOptions from_json(const nlohmann::json &j);
};

/// Row reads performed while building a training or evaluation matrix.
struct RowAccessCounts {
  std::uint64_t train_reads = 0;
  std::uint64_t test_reads = 0;
};

int cmd_fingerprint(const FingerprintOptions &opts, std::ostream &out, std::ostream &err);
int cmd_ingest(const IngestOptions &opts, std::ostream &out, std::ostream &err);
int cmd_train(const TrainOptions &opts, std::ostream &out, std::ostream &err);
int cmd_eval(const EvalOptions &opts, std::ostream &out, std::ostream &err);
int cmd_score(const ScoreOptions &opts, std::ostream &out, std::ostream &err);

/// Re-runs the subcommand recorded in a config echo file. `out_dir`, when
/// set, redirects every output path of the replayed run into that directory.
int cmd_replay(const std::string &echo_path, const std::string &out_dir, std::ostream &out, std::ostream &err);

} // namespace ja4ml::cli
