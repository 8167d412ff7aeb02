// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ja4ml/features.hpp"

namespace ja4ml {

/// One JA4DB export row. Fields the toolkit does not use are kept verbatim in `other`.
struct Ja4dbRecord {
  std::optional<std::string> application;
  std::optional<std::string> library;
  std::optional<std::string> device;
  std::optional<std::string> os;
  std::optional<std::string> user_agent_string;
  std::optional<std::string> certificate_authority;
  std::optional<std::int64_t> observation_count;
  std::optional<bool> verified;
  std::optional<std::string> ja4_fingerprint;
  nlohmann::json other = nlohmann::json::object();

  static Ja4dbRecord from_json(const nlohmann::json &obj);
};

enum class Label { Benign = 0, BadBot = 1 };
enum class LabelOutcome { GoodBotExcluded, BadBot, Benign };

std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

/// Default crawler identifiers treated as good bots.
const std::vector<std::string> &default_good_bots();

/// Good bot if application or user_agent_string contains any identifier
/// (case-insensitive); otherwise bad bot if application contains "bot";
/// otherwise benign.
LabelOutcome label_record(const Ja4dbRecord &rec, const std::vector<std::string> &good_bots = default_good_bots());

struct LabeledRecord {
  FeatureVector features;
  Label label = Label::Benign;
  std::uint64_t source_index = 0;
  std::string ja4;

  friend bool operator==(const LabeledRecord &, const LabeledRecord &) = default;
};

/// Published class composition of a reference JA4DB snapshot; printed next to
/// ingest counts as a drift reference.
struct ReferenceComposition {
  static constexpr std::int64_t total = 227404;
  static constexpr std::int64_t bad_bot = 50212;
  static constexpr std::int64_t benign = 148610;
  static constexpr std::int64_t good_bot_excluded = 32007;
};

struct IngestStats {
  std::int64_t total_records = 0;
  std::int64_t missing_fingerprint = 0;
  std::int64_t malformed_fingerprint = 0;
  std::int64_t good_bot_excluded = 0;
  std::int64_t bad_bot = 0;
  std::int64_t benign = 0;
  std::vector<std::string> malformed_examples; // first few, for diagnostics

  nlohmann::json to_json() const;
};

struct IngestResult {
  std::vector<LabeledRecord> labeled;
  IngestStats stats;
};

struct IngestOptions {
  std::vector<std::string> good_bots = default_good_bots();
};

IngestResult ingest_json(const nlohmann::json &root, const IngestOptions &opts = {});
IngestResult ingest(const std::filesystem::path &path, const IngestOptions &opts = {});

struct SplitManifest {
  std::uint64_t seed = 42;
  double ratio = 0.8;
  std::uint64_t n = 0;
  std::vector<std::uint32_t> train_indices;
  std::vector<std::uint32_t> test_indices;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json &doc);

  friend bool operator==(const SplitManifest &, const SplitManifest &) = default;
};

/// Number of test rows for n records: round((1 - ratio) * n).
std::uint64_t test_size(std::uint64_t n, double ratio);

/// Seeded permutation of 0..n-1; the first test_size(n) entries form the
/// test set, the rest the training set; both lists are returned sorted.
SplitManifest split(std::uint64_t n, std::uint64_t seed, double ratio = 0.8);

/// Labeled dataset CSV (header: dataset_header()).
const std::vector<std::string> &dataset_header();
void write_dataset_csv(const std::filesystem::path &path, const std::vector<LabeledRecord> &rows);
std::vector<LabeledRecord> read_dataset_csv(const std::filesystem::path &path);

/// Per-split class balance for a manifest over `rows`.
nlohmann::json split_balance(const std::vector<LabeledRecord> &rows, const SplitManifest &manifest);

} // namespace ja4ml
