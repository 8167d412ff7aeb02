// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ja4ml/csv.hpp"
#include "ja4ml/prng.hpp"

namespace ja4ml {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool contains_ci(const std::optional<std::string> &hay, const std::string &needle_lower) {
  return hay && lower(*hay).find(needle_lower) != std::string::npos;
}

std::optional<std::string> text_field(const nlohmann::json &v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return std::nullopt;
  return v.dump();
}

std::optional<std::int64_t> int_field(const nlohmann::json &v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_unsigned()) return static_cast<std::int64_t>(v.get<std::uint64_t>());
  if (v.is_number_float()) return static_cast<std::int64_t>(v.get<double>());
  if (v.is_string()) {
    try {
      return std::stoll(v.get<std::string>());
    } catch (const std::exception &) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<bool> bool_field(const nlohmann::json &v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>() != 0.0;
  if (v.is_string()) {
    const auto s = lower(v.get<std::string>());
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
  }
  return std::nullopt;
}

std::string meta_or_missing(const std::optional<std::string> &v) {
  if (!v) return std::string(kMissing);
  auto t = trim(*v);
  return t.empty() ? std::string(kMissing) : t;
}

double pct(std::int64_t part, std::int64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

const std::vector<std::string> kHeader = {
    "source_index", "label",       "ja4",    "protocol", "tls_version", "sni_flag",
    "cipher_count", "ext_count",   "alpn_code", "ja4_b", "ja4_c",       "application",
    "os",           "device",      "verified", "observation_count"};

} // namespace

Ja4dbRecord Ja4dbRecord::from_json(const nlohmann::json &obj) {
  if (!obj.is_object()) throw DataError("JA4DB entry is not a JSON object");
  Ja4dbRecord r;
  for (const auto &[key, value] : obj.items()) {
    if (key == "application") r.application = text_field(value);
    else if (key == "library") r.library = text_field(value);
    else if (key == "device") r.device = text_field(value);
    else if (key == "os") r.os = text_field(value);
    else if (key == "user_agent_string") r.user_agent_string = text_field(value);
    else if (key == "certificate_authority") r.certificate_authority = text_field(value);
    else if (key == "observation_count") r.observation_count = int_field(value);
    else if (key == "verified") r.verified = bool_field(value);
    else if (key == "ja4_fingerprint") r.ja4_fingerprint = text_field(value);
    else r.other[key] = value;
  }
  return r;
}

std::string_view to_string(Label l) { return l == Label::BadBot ? "bad_bot" : "benign"; }

Label label_from_string(std::string_view s) {
  if (s == "bad_bot") return Label::BadBot;
  if (s == "benign") return Label::Benign;
  throw DataError(fmt::format("unknown label '{}'", s));
}

const std::vector<std::string> &default_good_bots() {
  static const std::vector<std::string> ids = {"googlebot", "bingbot", "linkedinbot"};
  return ids;
}

LabelOutcome label_record(const Ja4dbRecord &rec, const std::vector<std::string> &good_bots) {
  for (const auto &id : good_bots) {
    const auto needle = lower(id);
    if (contains_ci(rec.application, needle) || contains_ci(rec.user_agent_string, needle)) {
      return LabelOutcome::GoodBotExcluded;
    }
  }
  return contains_ci(rec.application, "bot") ? LabelOutcome::BadBot : LabelOutcome::Benign;
}

nlohmann::json IngestStats::to_json() const {
  using R = ReferenceComposition;
  nlohmann::json j;
  j["total_records"] = total_records;
  j["missing_fingerprint"] = missing_fingerprint;
  j["malformed_fingerprint"] = malformed_fingerprint;
  j["good_bot_excluded"] = good_bot_excluded;
  j["bad_bot"] = bad_bot;
  j["benign"] = benign;
  j["labeled"] = bad_bot + benign;
  j["percent_of_total"] = {{"bad_bot", pct(bad_bot, total_records)},
                           {"benign", pct(benign, total_records)},
                           {"good_bot_excluded", pct(good_bot_excluded, total_records)}};
  j["reference"] = {{"total_records", R::total},
                    {"bad_bot", R::bad_bot},
                    {"benign", R::benign},
                    {"good_bot_excluded", R::good_bot_excluded}};
  j["delta_vs_reference"] = {{"total_records", total_records - R::total},
                             {"bad_bot", bad_bot - R::bad_bot},
                             {"benign", benign - R::benign},
                             {"good_bot_excluded", good_bot_excluded - R::good_bot_excluded}};
  j["malformed_examples"] = malformed_examples;
  return j;
}

IngestResult ingest_json(const nlohmann::json &root, const IngestOptions &opts) {
  if (!root.is_array()) throw DataError("JA4DB export must be a JSON array at the root");
  IngestResult out;
  auto &st = out.stats;
  std::uint64_t index = 0;
  for (const auto &entry : root) {
    const auto source_index = index++;
    ++st.total_records;
    const auto rec = Ja4dbRecord::from_json(entry);
    const auto fingerprint = rec.ja4_fingerprint ? trim(*rec.ja4_fingerprint) : std::string{};
    if (fingerprint.empty()) {
      ++st.missing_fingerprint;
      continue;
    }
    Ja4Parts parts;
    try {
      parts = parse_ja4_string(fingerprint);
    } catch (const Ja4FormatError &) {
      ++st.malformed_fingerprint;
      if (st.malformed_examples.size() < 10) {
        st.malformed_examples.push_back(fmt::format("#{}: {}", source_index, fingerprint));
      }
      continue;
    }
    const auto outcome = label_record(rec, opts.good_bots);
    if (outcome == LabelOutcome::GoodBotExcluded) {
      ++st.good_bot_excluded;
      continue;
    }
    LabeledRecord lr;
    lr.features = FeatureVector::from_parts(parts);
    lr.features.application = meta_or_missing(rec.application);
    lr.features.os = meta_or_missing(rec.os);
    lr.features.device = meta_or_missing(rec.device);
    lr.features.verified = rec.verified.value_or(false);
    lr.features.observation_count = std::max<std::int64_t>(0, rec.observation_count.value_or(0));
    lr.label = outcome == LabelOutcome::BadBot ? Label::BadBot : Label::Benign;
    lr.source_index = source_index;
    lr.ja4 = fingerprint;
    (lr.label == Label::BadBot ? st.bad_bot : st.benign) += 1;
    out.labeled.push_back(std::move(lr));
  }
  return out;
}

IngestResult ingest(const std::filesystem::path &path, const IngestOptions &opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return ingest_json(root, opts);
}

nlohmann::json SplitManifest::to_json() const {
  return {{"format", "ja4ml-split"}, {"version", 1},         {"prng", "splitmix64"},
          {"seed", seed},           {"ratio", ratio},        {"n", n},
          {"train_indices", train_indices}, {"test_indices", test_indices}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json &doc) {
  if (!doc.is_object() || doc.value("format", "") != "ja4ml-split") throw DataError("not a split manifest");
  if (doc.value("version", 0) != 1) throw DataError("unsupported split manifest version");
  SplitManifest m;
  m.seed = doc.at("seed").get<std::uint64_t>();
  m.ratio = doc.at("ratio").get<double>();
  m.n = doc.at("n").get<std::uint64_t>();
  m.train_indices = doc.at("train_indices").get<std::vector<std::uint32_t>>();
  m.test_indices = doc.at("test_indices").get<std::vector<std::uint32_t>>();
  if (m.train_indices.size() + m.test_indices.size() != m.n) throw DataError("split manifest does not partition n rows");
  return m;
}

std::uint64_t test_size(std::uint64_t n, double ratio) {
  return static_cast<std::uint64_t>(std::llround((1.0 - ratio) * static_cast<double>(n)));
}

SplitManifest split(std::uint64_t n, std::uint64_t seed, double ratio) {
  if (n < 2) throw DataError(fmt::format("split needs at least 2 records, got {}", n));
  if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("split ratio must lie in (0, 1)");
  if (n > UINT32_MAX) throw DataError("split: too many records");
  SplitManifest m;
  m.seed = seed;
  m.ratio = ratio;
  m.n = n;
  const auto perm = seeded_permutation(static_cast<std::uint32_t>(n), seed);
  const auto n_test = test_size(n, ratio);
  m.test_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  m.train_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(m.test_indices.begin(), m.test_indices.end());
  std::sort(m.train_indices.begin(), m.train_indices.end());
  return m;
}

const std::vector<std::string> &dataset_header() { return kHeader; }

void write_dataset_csv(const std::filesystem::path &path, const std::vector<LabeledRecord> &rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << csv::join(kHeader) << '\n';
  for (const auto &r : rows) {
    const auto &f = r.features;
    out << csv::join({std::to_string(r.source_index), std::string(to_string(r.label)), r.ja4, f.protocol,
                      f.tls_version, f.sni_flag, std::to_string(f.cipher_count), std::to_string(f.ext_count),
                      f.alpn_code, f.ja4_b, f.ja4_c, f.application, f.os, f.device,
                      f.verified ? "true" : "false", std::to_string(f.observation_count)})
        << '\n';
  }
}

std::vector<LabeledRecord> read_dataset_csv(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
  std::vector<std::string> fields;
  if (!csv::read_record(in, fields) || fields != kHeader) {
    throw DataError(fmt::format("'{}': unexpected dataset header", path.string()));
  }
  std::vector<LabeledRecord> rows;
  std::size_t line = 1;
  while (csv::read_record(in, fields)) {
    ++line;
    if (fields.size() != kHeader.size()) {
      throw DataError(fmt::format("'{}' record {}: expected {} fields, got {}", path.string(), line,
                                  kHeader.size(), fields.size()));
    }
    try {
      LabeledRecord r;
      r.source_index = std::stoull(fields[0]);
      r.label = label_from_string(fields[1]);
      r.ja4 = fields[2];
      auto &f = r.features;
      f.protocol = fields[3];
      f.tls_version = fields[4];
      f.sni_flag = fields[5];
      f.cipher_count = std::stoi(fields[6]);
      f.ext_count = std::stoi(fields[7]);
      f.alpn_code = fields[8];
      f.ja4_b = fields[9];
      f.ja4_c = fields[10];
      f.application = fields[11];
      f.os = fields[12];
      f.device = fields[13];
      f.verified = fields[14] == "true";
      f.observation_count = std::stoll(fields[15]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error &e) {
      throw DataError(fmt::format("'{}' record {}: {}", path.string(), line, e.what()));
    }
  }
  return rows;
}

nlohmann::json split_balance(const std::vector<LabeledRecord> &rows, const SplitManifest &manifest) {
  auto summarize = [&](const std::vector<std::uint32_t> &idx) {
    std::int64_t bad = 0;
    for (auto i : idx) bad += rows.at(i).label == Label::BadBot;
    const auto n = static_cast<std::int64_t>(idx.size());
    return nlohmann::json{{"rows", n}, {"bad_bot", bad}, {"benign", n - bad}, {"bad_bot_percent", pct(bad, n)}};
  };
  return {{"train", summarize(manifest.train_indices)}, {"test", summarize(manifest.test_indices)}};
}

} // namespace ja4ml
