// SPDX-License-Identifier: Apache-2.0
#include "ja4ml/features.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace ja4ml {

namespace {

bool all_of_chars(std::string_view s, bool (*pred)(char)) {
  return std::all_of(s.begin(), s.end(), pred);
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f'); }
bool is_alnum(char c) { return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

[[noreturn]] void malformed(std::string_view text, std::string_view why) {
  throw Ja4FormatError(fmt::format("malformed JA4 '{}': {}", text, why));
}

const std::vector<std::string> kCategorical = {"protocol", "tls_version", "sni_flag", "alpn_code", "ja4_b",
                                               "ja4_c",    "application", "os",       "device"};

} // namespace

Ja4Parts parse_ja4_string(std::string_view text) {
  const auto first = text.find('_');
  const auto second = first == std::string_view::npos ? first : text.find('_', first + 1);
  if (second == std::string_view::npos || text.find('_', second + 1) != std::string_view::npos) {
    malformed(text, "expected three '_'-separated parts");
  }
  const auto a = text.substr(0, first);
  const auto b = text.substr(first + 1, second - first - 1);
  const auto c = text.substr(second + 1);

  if (a.size() != 10) malformed(text, fmt::format("ja4_a has length {}, expected 10", a.size()));
  if (a[0] != 't' && a[0] != 'q') malformed(text, "protocol must be 't' or 'q'");
  if (!is_alnum(a[1]) || !is_alnum(a[2])) malformed(text, "bad TLS version code");
  if (a[3] != 'd' && a[3] != 'i') malformed(text, "SNI flag must be 'd' or 'i'");
  if (!all_of_chars(a.substr(4, 4), is_digit)) malformed(text, "cipher/extension counts must be digits");
  if (!is_alnum(a[8]) || !is_alnum(a[9])) malformed(text, "bad ALPN code");
  if (b.size() != 12 || !all_of_chars(b, is_lower_hex)) malformed(text, "ja4_b must be 12 lowercase hex chars");
  if (c.size() != 12 || !all_of_chars(c, is_lower_hex)) malformed(text, "ja4_c must be 12 lowercase hex chars");

  Ja4Parts p;
  p.protocol = a.substr(0, 1);
  p.tls_version = a.substr(1, 2);
  p.sni_flag = a.substr(3, 1);
  p.cipher_count = (a[4] - '0') * 10 + (a[5] - '0');
  p.ext_count = (a[6] - '0') * 10 + (a[7] - '0');
  p.alpn_code = a.substr(8, 2);
  p.ja4_b = b;
  p.ja4_c = c;
  return p;
}

FeatureVector FeatureVector::from_parts(const Ja4Parts &parts) {
  FeatureVector fv;
  fv.protocol = parts.protocol;
  fv.tls_version = parts.tls_version;
  fv.sni_flag = parts.sni_flag;
  fv.cipher_count = parts.cipher_count;
  fv.ext_count = parts.ext_count;
  fv.alpn_code = parts.alpn_code;
  fv.ja4_b = parts.ja4_b;
  fv.ja4_c = parts.ja4_c;
  return fv;
}

std::vector<std::string> feature_columns(bool include_application) {
  std::vector<std::string> cols = {"protocol", "tls_version", "sni_flag", "cipher_count", "ext_count",
                                   "alpn_code", "ja4_b", "ja4_c"};
  if (include_application) cols.emplace_back("application");
  for (const char *c : {"os", "device", "verified", "observation_count"}) cols.emplace_back(c);
  return cols;
}

const std::vector<std::string> &categorical_columns() { return kCategorical; }

bool is_categorical(std::string_view column) {
  return std::find(kCategorical.begin(), kCategorical.end(), column) != kCategorical.end();
}

const std::string &categorical_value(const FeatureVector &fv, std::string_view column) {
  if (column == "protocol") return fv.protocol;
  if (column == "tls_version") return fv.tls_version;
  if (column == "sni_flag") return fv.sni_flag;
  if (column == "alpn_code") return fv.alpn_code;
  if (column == "ja4_b") return fv.ja4_b;
  if (column == "ja4_c") return fv.ja4_c;
  if (column == "application") return fv.application;
  if (column == "os") return fv.os;
  if (column == "device") return fv.device;
  throw DataError(fmt::format("'{}' is not a categorical column", column));
}

int CategoryEncoder::code(std::string_view feature, std::string_view category) const {
  const auto f = mappings_.find(feature);
  if (f == mappings_.end()) return 0;
  const auto c = f->second.find(category);
  return c == f->second.end() ? 0 : c->second;
}

CategoryEncoder fit_encoder(const std::vector<FeatureVector> &records,
                            const std::vector<std::string> &categorical_features) {
  if (records.empty()) throw DataError("fit_encoder: empty record list");
  CategoryEncoder enc;
  for (const auto &feature : categorical_features) {
    std::set<std::string, std::less<>> distinct;
    for (const auto &r : records) {
      const auto &v = categorical_value(r, feature);
      if (v != kMissing) distinct.insert(v);
    }
    auto &mapping = enc.mappings_[feature];
    int next = 1;
    for (const auto &v : distinct) mapping.emplace(v, next++);
  }
  return enc;
}

nlohmann::json CategoryEncoder::to_json() const {
  nlohmann::json doc;
  doc["format"] = "ja4ml-encoder";
  doc["version"] = 1;
  doc["features"] = nlohmann::json::object();
  for (const auto &[feature, mapping] : mappings_) {
    auto &m = doc["features"][feature];
    m = nlohmann::json::object();
    for (const auto &[category, code] : mapping) m[category] = code;
  }
  return doc;
}

CategoryEncoder CategoryEncoder::from_json(const nlohmann::json &doc) {
  if (!doc.is_object() || doc.value("format", "") != "ja4ml-encoder") {
    throw DataError("not a ja4ml encoder document");
  }
  if (doc.value("version", 0) != 1) throw DataError("unsupported encoder version");
  CategoryEncoder enc;
  for (const auto &[feature, mapping] : doc.at("features").items()) {
    auto &m = enc.mappings_[feature];
    for (const auto &[category, code] : mapping.items()) m.emplace(category, code.get<int>());
  }
  return enc;
}

std::vector<double> encode(const FeatureVector &record, const CategoryEncoder &encoder,
                           const std::vector<std::string> &columns) {
  std::vector<double> row;
  row.reserve(columns.size());
  for (const auto &col : columns) {
    if (is_categorical(col)) {
      row.push_back(encoder.code(col, categorical_value(record, col)));
    } else if (col == "cipher_count") {
      row.push_back(record.cipher_count);
    } else if (col == "ext_count") {
      row.push_back(record.ext_count);
    } else if (col == "verified") {
      row.push_back(record.verified ? 1.0 : 0.0);
    } else if (col == "observation_count") {
      row.push_back(static_cast<double>(record.observation_count));
    } else {
      throw DataError(fmt::format("unknown feature column '{}'", col));
    }
  }
  return row;
}

} // namespace ja4ml
