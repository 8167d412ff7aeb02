// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ja4ml/error.hpp"

namespace ja4ml {

/// Placeholder for absent categorical values. Never assigned a code; encodes to 0.
inline constexpr std::string_view kMissing = "<missing>";

/// Positional decomposition of a JA4 string.
struct Ja4Parts {
  std::string protocol;    // "t" | "q"
  std::string tls_version; // "13", "12", ..., "00"
  std::string sni_flag;    // "d" | "i"
  int cipher_count = 0;
  int ext_count = 0;
  std::string alpn_code;
  std::string ja4_b;
  std::string ja4_c;

  friend bool operator==(const Ja4Parts &, const Ja4Parts &) = default;
};

class Ja4FormatError : public DataError {
public:
  using DataError::DataError;
};

/// Slices "t13d1516h2_8daaf6152771_02713d6af862" into its fields. Throws
/// Ja4FormatError on any shape violation.
Ja4Parts parse_ja4_string(std::string_view text);

/// One modelling row: the JA4 decomposition plus JA4DB metadata.
struct FeatureVector {
  std::string protocol{kMissing};
  std::string tls_version{kMissing};
  std::string sni_flag{kMissing};
  int cipher_count = 0;
  int ext_count = 0;
  std::string alpn_code{kMissing};
  std::string ja4_b{kMissing};
  std::string ja4_c{kMissing};
  std::string application{kMissing};
  std::string os{kMissing};
  std::string device{kMissing};
  bool verified = false;
  std::int64_t observation_count = 0;

  static FeatureVector from_parts(const Ja4Parts &parts);

  friend bool operator==(const FeatureVector &, const FeatureVector &) = default;
};

/// Model input columns, in the fixed order they appear in the encoded matrix.
/// `application` is opt-in (include_application) because the label is derived
/// from it.
std::vector<std::string> feature_columns(bool include_application);

/// Columns whose values are label-encoded.
const std::vector<std::string> &categorical_columns();

bool is_categorical(std::string_view column);

/// Raw (text) value of a categorical column.
const std::string &categorical_value(const FeatureVector &fv, std::string_view column);

/// Per-feature dictionary from category text to a dense code 1..K, fitted
/// over lexicographically sorted distinct values. Code 0 is reserved for
/// unseen and missing values.
class CategoryEncoder {
public:
  using Mapping = std::map<std::string, int, std::less<>>;

  int code(std::string_view feature, std::string_view category) const;
  const std::map<std::string, Mapping, std::less<>> &mappings() const noexcept { return mappings_; }

  nlohmann::json to_json() const;
  static CategoryEncoder from_json(const nlohmann::json &doc);

  friend bool operator==(const CategoryEncoder &, const CategoryEncoder &) = default;

private:
  friend CategoryEncoder fit_encoder(const std::vector<FeatureVector> &, const std::vector<std::string> &);
  std::map<std::string, Mapping, std::less<>> mappings_;
};

CategoryEncoder fit_encoder(const std::vector<FeatureVector> &records,
                            const std::vector<std::string> &categorical_features);

/// Encodes one record into the numeric row for `columns` (see feature_columns).
std::vector<double> encode(const FeatureVector &record, const CategoryEncoder &encoder,
                           const std::vector<std::string> &columns);

} // namespace ja4ml
