// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace ja4ml::csv {

/// RFC 4180 quoting: fields containing ',', '"', CR or LF are wrapped in
/// quotes with embedded quotes doubled.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string> &fields);

/// Reads one record (which may span lines inside quoted fields). Returns
/// false at end of input.
bool read_record(std::istream &in, std::vector<std::string> &fields);

} // namespace ja4ml::csv
