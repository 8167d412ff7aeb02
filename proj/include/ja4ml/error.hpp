// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ja4ml {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A wire-format violation. Carries the offending field name and the byte
/// offset (relative to the start of the buffer handed to the parser).
class ParseError : public Error {
public:
  ParseError(std::string field, std::size_t offset, const std::string &what);

  const std::string &field() const noexcept { return field_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  std::string field_;
  std::size_t offset_;
};

/// Problems reading a capture source (file access, magic, link type, truncation).
class CaptureError : public Error {
public:
  using Error::Error;
};

/// Malformed inputs to the modelling pipeline (dataset, manifest, model files).
class DataError : public Error {
public:
  using Error::Error;
};

} // namespace ja4ml
