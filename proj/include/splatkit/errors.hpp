#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splatkit {

/// Base of every error raised by the library. The CLI maps subclasses to
/// exit codes (see tools/splatkit.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands whose dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input too small or empty for the operation to be defined.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Data that parsed but violates a domain invariant (e.g. a rotation that
/// cannot be re-orthonormalized).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the byte offset (binary formats) or the
/// 1-based line number (text formats) where decoding failed.
class ParseError : public Error {
 public:
  enum class Location { kByte, kLine };

  ParseError(const std::string& what, Location kind, std::size_t where)
      : Error(what + (kind == Location::kByte ? " (at byte offset " : " (at line ") +
              std::to_string(where) + ")"),
        detail_(what),
        kind_(kind),
        where_(where) {}

  /// Message without the location suffix.
  const std::string& detail() const noexcept { return detail_; }
  Location location_kind() const noexcept { return kind_; }
  std::size_t location() const noexcept { return where_; }

 private:
  std::string detail_;
  Location kind_;
  std::size_t where_;
};

/// A recognised but unsupported variant of a format (e.g. colour PFM).
class UnsupportedVariantError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Filesystem failure: missing file, unwritable path, short read.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace splatkit
