#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace saesim {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: unreadable files, malformed formats, violated type invariants,
/// bad arguments. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Input was well-formed but the analysis cannot proceed (too few pairs,
/// zero variance, rank collapse). The CLI maps these to exit code 3.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public InputError {
 public:
  InvariantViolation(const std::string& type, const std::string& rule)
      : InputError(type + ": invariant violated: " + rule), type_(type), rule_(rule) {}

  const std::string& type_name() const noexcept { return type_; }
  const std::string& rule() const noexcept { return rule_; }

 private:
  std::string type_;
  std::string rule_;
};

/// Malformed file content. `offset` is a byte offset for binary formats and a
/// 1-based line number for text formats; `kind` says which.
class FormatError : public InputError {
 public:
  enum class Location { byte_offset, line };

  FormatError(const std::string& what, std::uint64_t offset, Location kind = Location::byte_offset)
      : InputError(what + (kind == Location::line ? " (line " : " (byte offset ") +
                   std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset),
        kind_(kind) {}

  /// Message without the location suffix.
  const std::string& detail() const noexcept { return detail_; }
  std::uint64_t offset() const noexcept { return offset_; }
  Location location() const noexcept { return kind_; }

 private:
  std::string detail_;
  std::uint64_t offset_;
  Location kind_;
};

class NonFiniteEntry : public InputError {
 public:
  NonFiniteEntry(std::int64_t row, std::int64_t col)
      : InputError("NonFiniteEntry(" + std::to_string(row) + ", " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  std::int64_t row() const noexcept { return row_; }
  std::int64_t col() const noexcept { return col_; }

 private:
  std::int64_t row_;
  std::int64_t col_;
};

class DuplicateCategory : public InputError {
 public:
  explicit DuplicateCategory(const std::string& name)
      : InputError("DuplicateCategory: " + name), name_(name) {}
  const std::string& category() const noexcept { return name_; }

 private:
  std::string name_;
};

class UnknownCategory : public InputError {
 public:
  explicit UnknownCategory(const std::string& name) : InputError("unknown category: " + name) {}
};

class ZeroVariance : public DegenerateError {
 public:
  using DegenerateError::DegenerateError;
};

class TooFewPairs : public DegenerateError {
 public:
  TooFewPairs(std::size_t have, std::size_t need)
      : DegenerateError("TooFewPairs: " + std::to_string(have) + " pairs, need at least " +
                        std::to_string(need)),
        have_(have) {}
  std::size_t pairs() const noexcept { return have_; }

 private:
  std::size_t have_;
};

}  // namespace saesim
