#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bricks {

/// Raised when a caller breaks a documented precondition (bad indices,
/// mismatched shapes, stepping a finished episode).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid or missing configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every pivot is masked out; the caller terminates the episode.
class NoValidAction : public std::runtime_error {
 public:
  NoValidAction() : std::runtime_error("no valid action available") {}
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

}  // namespace bricks
