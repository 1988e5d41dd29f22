#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coagtree {

/// Invalid user configuration (bad flag, malformed plan, out-of-range value).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Requested horizon is at or beyond the gelation guard, or the solver
/// observed second-moment blow-up.
class GelationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed tree text. `position()` is the byte offset of the failure.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

}  // namespace coagtree
