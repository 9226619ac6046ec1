#pragma once

#include <stdexcept>
#include <string>

namespace opd {

// Error taxonomy: invalid_input covers precondition violations that a caller
// can fix (bad densities, mismatched particle counts, malformed expressions);
// numeric_error covers failures of the numerics themselves (truncation targets
// unreachable, quadrature breakdown, state spaces beyond configured limits).
class invalid_input : public std::invalid_argument {
public:
  explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

class parse_error : public invalid_input {
public:
  parse_error(const std::string& what, std::size_t position)
      : invalid_input(what + " (at position " + std::to_string(position) + ")"),
        pos(position) {}
  std::size_t pos;
};

}  // namespace opd
