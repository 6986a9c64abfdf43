#pragma once

#include <stdexcept>
#include <string>

namespace sgda {

// Configuration problems (bad config file, out-of-range settings). CLI exit 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad runtime inputs (invalid environment condition, empty dataset...). Exit 2.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Formula evaluation failures (unresolvable signal names).
struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Formula text syntax errors.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sgda
