#pragma once

#include <stdexcept>
#include <string>

namespace ssfit {

// Bad inputs: malformed files, schema violations, configs that do not parse.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures while running: integration blow-ups, checkpoint corruption.
// The CLI maps these to exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace ssfit
