#pragma once

#include <stdexcept>
#include <string>

namespace deskagent {

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable name (e.g. "UnknownAction", "SchemaError").
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace deskagent
