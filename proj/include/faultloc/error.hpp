#pragma once

#include <stdexcept>
#include <string>

namespace faultloc {

/// Base error for every failure raised by the library. `code()` is a short
/// machine-readable tag ("invalid_argument", "io", "parse", ...) that the CLI
/// prints alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error("invalid_argument", message);
}

}  // namespace faultloc
