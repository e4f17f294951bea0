#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace milogit {

// All library failures are reported as milogit::error with a short stable
// code (used by the CLI's machine-parsable error records) plus a message.
class error : public std::runtime_error {
public:
  error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

}  // namespace milogit
