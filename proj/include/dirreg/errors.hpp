// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_ERRORS_HPP
#define DIRREG_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace dirreg {

// Every failure carries a stable machine-readable code ("ZeroRow",
// "DimensionMismatch", ...) next to the human-readable message. The CLI
// surfaces the code in fit.json.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace dirreg

#endif  // DIRREG_ERRORS_HPP
