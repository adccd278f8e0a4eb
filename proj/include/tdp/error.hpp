#pragma once

#include <stdexcept>
#include <string>

namespace tdp {

// All fatal conditions in the library surface as tdp::Error; the CLI turns
// them into a message on stderr and a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& message) {
  throw Error(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(message);
}

}  // namespace tdp
