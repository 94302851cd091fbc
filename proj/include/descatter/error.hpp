#pragma once

#include <stdexcept>
#include <string>

namespace descatter {

enum class ErrorKind {
  kInvalidArgument,  // bad parameters, mismatched dimensions, bad config
  kIo,               // unreadable or unwritable files, malformed formats
  kNumeric,          // non-finite values or degenerate numeric state
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& what,
                    ErrorKind kind = ErrorKind::kInvalidArgument) {
  if (!condition) throw Error(kind, what);
}

/// Process exit code for an error kind: 2 invalid config, 3 I/O, 4 numeric.
inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return 2;
    case ErrorKind::kIo: return 3;
    case ErrorKind::kNumeric: return 4;
  }
  return 1;
}

}  // namespace descatter
