#ifndef GRAVDEN_ERROR_HPP
#define GRAVDEN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gravden {

enum class ErrorKind {
  EmptyInput,
  DegenerateLeaf,
  InvalidParameter,
  ParseError,
  IoError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DegenerateLeaf: return "DegenerateLeaf";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gravden

#endif  // GRAVDEN_ERROR_HPP
