#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lowrank {

enum class ErrorKind {
  InvalidInput,
  InvalidRank,
  Convergence,
  Io,
  UnsupportedFormat,
  Format,
  CorruptFile,
  UnsupportedVersion,
  Encode,
  UndefinedError,
  Unavailable,
  Bridge,
  EmptyCorpus,
  Plot,
  Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (and the CLI)
/// can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lowrank
