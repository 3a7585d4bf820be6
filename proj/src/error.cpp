#include "lowrank/error.hpp"

namespace lowrank {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::InvalidRank: return "invalid rank";
    case ErrorKind::Convergence: return "convergence failure";
    case ErrorKind::Io: return "io error";
    case ErrorKind::UnsupportedFormat: return "unsupported format";
    case ErrorKind::Format: return "format error";
    case ErrorKind::CorruptFile: return "corrupt file";
    case ErrorKind::UnsupportedVersion: return "unsupported version";
    case ErrorKind::Encode: return "encode error";
    case ErrorKind::UndefinedError: return "undefined error";
    case ErrorKind::Unavailable: return "codec unavailable";
    case ErrorKind::Bridge: return "codec bridge error";
    case ErrorKind::EmptyCorpus: return "empty corpus";
    case ErrorKind::Plot: return "plot error";
    case ErrorKind::Config: return "config error";
  }
  return "error";
}

}  // namespace lowrank
