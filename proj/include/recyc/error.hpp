#pragma once

#include <stdexcept>
#include <string>

namespace recyc {

enum class ErrorKind {
  InvalidParameter,
  DegenerateChannel,
  SizeLimitExceeded,
  NoConvergence,
  ConfigInvalid,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::DegenerateChannel: return "degenerate-channel";
    case ErrorKind::SizeLimitExceeded: return "size-limit-exceeded";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::ConfigInvalid: return "config-invalid";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Config errors carry the offending key so the CLI can name it.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorKind::ConfigInvalid, key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace recyc
