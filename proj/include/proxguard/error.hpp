#pragma once

#include <stdexcept>
#include <string>

namespace proxguard {

// Root of every error raised by the library. The `kind()` string is the
// machine-parsable reason the CLI prints.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define PROXGUARD_DEFINE_ERROR(Name, tag)                     \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what) : Error(tag, what) {} \
  }

PROXGUARD_DEFINE_ERROR(DomainError, "domain");
PROXGUARD_DEFINE_ERROR(IndexError, "index");
PROXGUARD_DEFINE_ERROR(ParameterError, "parameter");
PROXGUARD_DEFINE_ERROR(AuthenticationError, "authentication");
PROXGUARD_DEFINE_ERROR(RandomnessError, "randomness");
PROXGUARD_DEFINE_ERROR(ProtocolError, "protocol");
PROXGUARD_DEFINE_ERROR(StaleUpdateError, "stale-update");
PROXGUARD_DEFINE_ERROR(AuthError, "auth");
PROXGUARD_DEFINE_ERROR(DecodeError, "decode");
PROXGUARD_DEFINE_ERROR(ParseError, "parse");
PROXGUARD_DEFINE_ERROR(ValidationError, "validation");
PROXGUARD_DEFINE_ERROR(IoError, "io");
PROXGUARD_DEFINE_ERROR(UsageError, "usage");

#undef PROXGUARD_DEFINE_ERROR

}  // namespace proxguard
