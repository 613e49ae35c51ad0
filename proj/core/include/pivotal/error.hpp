#pragma once

#include <stdexcept>
#include <string>

namespace pivotal {

enum class ErrorCode {
    SerializeInvalid,
    IndexOutOfRange,
    LexiconMalformed,
    GroupTooSmall,
    MisalignedLogprobs,
    EmptyDemos,
    MissingUpstreamOutput,
    EmptyCorpus,
    ConfigError,
    IoError,
};

const char* to_string(ErrorCode code);

/// Library error with a stable machine-readable code.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace pivotal
