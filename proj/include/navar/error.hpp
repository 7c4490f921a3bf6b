#pragma once

#include <stdexcept>
#include <string>

namespace navar {

enum class ErrorCode {
  kDimension,
  kContract,
  kConfig,
  kParse,
  kVersion,
  kDivergence,
  kDatasetTooShort,
  kConstantVariable,
  kUndefinedAuroc,
  kUnsupported,
  kIo,
  kGeneration,
};

const char* error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// C layer can map it onto a status value without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace navar
