#pragma once

#include <stdexcept>
#include <string>

namespace netadjust {

// Mirrors na_status in the C API; keep the numeric values in sync.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kEmptyInput = 2,
  kSchema = 3,
  kMissingCell = 4,
  kOutOfRange = 5,
  kDuplicateKey = 6,
  kInfiniteHazard = 7,
  kInconsistentInputs = 8,
  kExtrapolation = 9,
  kIo = 10,
  kInternal = 11,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace netadjust
