#pragma once

#include <stdexcept>
#include <string>

namespace swarmgrid {

// Mirrors sg_status in swarmgrid.h; values must stay in sync.
enum class ErrorCode : int {
  kInvalidConfig = 1,
  kPlacement = 2,
  kCapacity = 3,
  kLookup = 4,
  kInvalidAction = 5,
  kParse = 6,
  kValidation = 7,
  kIo = 8,
  kFormat = 9,
  kUnsupportedVersion = 10,
  kDivergence = 11,
  kContract = 12,
  kOracleTooLarge = 13,
  kState = 14,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace swarmgrid
