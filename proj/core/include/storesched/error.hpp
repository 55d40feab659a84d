#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace storesched {

enum class ErrorCode {
  kNonPositiveDimension,
  kEfficiencyOutOfRange,
  kCapacityViolation,
  kRateViolation,
  kOverchargeViolation,
  kOverserveViolation,
  kNotEquivalent,
  kNotGreedy,
  kInfeasibleInput,
  kInfeasible,
  kParseError,
  kSchemaError,
  kNonFiniteValue,
  kDegenerateInput,
  kInvalidParams,
  kInsufficientData,
  kInvalidArgument,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; code() identifies the
// failure class so callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // what() without the leading code name.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

// First violation found by a verifier. `step` is 1-based (step 1 is the first
// entry of the residual trace); `store` is a 0-based index when applicable.
struct Violation {
  ErrorCode code;
  std::size_t step = 0;
  std::optional<std::size_t> store;
  std::string detail;

  std::string describe() const;
};

}  // namespace storesched
