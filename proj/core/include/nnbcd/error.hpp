#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nnbcd {

enum class ErrorCode {
  ShapeMismatch,
  NotPositiveDefinite,
  RankTooLarge,
  KernelTooLarge,
  NonPositiveGamma,
  BetaOutOfRange,
  InvalidRankChain,
  InfeasibleCompressedWeight,
  UnsupportedLoss,
  UnsupportedActivation,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  RaggedRows,
  NonNumericCell,
  HashMismatch,
  MemoryBudget,
  ConfigError,
  IoError,
  NumericalFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All library failures surface as this exception; `code()` identifies the
/// failure class so callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nnbcd
