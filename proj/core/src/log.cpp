#include "nnbcd/log.hpp"

#include <atomic>
#include <iostream>

#include "nnbcd/error.hpp"

namespace nnbcd {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warning};
}

void set_log_level(LogLevel level) noexcept { g_level = level; }
LogLevel log_level() noexcept { return g_level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load()) return;
  static constexpr const char* tags[] = {"debug", "info", "warning", "error"};
  std::clog << "[nnbcd " << tags[static_cast<int>(level)] << "] " << message << '\n';
}

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::KernelTooLarge: return "KernelTooLarge";
    case ErrorCode::NonPositiveGamma: return "NonPositiveGamma";
    case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::InvalidRankChain: return "InvalidRankChain";
    case ErrorCode::InfeasibleCompressedWeight: return "InfeasibleCompressedWeight";
    case ErrorCode::UnsupportedLoss: return "UnsupportedLoss";
    case ErrorCode::UnsupportedActivation: return "UnsupportedActivation";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::MemoryBudget: return "MemoryBudget";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

}  // namespace nnbcd
