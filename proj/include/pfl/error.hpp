#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfl {

enum class ErrorCode {
  InvalidBounds,
  InfeasibleLabel,
  InvalidInstance,
  OffManifold,
  Arity,
  EpisodeFinished,
  Shape,
  Format,
  Io,
  Usage,
  UndefinedMetric,
  Divergence,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidBounds: return "invalid-bounds";
    case ErrorCode::InfeasibleLabel: return "infeasible-label";
    case ErrorCode::InvalidInstance: return "invalid-instance";
    case ErrorCode::OffManifold: return "off-manifold";
    case ErrorCode::Arity: return "arity";
    case ErrorCode::EpisodeFinished: return "episode-finished";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Format: return "format";
    case ErrorCode::Io: return "io";
    case ErrorCode::Usage: return "usage";
    case ErrorCode::UndefinedMetric: return "undefined-metric";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::InvalidConfig: return "invalid-config";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pfl
