#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace depthsynth {

enum class ErrorCode {
  EmptyDepth,
  EmptyResult,
  EmptyDataset,
  InsufficientOverlap,
  InsufficientValid,
  ShapeError,
  WeightError,
  FactorError,
  ConfigError,
  FormatError,
  CorruptFile,
  RangeError,
  ManifestError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (CLI, bindings) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace depthsynth
