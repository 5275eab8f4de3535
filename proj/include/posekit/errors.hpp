#pragma once

#include <stdexcept>
#include <string>

namespace posekit {

enum class ErrorCode {
  kInvalidQuaternion,
  kInvalidRotation,
  kDegenerateAxis,
  kIllConditionedLog,
  kEmptyInput,
  kInvalidArgument,
  kInsufficientHypotheses,
  kInsufficientAxes,
  kInvalidConcentration,
  kNoActiveHypotheses,
  kWidthMismatch,
  kNonPositiveDepth,
  kEmptyPointSet,
  kEmptyDataset,
  kDivergence,
  kParse,
  kVersion,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace posekit
