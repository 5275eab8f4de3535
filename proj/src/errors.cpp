#include "posekit/errors.hpp"

namespace posekit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidQuaternion: return "invalid-quaternion";
    case ErrorCode::kInvalidRotation: return "invalid-rotation";
    case ErrorCode::kDegenerateAxis: return "degenerate-axis";
    case ErrorCode::kIllConditionedLog: return "ill-conditioned-log";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInsufficientHypotheses: return "insufficient-hypotheses";
    case ErrorCode::kInsufficientAxes: return "insufficient-axes";
    case ErrorCode::kInvalidConcentration: return "invalid-concentration";
    case ErrorCode::kNoActiveHypotheses: return "no-active-hypotheses";
    case ErrorCode::kWidthMismatch: return "width-mismatch";
    case ErrorCode::kNonPositiveDepth: return "non-positive-depth";
    case ErrorCode::kEmptyPointSet: return "empty-point-set";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kVersion: return "version-mismatch";
  }
  return "unknown";
}

}  // namespace posekit
