#include "povmscope/error.hpp"

namespace povmscope {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kNotPsd: return "not-psd";
    case ErrorKind::kDegenerateHull: return "degenerate-hull";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kNonPhysicalState: return "nonphysical-state";
    case ErrorKind::kDegenerateData: return "degenerate-data";
    case ErrorKind::kFit: return "fit";
    case ErrorKind::kLift: return "lift";
    case ErrorKind::kFrameUnderdetermined: return "frame-underdetermined";
    case ErrorKind::kInvalidAnchor: return "invalid-anchor";
    case ErrorKind::kUndefinedFidelity: return "undefined-fidelity";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace povmscope
