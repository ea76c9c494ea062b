#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace povmscope {

enum class ErrorKind {
  kInvalidInput,
  kNotPsd,
  kDegenerateHull,
  kInfeasible,
  kNonPhysicalState,
  kDegenerateData,
  kFit,
  kLift,
  kFrameUnderdetermined,
  kInvalidAnchor,
  kUndefinedFidelity,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind and, when it passed
// through the pipeline, the label of the stage that produced it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace povmscope
