#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netdelay {

enum class ErrorCode {
  DanglingReference,
  DuplicatePortInPath,
  DuplicateId,
  EmptyPath,
  InvalidField,
  NonPositiveLabel,
  UnknownLinkPort,
  UnknownDevice,
  UnknownFlow,
  NegativeTimestamp,
  EmptyDataset,
  UnknownFeature,
  ParseError,
  IoError,
  ShapeMismatch,
  EmptySequence,
  GraphNotScalar,
  InvalidConfig,
  MissingLabels,
  InvalidSize,
  NoDeliveredPackets,
  NumericalError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a typed code so that callers
/// (and tests) can branch on the kind of failure rather than on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace netdelay
