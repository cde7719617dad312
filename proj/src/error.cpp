#include "netdelay/error.hpp"

namespace netdelay {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicatePortInPath: return "DuplicatePortInPath";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::NonPositiveLabel: return "NonPositiveLabel";
    case ErrorCode::UnknownLinkPort: return "UnknownLinkPort";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::UnknownFlow: return "UnknownFlow";
    case ErrorCode::NegativeTimestamp: return "NegativeTimestamp";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::GraphNotScalar: return "GraphNotScalar";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::NoDeliveredPackets: return "NoDeliveredPackets";
    case ErrorCode::NumericalError: return "NumericalError";
  }
  return "Unknown";
}

}  // namespace netdelay
