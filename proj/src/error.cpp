#include "h2mor/error.hpp"

namespace h2mor {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotStable: return "NotStable";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoUniqueSolution: return "NoUniqueSolution";
    case ErrorCode::SingularShift: return "SingularShift";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::RankDeficientData: return "RankDeficientData";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::SingularAhat: return "SingularAhat";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingularE: return "SingularE";
    case ErrorCode::StabilizationFailed: return "StabilizationFailed";
  }
  return "Unknown";
}

}  // namespace h2mor
