#include "oamtomo/error.hpp"

namespace oamtomo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NonHermitianInput: return "NonHermitianInput";
    case ErrorCode::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DegenerateParameters: return "DegenerateParameters";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::RegionTooSmall: return "RegionTooSmall";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::AllZeroCoefficients: return "AllZeroCoefficients";
    case ErrorCode::EmptyState: return "EmptyState";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace oamtomo
