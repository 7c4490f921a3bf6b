#include "navar/error.hpp"

namespace navar {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kContract: return "contract error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kVersion: return "version error";
    case ErrorCode::kDivergence: return "divergence error";
    case ErrorCode::kDatasetTooShort: return "dataset too short";
    case ErrorCode::kConstantVariable: return "constant variable";
    case ErrorCode::kUndefinedAuroc: return "undefined AUROC";
    case ErrorCode::kUnsupported: return "unsupported analysis";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kGeneration: return "generation error";
  }
  return "error";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace navar
