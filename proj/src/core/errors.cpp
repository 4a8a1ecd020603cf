#include "errors.hpp"

namespace spikeyolo {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::MalformedCloud: return "MalformedCloud";
    case ErrorCode::OutOfRoi: return "OutOfRoi";
    case ErrorCode::TensorFormat: return "TensorFormatError";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::ConfigShape: return "ConfigShapeError";
    case ErrorCode::LayerShape: return "LayerShapeError";
    case ErrorCode::WeightFormat: return "WeightFormatError";
    case ErrorCode::Decode: return "DecodeError";
    case ErrorCode::NonDifferentiable: return "NonDifferentiable";
    case ErrorCode::EmptyLayer: return "EmptyLayer";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
  }
  return "UnknownError";
}

}  // namespace spikeyolo
