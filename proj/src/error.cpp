#include "mmicl/error.hpp"

namespace mmicl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingAspect: return "MissingAspect";
    case ErrorCode::UnexpectedAspect: return "UnexpectedAspect";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidScheme: return "InvalidScheme";
    case ErrorCode::Config: return "Config";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::ChannelUnavailable: return "ChannelUnavailable";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InvalidStrategy: return "InvalidStrategy";
    case ErrorCode::MissingTestLabel: return "MissingTestLabel";
    case ErrorCode::MissingAsset: return "MissingAsset";
    case ErrorCode::KeySetMismatch: return "KeySetMismatch";
    case ErrorCode::EmptyCollection: return "EmptyCollection";
    case ErrorCode::ZeroShot: return "ZeroShot";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
  }
  return "Unknown";
}

}  // namespace mmicl
