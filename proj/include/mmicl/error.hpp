#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmicl {

enum class ErrorCode {
  Io,
  MalformedLine,
  UnknownLabel,
  DuplicateId,
  MissingAspect,
  UnexpectedAspect,
  EmptySupport,
  InvalidArgument,
  InvalidScheme,
  Config,
  BadMagic,
  Truncated,
  ZeroNorm,
  NonFinite,
  MissingEmbedding,
  ChannelUnavailable,
  DimMismatch,
  InvalidStrategy,
  MissingTestLabel,
  MissingAsset,
  KeySetMismatch,
  EmptyCollection,
  ZeroShot,
  Transport,
  ContextOverflow,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mmicl
