#pragma once

#include <stdexcept>
#include <string>

namespace cxr {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  CorruptData,
  IoError,
  NonBinaryMask,
  EmptyMask,
  DimensionMismatch,
  InvalidParams,
  DegenerateBlob,
  AngleOutOfRange,
  LowConfidence,
  BoxOutsideImage,
  NotTwoLungs,
  OverlappingLungs,
  TooSmall,
  BothEmpty,
  EmptyList,
  InvalidSpec,
  MissingInput,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::FileNotFound:      return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptData:       return "CorruptData";
    case ErrorCode::IoError:           return "IoError";
    case ErrorCode::NonBinaryMask:     return "NonBinaryMask";
    case ErrorCode::EmptyMask:         return "EmptyMask";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidParams:     return "InvalidParams";
    case ErrorCode::DegenerateBlob:    return "DegenerateBlob";
    case ErrorCode::AngleOutOfRange:   return "AngleOutOfRange";
    case ErrorCode::LowConfidence:     return "LowConfidence";
    case ErrorCode::BoxOutsideImage:   return "BoxOutsideImage";
    case ErrorCode::NotTwoLungs:       return "NotTwoLungs";
    case ErrorCode::OverlappingLungs:  return "OverlappingLungs";
    case ErrorCode::TooSmall:          return "TooSmall";
    case ErrorCode::BothEmpty:         return "BothEmpty";
    case ErrorCode::EmptyList:         return "EmptyList";
    case ErrorCode::InvalidSpec:       return "InvalidSpec";
    case ErrorCode::MissingInput:      return "MissingInput";
  }
  return "UnknownError";
}

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace cxr
