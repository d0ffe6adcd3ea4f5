#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beachseg {

enum class ErrorKind {
  InvalidArgument,
  DegenerateRange,
  NotJpeg,
  MalformedExif,
  InvalidPolygon,
  InvalidTileSize,
  RectMismatch,
  MalformedAnnotation,
  BadFractions,
  DimensionMismatch,
  LabelMismatch,
  LabelOutOfRange,
  LengthMismatch,
  EmptyAfterIgnore,
  NegativeComponent,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::NotJpeg: return "NotJpeg";
    case ErrorKind::MalformedExif: return "MalformedExif";
    case ErrorKind::InvalidPolygon: return "InvalidPolygon";
    case ErrorKind::InvalidTileSize: return "InvalidTileSize";
    case ErrorKind::RectMismatch: return "RectMismatch";
    case ErrorKind::MalformedAnnotation: return "MalformedAnnotation";
    case ErrorKind::BadFractions: return "BadFractions";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::LabelMismatch: return "LabelMismatch";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyAfterIgnore: return "EmptyAfterIgnore";
    case ErrorKind::NegativeComponent: return "NegativeComponent";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace beachseg
