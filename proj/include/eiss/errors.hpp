#pragma once

#include <stdexcept>
#include <string>

namespace eiss {

struct EissError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when the alpha-shrunk child size falls below the configured floor
// (or below 1 pixel in grid generation). The engine catches it to stop a run.
struct DegenerateRegionError : EissError {
  DegenerateRegionError() : EissError("region degenerate") {}
};

struct EmptyCropError : EissError {
  EmptyCropError() : EissError("empty crop") {}
};

struct ParseError : EissError {
  ParseError(const std::string& what, size_t byte_offset)
      : EissError("parse error at byte " + std::to_string(byte_offset) + ": " + what),
        offset(byte_offset) {}
  size_t offset;
};

struct IncompleteAnnotationError : EissError {
  explicit IncompleteAnnotationError(const std::string& field)
      : EissError("incomplete annotation: missing " + field) {}
};

}  // namespace eiss
