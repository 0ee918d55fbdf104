#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace s2ica {

enum class ErrorKind {
  dimension,
  empty_input,
  index,
  state,
  configuration,
  specification,
  format,
  training,
  label,
  generation,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::index: return "index";
    case ErrorKind::state: return "state";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::specification: return "specification";
    case ErrorKind::format: return "format";
    case ErrorKind::training: return "training";
    case ErrorKind::label: return "label";
    case ErrorKind::generation: return "generation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Base of every error thrown by the library. The kind is the category the
/// CLI reports; the message is meant for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error(ErrorKind::dimension, m) {}
};
struct EmptyInputError : Error {
  explicit EmptyInputError(const std::string& m) : Error(ErrorKind::empty_input, m) {}
};
struct IndexError : Error {
  explicit IndexError(const std::string& m) : Error(ErrorKind::index, m) {}
};
struct StateError : Error {
  explicit StateError(const std::string& m) : Error(ErrorKind::state, m) {}
};
struct ConfigurationError : Error {
  explicit ConfigurationError(const std::string& m) : Error(ErrorKind::configuration, m) {}
};
struct SpecificationError : Error {
  explicit SpecificationError(const std::string& m) : Error(ErrorKind::specification, m) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& m) : Error(ErrorKind::training, m) {}
};
struct LabelError : Error {
  explicit LabelError(const std::string& m) : Error(ErrorKind::label, m) {}
};
struct GenerationError : Error {
  explicit GenerationError(const std::string& m) : Error(ErrorKind::generation, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

/// Malformed file content. Carries the byte offset at which parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : Error(ErrorKind::format, message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace s2ica
