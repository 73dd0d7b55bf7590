#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace atk {

/// Broad category used to map failures onto process exit codes.
enum class ErrorCategory {
  Config,     // bad user input, configuration or parameters
  Io,         // file system failures
  Integrity,  // malformed or inconsistent data documents
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define ATK_DEFINE_ERROR(Name, Category)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(Category, what) {}     \
  };

ATK_DEFINE_ERROR(InvalidInput, ErrorCategory::Config)
ATK_DEFINE_ERROR(InvalidConfig, ErrorCategory::Config)
ATK_DEFINE_ERROR(InvalidPulse, ErrorCategory::Config)
ATK_DEFINE_ERROR(InvalidRegion, ErrorCategory::Config)
ATK_DEFINE_ERROR(InvalidStart, ErrorCategory::Config)
ATK_DEFINE_ERROR(InvalidTemplate, ErrorCategory::Config)
ATK_DEFINE_ERROR(ConfigError, ErrorCategory::Config)
ATK_DEFINE_ERROR(CalibrationError, ErrorCategory::Integrity)
ATK_DEFINE_ERROR(StreamError, ErrorCategory::Integrity)
ATK_DEFINE_ERROR(VersionError, ErrorCategory::Integrity)
ATK_DEFINE_ERROR(HashMismatch, ErrorCategory::Integrity)
ATK_DEFINE_ERROR(IoError, ErrorCategory::Io)

#undef ATK_DEFINE_ERROR

/// Malformed document. Carries the 1-based line (text formats) or the byte
/// offset (binary formats) where parsing stopped.
class FormatError : public Error {
 public:
  enum class Unit { Line, Byte };

  FormatError(const std::string& source, Unit unit, std::size_t position,
              const std::string& message)
      : Error(ErrorCategory::Integrity,
              source + (unit == Unit::Line ? ":" : "@byte ") +
                  std::to_string(position) + ": " + message),
        unit_(unit),
        position_(position) {}

  Unit unit() const noexcept { return unit_; }
  std::size_t position() const noexcept { return position_; }

 private:
  Unit unit_;
  std::size_t position_;
};

}  // namespace atk
