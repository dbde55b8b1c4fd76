#pragma once

#include <stdexcept>
#include <string>

namespace texsense {

/// Failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  Config,
  Argument,
  Data,
  Shape,
  Numeric,
  CorruptFile,
  Fingerprint,
  Version,
  Network,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define TEXSENSE_DEFINE_ERROR(Name, Kind)                          \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(Kind, what) {}  \
  };

TEXSENSE_DEFINE_ERROR(ConfigError, ErrorKind::Config)
TEXSENSE_DEFINE_ERROR(ArgumentError, ErrorKind::Argument)
TEXSENSE_DEFINE_ERROR(DataError, ErrorKind::Data)
TEXSENSE_DEFINE_ERROR(ShapeError, ErrorKind::Shape)
TEXSENSE_DEFINE_ERROR(NumericError, ErrorKind::Numeric)
TEXSENSE_DEFINE_ERROR(CorruptFileError, ErrorKind::CorruptFile)
TEXSENSE_DEFINE_ERROR(FingerprintError, ErrorKind::Fingerprint)
TEXSENSE_DEFINE_ERROR(VersionError, ErrorKind::Version)
TEXSENSE_DEFINE_ERROR(NetworkError, ErrorKind::Network)

#undef TEXSENSE_DEFINE_ERROR

}  // namespace texsense
