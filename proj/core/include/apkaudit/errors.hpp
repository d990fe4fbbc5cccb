#pragma once

#include <stdexcept>
#include <string>

namespace apkaudit {

// Every recoverable parse failure carries one of these kinds so callers can
// branch on the cause without string matching.
enum class ErrorKind {
  // container
  NotAZip,
  NoSuchEntry,
  EncryptedEntry,
  Crc32Mismatch,
  CorruptDeflateStream,
  TruncatedEntry,
  // binary xml
  NotAxml,
  TruncatedChunk,
  StringPoolOutOfRange,
  XmlSyntaxError,
  // dex
  BadMagic,
  UnsupportedVersion,
  OffsetOutOfBounds,
  ChecksumMismatch,
  // jvm class files
  BadClassMagic,
  UnsupportedMajorVersion,
  MalformedConstantPool,
  IndexOutOfRange,
  // report import
  SchemaMismatch,
  // scanner configuration files
  ConfigError,
  // filesystem
  IoFailure,
};

const char* to_string(ErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace apkaudit
