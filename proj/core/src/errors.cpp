#include "apkaudit/errors.hpp"

namespace apkaudit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotAZip: return "NotAZip";
    case ErrorKind::NoSuchEntry: return "NoSuchEntry";
    case ErrorKind::EncryptedEntry: return "EncryptedEntry";
    case ErrorKind::Crc32Mismatch: return "Crc32Mismatch";
    case ErrorKind::CorruptDeflateStream: return "CorruptDeflateStream";
    case ErrorKind::TruncatedEntry: return "TruncatedEntry";
    case ErrorKind::NotAxml: return "NotAxml";
    case ErrorKind::TruncatedChunk: return "TruncatedChunk";
    case ErrorKind::StringPoolOutOfRange: return "StringPoolOutOfRange";
    case ErrorKind::XmlSyntaxError: return "XmlSyntaxError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::OffsetOutOfBounds: return "OffsetOutOfBounds";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::BadClassMagic: return "BadClassMagic";
    case ErrorKind::UnsupportedMajorVersion: return "UnsupportedMajorVersion";
    case ErrorKind::MalformedConstantPool: return "MalformedConstantPool";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

}  // namespace apkaudit
