#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "apkaudit/errors.hpp"

namespace apkaudit {

struct ZipEntry {
  std::string name;
  uint32_t crc32 = 0;
  uint64_t compressed_size = 0;
  uint64_t uncompressed_size = 0;
  uint16_t method = 0;  // 0 = stored, 8 = deflated
  bool encrypted = false;
  uint64_t local_header_offset = 0;
};

// Central-directory based reader. Opening only parses metadata; entry
// contents are decompressed and CRC-checked on demand. When two entries
// share a name, the one later in the central directory wins for name-based
// access, mirroring what installers do.
class ZipArchive {
 public:
  static ZipArchive from_bytes(std::vector<uint8_t> data);  // throws NotAZip

  const std::vector<ZipEntry>& entries() const { return entries_; }
  bool has(const std::string& name) const;
  const ZipEntry* find(const std::string& name) const;

  // Throws NoSuchEntry / EncryptedEntry / Crc32Mismatch /
  // CorruptDeflateStream / TruncatedEntry.
  std::vector<uint8_t> read(const std::string& name) const;
  std::vector<uint8_t> read(const ZipEntry& entry) const;

  // Names that occur more than once in the central directory.
  std::vector<std::string> duplicate_names() const;

 private:
  std::vector<uint8_t> data_;
  std::vector<ZipEntry> entries_;
  std::unordered_map<std::string, size_t> by_name_;  // last occurrence wins
};

}  // namespace apkaudit
