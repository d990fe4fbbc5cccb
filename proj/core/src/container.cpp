#include "apkaudit/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <map>

#include "apkaudit/bytes.hpp"

namespace apkaudit {

namespace {

constexpr uint32_t kEocdSig = 0x06054B50;
constexpr uint32_t kCentralSig = 0x02014B50;
constexpr uint32_t kLocalSig = 0x04034B50;
constexpr uint64_t kMaxEntrySize = 512ull * 1024 * 1024;

size_t find_eocd(const std::vector<uint8_t>& data) {
  if (data.size() < 22) throw ParseError(ErrorKind::NotAZip, "too small");
  // The comment field caps the backwards scan at 64KiB + 22.
  size_t scan_limit = std::min<size_t>(data.size(), 22 + 0xFFFF);
  for (size_t back = 22; back <= scan_limit; ++back) {
    size_t off = data.size() - back;
    if (data[off] == 0x50 && data[off + 1] == 0x4B && data[off + 2] == 0x05 &&
        data[off + 3] == 0x06) {
      return off;
    }
  }
  throw ParseError(ErrorKind::NotAZip, "end-of-central-directory not found");
}

std::vector<uint8_t> inflate_raw(std::span<const uint8_t> in,
                                 uint64_t expected_size,
                                 const std::string& name) {
  std::vector<uint8_t> out(static_cast<size_t>(expected_size));
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) {
    throw ParseError(ErrorKind::CorruptDeflateStream,
                     "inflater init failed for " + name);
  }
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  uint64_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected_size) {
    throw ParseError(ErrorKind::CorruptDeflateStream,
                     "deflate stream damaged in " + name);
  }
  return out;
}

}  // namespace

ZipArchive ZipArchive::from_bytes(std::vector<uint8_t> data) {
  ZipArchive zip;
  zip.data_ = std::move(data);
  size_t eocd = find_eocd(zip.data_);

  ByteReader r(zip.data_, ErrorKind::NotAZip);
  r.seek(eocd + 4);
  r.skip(2 + 2);  // disk numbers
  uint16_t entries_this_disk = r.u16le();
  uint16_t entries_total = r.u16le();
  r.skip(4);  // central directory size
  uint32_t central_off = r.u32le();
  if (entries_this_disk != entries_total) {
    throw ParseError(ErrorKind::NotAZip, "multi-disk archives unsupported");
  }
  if (central_off > zip.data_.size()) {
    throw ParseError(ErrorKind::NotAZip, "central directory offset past end");
  }

  r.seek(central_off);
  for (uint32_t i = 0; i < entries_total; ++i) {
    if (r.u32le() != kCentralSig) {
      throw ParseError(ErrorKind::NotAZip, "bad central directory record");
    }
    r.skip(2 + 2);  // version made by, version needed
    uint16_t flags = r.u16le();
    ZipEntry e;
    e.method = r.u16le();
    r.skip(2 + 2);  // time, date
    e.crc32 = r.u32le();
    e.compressed_size = r.u32le();
    e.uncompressed_size = r.u32le();
    uint16_t name_len = r.u16le();
    uint16_t extra_len = r.u16le();
    uint16_t comment_len = r.u16le();
    r.skip(2 + 2 + 4);  // disk start, internal attrs, external attrs
    e.local_header_offset = r.u32le();
    auto name_bytes = r.bytes(name_len);
    e.name.assign(name_bytes.begin(), name_bytes.end());
    r.skip(static_cast<size_t>(extra_len) + comment_len);
    e.encrypted = (flags & 0x1) != 0;
    if (e.uncompressed_size > kMaxEntrySize) {
      throw ParseError(ErrorKind::NotAZip,
                       "entry " + e.name + " exceeds the size limit");
    }
    zip.by_name_[e.name] = zip.entries_.size();
    zip.entries_.push_back(std::move(e));
  }
  return zip;
}

bool ZipArchive::has(const std::string& name) const {
  return by_name_.count(name) != 0;
}

const ZipEntry* ZipArchive::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &entries_[it->second];
}

std::vector<uint8_t> ZipArchive::read(const std::string& name) const {
  const ZipEntry* e = find(name);
  if (!e) throw ParseError(ErrorKind::NoSuchEntry, name);
  return read(*e);
}

std::vector<uint8_t> ZipArchive::read(const ZipEntry& entry) const {
  if (entry.encrypted) {
    throw ParseError(ErrorKind::EncryptedEntry, entry.name);
  }
  ByteReader r(data_, ErrorKind::TruncatedEntry);
  r.seek(entry.local_header_offset);
  if (r.u32le() != kLocalSig) {
    throw ParseError(ErrorKind::TruncatedEntry,
                     "missing local header for " + entry.name);
  }
  r.skip(2 + 2 + 2 + 2 + 2 + 4 + 4 + 4);  // through the size fields
  uint16_t name_len = r.u16le();
  uint16_t extra_len = r.u16le();
  r.skip(static_cast<size_t>(name_len) + extra_len);

  auto compressed = r.bytes(static_cast<size_t>(entry.compressed_size));
  std::vector<uint8_t> out;
  if (entry.method == 0) {
    if (entry.compressed_size != entry.uncompressed_size) {
      throw ParseError(ErrorKind::TruncatedEntry,
                       "stored entry size mismatch in " + entry.name);
    }
    out.assign(compressed.begin(), compressed.end());
  } else if (entry.method == 8) {
    out = inflate_raw(compressed, entry.uncompressed_size, entry.name);
  } else {
    throw ParseError(ErrorKind::CorruptDeflateStream,
                     "unsupported compression method in " + entry.name);
  }

  uint32_t crc =
      static_cast<uint32_t>(::crc32(0L, out.data(), static_cast<uInt>(out.size())));
  if (crc != entry.crc32) {
    throw ParseError(ErrorKind::Crc32Mismatch, entry.name);
  }
  return out;
}

std::vector<std::string> ZipArchive::duplicate_names() const {
  std::map<std::string, int> counts;
  for (const auto& e : entries_) counts[e.name]++;
  std::vector<std::string> dups;
  for (const auto& [name, n] : counts) {
    if (n > 1) dups.push_back(name);
  }
  return dups;
}

}  // namespace apkaudit
