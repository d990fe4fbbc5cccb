#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apkaudit/errors.hpp"

namespace apkaudit {

// Bounds-checked cursor over a byte buffer. Every read past the end throws
// a ParseError with the fault kind chosen by the owning parser.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data,
                      ErrorKind fault = ErrorKind::OffsetOutOfBounds)
      : data_(data), fault_(fault) {}

  size_t size() const { return data_.size(); }
  size_t pos() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }

  void seek(size_t off) {
    if (off > data_.size()) fail("seek past end");
    pos_ = off;
  }
  void skip(size_t n) {
    require(n);
    pos_ += n;
  }

  uint8_t u8() {
    require(1);
    return data_[pos_++];
  }
  uint16_t u16le() {
    require(2);
    uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint32_t u32le() {
    require(4);
    uint32_t v = static_cast<uint32_t>(data_[pos_]) |
                 (static_cast<uint32_t>(data_[pos_ + 1]) << 8) |
                 (static_cast<uint32_t>(data_[pos_ + 2]) << 16) |
                 (static_cast<uint32_t>(data_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }
  uint64_t u64le() {
    uint64_t lo = u32le();
    uint64_t hi = u32le();
    return lo | (hi << 32);
  }
  uint16_t u16be() {
    require(2);
    uint16_t v = static_cast<uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  uint32_t u32be() {
    require(4);
    uint32_t v = (static_cast<uint32_t>(data_[pos_]) << 24) |
                 (static_cast<uint32_t>(data_[pos_ + 1]) << 16) |
                 (static_cast<uint32_t>(data_[pos_ + 2]) << 8) |
                 static_cast<uint32_t>(data_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

  std::span<const uint8_t> bytes(size_t n) {
    require(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  uint16_t u16le_at(size_t off) const {
    if (off + 2 > data_.size()) fail("u16 past end");
    return static_cast<uint16_t>(data_[off] | (data_[off + 1] << 8));
  }
  uint32_t u32le_at(size_t off) const {
    if (off + 4 > data_.size()) fail("u32 past end");
    return static_cast<uint32_t>(data_[off]) |
           (static_cast<uint32_t>(data_[off + 1]) << 8) |
           (static_cast<uint32_t>(data_[off + 2]) << 16) |
           (static_cast<uint32_t>(data_[off + 3]) << 24);
  }

  // Unsigned LEB128, capped at five bytes as in the dex format.
  uint32_t uleb() {
    uint32_t result = 0;
    int shift = 0;
    for (int i = 0; i < 5; ++i) {
      uint8_t b = u8();
      result |= static_cast<uint32_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0) return result;
      shift += 7;
    }
    fail("uleb128 too long");
    return 0;
  }
  int32_t sleb() {
    int32_t result = 0;
    int shift = 0;
    uint8_t b = 0;
    for (int i = 0; i < 5; ++i) {
      b = u8();
      result |= static_cast<int32_t>(b & 0x7F) << shift;
      shift += 7;
      if ((b & 0x80) == 0) break;
    }
    if (shift < 32 && (b & 0x40)) result |= -(1 << shift);
    return result;
  }

  void require(size_t n) const {
    if (pos_ + n > data_.size()) fail("read past end of buffer");
  }

 private:
  [[noreturn]] void fail(const char* what) const {
    throw ParseError(fault_, what);
  }

  std::span<const uint8_t> data_;
  ErrorKind fault_;
  size_t pos_ = 0;
};

}  // namespace apkaudit
