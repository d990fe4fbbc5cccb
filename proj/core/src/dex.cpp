#include <openssl/sha.h>
#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <set>
#include <unordered_set>

#include "apkaudit/bytecode.hpp"
#include "apkaudit/bytes.hpp"
#include "apkaudit/dumps.hpp"

namespace apkaudit {

namespace {

enum class Fmt {
  f10x, f12x, f11n, f11x, f10t, f20t, f22x, f21t, f21s, f21h, f21c,
  f23x, f22b, f22t, f22s, f22c, f32x, f30t, f31i, f31t, f31c, f35c,
  f3rc, f45cc, f4rcc, f51l, funused,
};

struct OpSpec {
  const char* name;
  Fmt fmt;
};

constexpr OpSpec kOps[256] = {
#include "dex_opcodes.inc"
};

int fmt_units(Fmt f) {
  switch (f) {
    case Fmt::f10x: case Fmt::f12x: case Fmt::f11n: case Fmt::f11x:
    case Fmt::f10t:
      return 1;
    case Fmt::f20t: case Fmt::f22x: case Fmt::f21t: case Fmt::f21s:
    case Fmt::f21h: case Fmt::f21c: case Fmt::f23x: case Fmt::f22b:
    case Fmt::f22t: case Fmt::f22s: case Fmt::f22c:
      return 2;
    case Fmt::f32x: case Fmt::f30t: case Fmt::f31i: case Fmt::f31t:
    case Fmt::f31c: case Fmt::f35c: case Fmt::f3rc:
      return 3;
    case Fmt::f45cc: case Fmt::f4rcc:
      return 4;
    case Fmt::f51l:
      return 5;
    case Fmt::funused:
      return 0;
  }
  return 0;
}

[[noreturn]] void bounds_fail(const std::string& what) {
  throw ParseError(ErrorKind::OffsetOutOfBounds, what);
}

// Decodes the modified UTF-8 used by the format.  Invalid lead or trail
// bytes each become one U+FFFD and decoding continues at the next byte;
// surrogate pairs encoded as two 3-byte sequences are recombined.
std::string decode_mutf8(std::span<const uint8_t> raw, bool* bad) {
  std::vector<uint32_t> units;
  units.reserve(raw.size());
  size_t i = 0;
  size_t n = raw.size();
  while (i < n) {
    uint8_t b = raw[i];
    if (b < 0x80) {
      units.push_back(b);
      i += 1;
    } else if ((b & 0xE0) == 0xC0) {
      if (i + 1 < n && (raw[i + 1] & 0xC0) == 0x80) {
        units.push_back(((b & 0x1F) << 6) | (raw[i + 1] & 0x3F));
        i += 2;
      } else {
        units.push_back(0xFFFD);
        *bad = true;
        i += 1;
      }
    } else if ((b & 0xF0) == 0xE0) {
      if (i + 2 < n && (raw[i + 1] & 0xC0) == 0x80 &&
          (raw[i + 2] & 0xC0) == 0x80) {
        units.push_back(((b & 0x0F) << 12) | ((raw[i + 1] & 0x3F) << 6) |
                        (raw[i + 2] & 0x3F));
        i += 3;
      } else {
        units.push_back(0xFFFD);
        *bad = true;
        i += 1;
      }
    } else {
      units.push_back(0xFFFD);
      *bad = true;
      i += 1;
    }
  }
  std::string out;
  out.reserve(units.size());
  auto emit = [&out](uint32_t cp) {
    if (cp <= 0x7F) {
      out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7FF) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp <= 0xFFFF) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  };
  for (size_t j = 0; j < units.size(); ++j) {
    uint32_t c = units[j];
    if (c >= 0xD800 && c < 0xDC00 && j + 1 < units.size() &&
        units[j + 1] >= 0xDC00 && units[j + 1] < 0xE000) {
      emit(0x10000 + ((c - 0xD800) << 10) + (units[j + 1] - 0xDC00));
      ++j;
    } else {
      emit(c);
    }
  }
  return out;
}

struct Insn {
  int addr = 0;
  uint8_t op = 0;
  const char* name = "";
  Fmt fmt = Fmt::funused;
  int units = 0;
  bool is_payload = false;
  int payload_ident = 0;
  int reg_a = -1;
  int reg_b = -1;
  int reg_c = -1;
  int64_t value = 0;
  uint32_t idx = 0;
  int target = -1;
  std::vector<int> regs;  // invoke argument registers
};

struct RawTry {
  uint32_t start = 0;
  uint16_t count = 0;
  std::vector<std::pair<uint32_t, uint32_t>> handlers;  // (type idx, addr)
  std::optional<uint32_t> catch_all;
};

struct RawCode {
  uint16_t registers = 0;
  std::vector<uint16_t> units;
  std::vector<Insn> insns;
  std::vector<RawTry> tries;
};

struct RawMethodDef {
  uint32_t method_idx = 0;
  uint32_t access = 0;
  bool direct = false;
  std::optional<RawCode> code;
};

struct RawClassDef {
  uint32_t type_idx = 0;
  std::optional<uint32_t> super_idx;
  std::vector<uint32_t> interface_idxs;
  std::vector<RawMethodDef> methods;
};

struct DexParsed {
  std::vector<std::string> strings;
  std::vector<uint32_t> bad_string_idx;
  std::vector<std::string> types;
  std::vector<MethodRef> method_ids;  // raw owner/descriptor forms
  std::vector<RawClassDef> classes;
};

class DexReader {
 public:
  explicit DexReader(std::span<const uint8_t> data) : data_(data) {}

  DexParsed parse(bool verify) {
    if (data_.size() < 0x70) {
      throw ParseError(ErrorKind::BadMagic, "file shorter than the header");
    }
    static const uint8_t magic[4] = {'d', 'e', 'x', '\n'};
    if (std::memcmp(data_.data(), magic, 4) != 0 || data_[7] != 0) {
      throw ParseError(ErrorKind::BadMagic, "bad magic bytes");
    }
    std::string version(reinterpret_cast<const char*>(data_.data() + 4), 3);
    if (version < "035" || version > "041") {
      throw ParseError(ErrorKind::UnsupportedVersion, "version " + version);
    }
    uint32_t endian = u32_at(40);
    if (endian != 0x12345678) {
      throw ParseError(ErrorKind::BadMagic, "unexpected endian tag");
    }
    if (verify) {
      uint32_t checksum = u32_at(8);
      uint32_t adler = static_cast<uint32_t>(
          adler32(adler32(0L, nullptr, 0), data_.data() + 12,
                  static_cast<uInt>(data_.size() - 12)));
      if (adler != checksum) {
        throw ParseError(ErrorKind::ChecksumMismatch, "checksum mismatch");
      }
      unsigned char digest[SHA_DIGEST_LENGTH];
      SHA1(data_.data() + 32, data_.size() - 32, digest);
      if (std::memcmp(digest, data_.data() + 12, SHA_DIGEST_LENGTH) != 0) {
        throw ParseError(ErrorKind::ChecksumMismatch, "signature mismatch");
      }
    }

    uint32_t string_ids_size = u32_at(56);
    uint32_t string_ids_off = u32_at(60);
    uint32_t type_ids_size = u32_at(64);
    uint32_t type_ids_off = u32_at(68);
    uint32_t proto_ids_size = u32_at(72);
    uint32_t proto_ids_off = u32_at(76);
    uint32_t method_ids_size = u32_at(88);
    uint32_t method_ids_off = u32_at(92);
    uint32_t class_defs_size = u32_at(96);
    uint32_t class_defs_off = u32_at(100);

    DexParsed out;
    for (uint32_t i = 0; i < string_ids_size; ++i) {
      uint32_t off = u32_at(static_cast<size_t>(string_ids_off) + 4 * i);
      out.strings.push_back(read_string(off, i, out));
    }
    for (uint32_t i = 0; i < type_ids_size; ++i) {
      uint32_t sidx = u32_at(static_cast<size_t>(type_ids_off) + 4 * i);
      out.types.push_back(string_at(out, sidx));
    }

    struct Proto {
      std::string descriptor;
    };
    std::vector<Proto> protos;
    for (uint32_t i = 0; i < proto_ids_size; ++i) {
      size_t base = static_cast<size_t>(proto_ids_off) + 12 * i;
      uint32_t ret = u32_at(base + 4);
      uint32_t params_off = u32_at(base + 8);
      std::string desc = "(";
      if (params_off) {
        uint32_t n = u32_at(params_off);
        for (uint32_t j = 0; j < n; ++j) {
          uint16_t t = u16_at(static_cast<size_t>(params_off) + 4 + 2 * j);
          desc += type_at(out, t);
        }
      }
      desc += ")" + type_at(out, ret);
      protos.push_back({std::move(desc)});
    }

    for (uint32_t i = 0; i < method_ids_size; ++i) {
      size_t base = static_cast<size_t>(method_ids_off) + 8 * i;
      uint16_t cls = u16_at(base);
      uint16_t proto = u16_at(base + 2);
      uint32_t name = u32_at(base + 4);
      if (proto >= protos.size()) bounds_fail("proto index");
      // Resolve both lookups before building the element: if the second one
      // threw mid-aggregate, the first member's copy could be lost (gcc 11
      // fails to destroy partially constructed aggregate temporaries).
      const std::string& owner = type_at(out, cls);
      const std::string& method_name = string_at(out, name);
      out.method_ids.push_back({owner, method_name, protos[proto].descriptor});
    }

    for (uint32_t i = 0; i < class_defs_size; ++i) {
      size_t base = static_cast<size_t>(class_defs_off) + 32 * i;
      RawClassDef def;
      def.type_idx = u32_at(base);
      uint32_t super = u32_at(base + 8);
      if (super != 0xFFFFFFFF) def.super_idx = super;
      uint32_t ifc_off = u32_at(base + 12);
      uint32_t cdata_off = u32_at(base + 24);
      if (def.type_idx >= out.types.size()) bounds_fail("class type index");
      if (def.super_idx && *def.super_idx >= out.types.size()) {
        bounds_fail("superclass type index");
      }
      if (ifc_off) {
        uint32_t n = u32_at(ifc_off);
        for (uint32_t j = 0; j < n; ++j) {
          uint16_t t = u16_at(static_cast<size_t>(ifc_off) + 4 + 2 * j);
          if (t >= out.types.size()) bounds_fail("interface type index");
          def.interface_idxs.push_back(t);
        }
      }
      if (cdata_off) parse_class_data(cdata_off, out, def);
      out.classes.push_back(std::move(def));
    }
    return out;
  }

 private:
  std::span<const uint8_t> data_;

  uint32_t u32_at(size_t off) const {
    if (off + 4 > data_.size()) bounds_fail("u32 read");
    return static_cast<uint32_t>(data_[off]) |
           (static_cast<uint32_t>(data_[off + 1]) << 8) |
           (static_cast<uint32_t>(data_[off + 2]) << 16) |
           (static_cast<uint32_t>(data_[off + 3]) << 24);
  }

  uint16_t u16_at(size_t off) const {
    if (off + 2 > data_.size()) bounds_fail("u16 read");
    return static_cast<uint16_t>(data_[off] | (data_[off + 1] << 8));
  }

  static const std::string& string_at(const DexParsed& p, uint32_t idx) {
    if (idx >= p.strings.size()) bounds_fail("string index");
    return p.strings[idx];
  }

  static const std::string& type_at(const DexParsed& p, uint32_t idx) {
    if (idx >= p.types.size()) bounds_fail("type index");
    return p.types[idx];
  }

  std::string read_string(uint32_t off, uint32_t idx, DexParsed& out) {
    ByteReader r(data_, ErrorKind::OffsetOutOfBounds);
    r.seek(off);
    r.uleb();  // decoded length, unused
    size_t start = r.pos();
    size_t end = start;
    while (end < data_.size() && data_[end] != 0) ++end;
    if (end >= data_.size()) bounds_fail("unterminated string data");
    bool bad = false;
    std::string s = decode_mutf8(data_.subspan(start, end - start), &bad);
    if (bad) out.bad_string_idx.push_back(idx);
    return s;
  }

  void parse_class_data(uint32_t off, const DexParsed& parsed,
                        RawClassDef& def) {
    ByteReader r(data_, ErrorKind::OffsetOutOfBounds);
    r.seek(off);
    uint32_t nstatic = r.uleb();
    uint32_t ninst = r.uleb();
    uint32_t ndirect = r.uleb();
    uint32_t nvirt = r.uleb();
    for (uint64_t i = 0; i < static_cast<uint64_t>(nstatic) + ninst; ++i) {
      r.uleb();  // field index diff
      r.uleb();  // access flags
    }
    for (int pass = 0; pass < 2; ++pass) {
      uint32_t count = pass == 0 ? ndirect : nvirt;
      uint32_t idx = 0;
      for (uint32_t i = 0; i < count; ++i) {
        idx += r.uleb();
        uint32_t access = r.uleb();
        uint32_t code_off = r.uleb();
        if (idx >= parsed.method_ids.size()) bounds_fail("method index");
        RawMethodDef m;
        m.method_idx = idx;
        m.access = access;
        m.direct = pass == 0;
        if (code_off) m.code = parse_code(code_off, parsed);
        def.methods.push_back(std::move(m));
      }
    }
  }

  RawCode parse_code(uint32_t off, const DexParsed& parsed) {
    RawCode code;
    code.registers = u16_at(off);
    uint16_t tries = u16_at(static_cast<size_t>(off) + 6);
    uint32_t insns_size = u32_at(static_cast<size_t>(off) + 12);
    size_t insns_off = static_cast<size_t>(off) + 16;
    if (insns_off + 2ull * insns_size > data_.size()) {
      bounds_fail("instruction stream");
    }
    code.units.reserve(insns_size);
    for (uint32_t i = 0; i < insns_size; ++i) {
      code.units.push_back(u16_at(insns_off + 2ull * i));
    }
    code.insns = decode_insns(code.units, parsed);

    if (tries) {
      size_t t_off = insns_off + 2ull * insns_size;
      if (insns_size % 2) t_off += 2;
      size_t handler_base = t_off + 8ull * tries;
      for (uint16_t i = 0; i < tries; ++i) {
        RawTry t;
        t.start = u32_at(t_off + 8ull * i);
        t.count = u16_at(t_off + 8ull * i + 4);
        uint16_t h_off = u16_at(t_off + 8ull * i + 6);
        ByteReader hr(data_, ErrorKind::OffsetOutOfBounds);
        hr.seek(handler_base + h_off);
        int32_t size = hr.sleb();
        int32_t abs_size = size < 0 ? -size : size;
        for (int32_t j = 0; j < abs_size; ++j) {
          uint32_t tidx = hr.uleb();
          uint32_t haddr = hr.uleb();
          if (tidx >= parsed.types.size()) bounds_fail("handler type index");
          t.handlers.emplace_back(tidx, haddr);
        }
        if (size <= 0) t.catch_all = hr.uleb();
        code.tries.push_back(std::move(t));
      }
    }
    return code;
  }

  std::vector<Insn> decode_insns(const std::vector<uint16_t>& units,
                                 const DexParsed& parsed) {
    std::vector<Insn> out;
    size_t i = 0;
    size_t n = units.size();
    auto unit_at = [&](size_t k) -> uint16_t {
      if (k >= n) bounds_fail("instruction operand");
      return units[k];
    };
    while (i < n) {
      uint16_t u = units[i];
      uint8_t op = u & 0xFF;
      uint16_t hi = u >> 8;
      Insn insn;
      insn.addr = static_cast<int>(i);
      insn.op = op;
      if (op == 0x00 && (hi == 0x01 || hi == 0x02 || hi == 0x03)) {
        size_t length;
        if (hi == 0x01) {
          length = static_cast<size_t>(unit_at(i + 1)) * 2 + 4;
        } else if (hi == 0x02) {
          length = static_cast<size_t>(unit_at(i + 1)) * 4 + 2;
        } else {
          size_t width = unit_at(i + 1);
          size_t size = unit_at(i + 2) | (static_cast<size_t>(unit_at(i + 3)) << 16);
          length = (size * width + 1) / 2 + 4;
        }
        if (i + length > n) bounds_fail("payload overruns method");
        insn.name = "payload";
        insn.is_payload = true;
        insn.payload_ident = hi;
        insn.units = static_cast<int>(length);
        out.push_back(std::move(insn));
        i += length;
        continue;
      }
      const OpSpec& spec = kOps[op];
      if (spec.fmt == Fmt::funused) {
        bounds_fail("unknown opcode");
      }
      insn.name = spec.name;
      insn.fmt = spec.fmt;
      int ln = fmt_units(spec.fmt);
      insn.units = ln;
      if (i + static_cast<size_t>(ln) > n) bounds_fail("truncated instruction");
      auto sign16 = [](uint32_t v) -> int32_t {
        return v >= 0x8000 ? static_cast<int32_t>(v) - 0x10000
                           : static_cast<int32_t>(v);
      };
      switch (spec.fmt) {
        case Fmt::f21c:
          insn.reg_a = hi;
          insn.idx = unit_at(i + 1);
          break;
        case Fmt::f31c:
          insn.reg_a = hi;
          insn.idx = unit_at(i + 1) |
                     (static_cast<uint32_t>(unit_at(i + 2)) << 16);
          break;
        case Fmt::f11n:
          insn.reg_a = hi & 0xF;
          insn.value = hi >> 4 >= 8 ? static_cast<int>(hi >> 4) - 16
                                    : static_cast<int>(hi >> 4);
          break;
        case Fmt::f21s:
          insn.reg_a = hi;
          insn.value = sign16(unit_at(i + 1));
          if (op == 0x15) insn.value <<= 16;       // const/high16
          if (op == 0x19) insn.value <<= 48;       // const-wide/high16
          break;
        case Fmt::f31i: {
          insn.reg_a = hi;
          uint32_t v = unit_at(i + 1) |
                       (static_cast<uint32_t>(unit_at(i + 2)) << 16);
          insn.value = static_cast<int32_t>(v);
          break;
        }
        case Fmt::f51l: {
          insn.reg_a = hi;
          uint64_t v = 0;
          for (int k = 0; k < 4; ++k) {
            v |= static_cast<uint64_t>(unit_at(i + 1 + k)) << (16 * k);
          }
          insn.value = static_cast<int64_t>(v);
          break;
        }
        case Fmt::f11x:
          insn.reg_a = hi;
          break;
        case Fmt::f12x:
          insn.reg_a = hi & 0xF;
          insn.reg_b = hi >> 4;
          break;
        case Fmt::f22x:
          insn.reg_a = hi;
          insn.reg_b = unit_at(i + 1);
          break;
        case Fmt::f32x:
          insn.reg_a = unit_at(i + 1);
          insn.reg_b = unit_at(i + 2);
          break;
        case Fmt::f10t: {
          int v = hi >= 128 ? static_cast<int>(hi) - 256 : hi;
          insn.target = static_cast<int>(i) + v;
          break;
        }
        case Fmt::f20t:
          insn.target = static_cast<int>(i) + sign16(unit_at(i + 1));
          break;
        case Fmt::f30t: {
          uint32_t v = unit_at(i + 1) |
                       (static_cast<uint32_t>(unit_at(i + 2)) << 16);
          insn.target = static_cast<int>(i) + static_cast<int32_t>(v);
          break;
        }
        case Fmt::f21t:
          insn.reg_a = hi;
          insn.target = static_cast<int>(i) + sign16(unit_at(i + 1));
          break;
        case Fmt::f22t:
          insn.reg_a = hi & 0xF;
          insn.reg_b = hi >> 4;
          insn.target = static_cast<int>(i) + sign16(unit_at(i + 1));
          break;
        case Fmt::f31t: {
          insn.reg_a = hi;
          uint32_t v = unit_at(i + 1) |
                       (static_cast<uint32_t>(unit_at(i + 2)) << 16);
          insn.target = static_cast<int>(i) + static_cast<int32_t>(v);
          break;
        }
        case Fmt::f22c:
          insn.reg_a = hi & 0xF;
          insn.reg_b = hi >> 4;
          insn.idx = unit_at(i + 1);
          break;
        case Fmt::f22b:
          insn.reg_a = hi;
          insn.reg_b = unit_at(i + 1) & 0xFF;
          break;
        case Fmt::f22s:
          insn.reg_a = hi & 0xF;
          insn.reg_b = hi >> 4;
          break;
        case Fmt::f23x:
          insn.reg_a = hi;
          insn.reg_b = unit_at(i + 1) & 0xFF;
          insn.reg_c = unit_at(i + 1) >> 8;
          break;
        case Fmt::f35c: {
          int count = u >> 12;
          int g = (u >> 8) & 0xF;
          insn.idx = unit_at(i + 1);
          uint16_t dcba = unit_at(i + 2);
          int all[5] = {dcba & 0xF, (dcba >> 4) & 0xF, (dcba >> 8) & 0xF,
                        (dcba >> 12) & 0xF, g};
          for (int k = 0; k < count && k < 5; ++k) insn.regs.push_back(all[k]);
          break;
        }
        case Fmt::f3rc: {
          int count = hi;
          insn.idx = unit_at(i + 1);
          int first = unit_at(i + 2);
          for (int k = 0; k < count; ++k) insn.regs.push_back(first + k);
          break;
        }
        case Fmt::f45cc:
        case Fmt::f4rcc:
          insn.idx = unit_at(i + 1);
          break;
        case Fmt::f10x:
        case Fmt::f21h:
        case Fmt::funused:
          break;
      }
      bool is_invoke_ref =
          std::string_view(spec.name).substr(0, 6) == "invoke" &&
          (spec.fmt == Fmt::f35c || spec.fmt == Fmt::f3rc);
      if (is_invoke_ref && insn.idx >= parsed.method_ids.size()) {
        bounds_fail("invoke method index");
      }
      if ((op == 0x1A || op == 0x1B) && insn.idx >= parsed.strings.size()) {
        bounds_fail("const-string index");
      }
      out.push_back(std::move(insn));
      i += ln;
    }
    return out;
  }
};

// ------------------------------------------------------------- analysis

bool is_invoke(const Insn& in) {
  return !in.is_payload &&
         ((in.op >= 0x6E && in.op <= 0x72) || (in.op >= 0x74 && in.op <= 0x78));
}

bool is_invoke_static(const Insn& in) {
  return in.op == 0x71 || in.op == 0x77;
}

// Registers overwritten by an instruction.  Any instruction that stores
// into a register must appear here with that register, otherwise stale
// constants could be reported; extra entries only cost precision.
void defined_regs(const Insn& in, int out[2]) {
  out[0] = out[1] = -1;
  if (in.is_payload) return;
  uint8_t op = in.op;
  auto single = [&] { out[0] = in.reg_a; };
  auto wide = [&] {
    out[0] = in.reg_a;
    out[1] = in.reg_a + 1;
  };
  if (op >= 0x01 && op <= 0x09) {          // move family
    (op >= 0x04 && op <= 0x06) ? wide() : single();
  } else if (op >= 0x0A && op <= 0x0D) {   // move-result / move-exception
    op == 0x0B ? wide() : single();
  } else if (op >= 0x12 && op <= 0x1C) {   // const family + const-class
    (op >= 0x16 && op <= 0x19) || op == 0x18 ? wide() : single();
  } else if (op == 0x1F) {                 // check-cast: value unchanged
  } else if (op == 0x20 || op == 0x21) {   // instance-of, array-length
    single();
  } else if (op == 0x22 || op == 0x23) {   // new-instance, new-array
    single();
  } else if (op == 0x26) {                 // fill-array-data
    single();
  } else if (op >= 0x2D && op <= 0x31) {   // cmp family
    single();
  } else if (op >= 0x44 && op <= 0x4A) {   // aget family
    op == 0x45 ? wide() : single();
  } else if (op >= 0x4B && op <= 0x51) {   // aput: array contents change
    out[0] = in.reg_b;
  } else if (op >= 0x52 && op <= 0x58) {   // iget family
    op == 0x53 ? wide() : single();
  } else if (op >= 0x60 && op <= 0x66) {   // sget family
    op == 0x61 ? wide() : single();
  } else if (op >= 0x7B && op <= 0x8F) {   // unary / conversions
    bool w = op == 0x7D || op == 0x7E || op == 0x81 || op == 0x83 ||
             op == 0x84 || op == 0x86 || op == 0x88 || op == 0x8A;
    w ? wide() : single();
  } else if (op >= 0x90 && op <= 0xAF) {   // binop
    bool w = (op >= 0x9B && op <= 0xA5) || (op >= 0xAB && op <= 0xAF);
    w ? wide() : single();
  } else if (op >= 0xB0 && op <= 0xCF) {   // binop/2addr
    bool w = (op >= 0xBB && op <= 0xC5) || (op >= 0xCB && op <= 0xCF);
    w ? wide() : single();
  } else if (op >= 0xD0 && op <= 0xEA) {   // binop lit16 / lit8
    single();
  } else if (op == 0xFE || op == 0xFF) {   // const-method-handle/type
    single();
  }
}

bool defines(const Insn& in, int reg) {
  int d[2];
  defined_regs(in, d);
  return d[0] == reg || d[1] == reg;
}

struct MethodAnalyzer {
  const DexParsed& parsed;
  const RawCode& code;
  std::unordered_set<int> barriers;

  MethodAnalyzer(const DexParsed& p, const RawCode& c) : parsed(p), code(c) {
    for (const auto& in : code.insns) {
      if (in.is_payload) continue;
      if (in.target >= 0 && in.op != 0x26 && in.op != 0x2B && in.op != 0x2C) {
        barriers.insert(in.target);  // goto / if targets
      }
      if (in.op == 0x2B || in.op == 0x2C) {  // switch: case targets
        for (int t : switch_targets(in)) barriers.insert(t);
      }
    }
    for (const auto& t : code.tries) {
      for (const auto& h : t.handlers) {
        barriers.insert(static_cast<int>(h.second));
      }
      if (t.catch_all) barriers.insert(static_cast<int>(*t.catch_all));
    }
  }

  const Insn* payload_at(int addr, int ident) const {
    for (const auto& in : code.insns) {
      if (in.is_payload && in.addr == addr && in.payload_ident == ident) {
        return &in;
      }
    }
    return nullptr;
  }

  std::vector<int> switch_targets(const Insn& sw) const {
    std::vector<int> out;
    const Insn* p = payload_at(sw.target, sw.op == 0x2B ? 0x01 : 0x02);
    if (!p) return out;
    size_t base = p->addr;
    const auto& u = code.units;
    auto rel32 = [&](size_t k) -> int32_t {
      if (k + 1 >= u.size()) return 0;
      return static_cast<int32_t>(u[k] | (static_cast<uint32_t>(u[k + 1]) << 16));
    };
    if (p->payload_ident == 0x01) {  // packed
      if (base + 1 >= u.size()) return out;
      int size = u[base + 1];
      for (int k = 0; k < size; ++k) {
        out.push_back(sw.addr + rel32(base + 4 + 2ull * k));
      }
    } else {  // sparse
      if (base + 1 >= u.size()) return out;
      int size = u[base + 1];
      for (int k = 0; k < size; ++k) {
        out.push_back(sw.addr + rel32(base + 2 + 2ull * size + 2ull * k));
      }
    }
    return out;
  }

  std::vector<int64_t> fill_array_values(const Insn& fill) const {
    std::vector<int64_t> out;
    const Insn* p = payload_at(fill.target, 0x03);
    if (!p) return out;
    const auto& u = code.units;
    size_t base = p->addr;
    if (base + 3 >= u.size()) return out;
    size_t width = u[base + 1];
    size_t count = u[base + 2] | (static_cast<size_t>(u[base + 3]) << 16);
    if (width == 0 || width > 8) return out;
    const uint8_t* bytes = reinterpret_cast<const uint8_t*>(u.data());
    size_t data_off = (base + 4) * 2;
    size_t avail = u.size() * 2;
    for (size_t k = 0; k < count; ++k) {
      size_t o = data_off + k * width;
      if (o + width > avail) break;
      int64_t v = 0;
      for (size_t b = 0; b < width; ++b) {
        v |= static_cast<int64_t>(bytes[o + b]) << (8 * b);
      }
      out.push_back(v);
    }
    return out;
  }

  MethodRef callee_of(const Insn& in) const {
    const MethodRef& raw = parsed.method_ids[in.idx];
    return {dotted_class_name(raw.owner), raw.name, raw.descriptor};
  }

  ResolvedValue resolve(size_t use_idx, int reg, int depth) const {
    const auto& insns = code.insns;
    if (use_idx < insns.size() && barriers.count(insns[use_idx].addr)) {
      return {};  // control can join right at the use: value ambiguous
    }
    for (size_t j = use_idx; j-- > 0;) {
      const Insn& in = insns[j];
      if (!in.is_payload && defines(in, reg)) {
        ResolvedValue v = value_of_def(j, reg, depth);
        collect_fed_by(j, use_idx, reg, v);
        return v;
      }
      if (barriers.count(in.addr)) return {};
    }
    return {};  // method parameter or never written
  }

  void collect_fed_by(size_t def_idx, size_t use_idx, int reg,
                      ResolvedValue& v) const {
    for (size_t k = def_idx + 1; k < use_idx; ++k) {
      const Insn& in = code.insns[k];
      if (!is_invoke(in)) continue;
      if (std::find(in.regs.begin(), in.regs.end(), reg) != in.regs.end()) {
        v.fed_by.push_back(callee_of(in));
      }
    }
  }

  ResolvedValue value_of_def(size_t j, int reg, int depth) const {
    const Insn& in = code.insns[j];
    ResolvedValue v;
    uint8_t op = in.op;
    if ((op == 0x1A || op == 0x1B) && in.reg_a == reg) {
      v.kind = ResolvedValue::Kind::Str;
      v.str = parsed.strings[in.idx];
    } else if (op >= 0x12 && op <= 0x19 && in.reg_a == reg) {
      v.kind = ResolvedValue::Kind::Int;
      v.num = in.value;
    } else if (op == 0x22 && in.reg_a == reg) {
      v.kind = ResolvedValue::Kind::NewObject;
      v.str = in.idx < parsed.types.size()
                  ? dotted_class_name(parsed.types[in.idx])
                  : "";
    } else if (op == 0x26 && in.reg_a == reg) {
      v.kind = ResolvedValue::Kind::FilledArray;
      v.bytes = fill_array_values(in);
    } else if ((op >= 0x0A && op <= 0x0C) && in.reg_a == reg) {
      if (j > 0 && is_invoke(code.insns[j - 1])) {
        const Insn& call = code.insns[j - 1];
        v.kind = ResolvedValue::Kind::Result;
        v.result = std::make_shared<CallInfo>();
        v.result->callee = callee_of(call);
        v.result->depth = depth;
        if (depth < 4) {
          for (int r : call.regs) {
            v.result->args.push_back(resolve(j - 1, r, depth + 1));
          }
        }
      }
    }
    return v;  // anything else: unknown contents
  }
};

std::string raw_method_key(const std::string& owner, const std::string& name,
                           const std::string& descriptor) {
  return owner + "->" + name + descriptor;
}

}  // namespace

std::string dotted_class_name(std::string_view internal) {
  std::string out;
  if (internal.size() >= 2 && internal.front() == 'L' &&
      internal.back() == ';') {
    out.assign(internal.substr(1, internal.size() - 2));
  } else if (!internal.empty() && internal.front() == '[') {
    return std::string(internal);
  } else {
    out.assign(internal);
  }
  std::replace(out.begin(), out.end(), '/', '.');
  return out;
}

CodeModel parse_dex(std::span<const uint8_t> data, bool verify) {
  DexReader reader(data);
  DexParsed parsed = reader.parse(verify);

  CodeModel model;
  for (const auto& s : parsed.strings) model.string_pool.push_back(s);

  for (const auto& def : parsed.classes) {
    ClassModel cls;
    cls.descriptor = dotted_class_name(parsed.types[def.type_idx]);
    if (def.super_idx) {
      cls.superclass = dotted_class_name(parsed.types[*def.super_idx]);
    }
    for (uint32_t t : def.interface_idxs) {
      cls.interfaces.push_back(dotted_class_name(parsed.types[t]));
    }
    for (const auto& raw : def.methods) {
      const MethodRef& id = parsed.method_ids[raw.method_idx];
      MethodModel m;
      m.owner = cls.descriptor;
      m.name = id.name;
      m.descriptor = id.descriptor;
      m.is_instance = (raw.access & 0x8) == 0;  // ACC_STATIC
      if (raw.code) {
        MethodAnalyzer an(parsed, *raw.code);
        const auto& insns = raw.code->insns;
        for (size_t i = 0; i < insns.size(); ++i) {
          const Insn& in = insns[i];
          if (in.is_payload) continue;
          ++m.op_count;
          if (in.op == 0x1A || in.op == 0x1B) {
            m.const_strings.push_back(parsed.strings[in.idx]);
          } else if (is_invoke(in)) {
            m.has_invoke = true;
            CallSite site;
            site.callee = an.callee_of(in);
            site.is_static = is_invoke_static(in);
            for (int r : in.regs) {
              site.args.push_back(an.resolve(i, r, 0));
            }
            m.calls.push_back(std::move(site));
          } else if (in.op == 0xFA || in.op == 0xFB) {
            m.has_invoke = true;
          } else if (in.op == 0x27) {
            m.has_throw = true;
          } else if (in.op >= 0x0F && in.op <= 0x11) {  // return value
            m.returns.push_back(an.resolve(i, in.reg_a, 0));
          }
        }
      }
      cls.methods.push_back(std::move(m));
    }
    model.classes.push_back(std::move(cls));
  }
  return model;
}

DexDump dump_dex(std::span<const uint8_t> data, bool verify) {
  DexReader reader(data);
  DexParsed parsed = reader.parse(verify);

  DexDump dump;
  dump.strings = parsed.strings;
  for (uint32_t idx : parsed.bad_string_idx) {
    dump.bad_strings.push_back(parsed.strings[idx]);
  }
  for (const auto& def : parsed.classes) {
    DexDump::Class cls;
    cls.descriptor = parsed.types[def.type_idx];
    if (def.super_idx) cls.superclass = parsed.types[*def.super_idx];
    for (uint32_t t : def.interface_idxs) {
      cls.interfaces.push_back(parsed.types[t]);
    }
    for (const auto& raw : def.methods) {
      const MethodRef& id = parsed.method_ids[raw.method_idx];
      cls.methods.push_back({id.name, id.descriptor});
      if (!raw.code) continue;
      DexMethodDump md;
      md.registers = raw.code->registers;
      for (const auto& in : raw.code->insns) {
        md.insns.emplace_back(in.addr, in.name);
        if (in.is_payload) continue;
        if (in.op == 0x1A || in.op == 0x1B) {
          md.strings.push_back(parsed.strings[in.idx]);
        }
        bool has_method_ref =
            std::string_view(in.name).substr(0, 6) == "invoke" &&
            (in.fmt == Fmt::f35c || in.fmt == Fmt::f3rc);
        if (has_method_ref) {
          const MethodRef& callee = parsed.method_ids[in.idx];
          md.calls.push_back(
              {in.addr, callee.owner, callee.name, callee.descriptor});
        }
      }
      for (const auto& t : raw.code->tries) {
        DexMethodDump::Try td;
        td.start = static_cast<int>(t.start);
        td.count = t.count;
        for (const auto& h : t.handlers) {
          td.handlers.emplace_back(parsed.types[h.first],
                                   static_cast<int>(h.second));
        }
        md.tries.push_back(std::move(td));
      }
      dump.methods[raw_method_key(cls.descriptor, id.name, id.descriptor)] =
          std::move(md);
    }
    dump.classes.push_back(std::move(cls));
  }
  return dump;
}

}  // namespace apkaudit
