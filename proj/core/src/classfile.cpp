#include <algorithm>
#include <cstring>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include "apkaudit/bytecode.hpp"
#include "apkaudit/bytes.hpp"
#include "apkaudit/dumps.hpp"

namespace apkaudit {

namespace {

[[noreturn]] void range_fail(const std::string& what) {
  throw ParseError(ErrorKind::IndexOutOfRange, what);
}

struct CpEntry {
  enum class Tag {
    Empty, Utf8, Int, Float, Long8, Class, String, FieldRef, MethodRef,
    InterfaceMethodRef, NameAndType, MethodHandle, Ref16, Dynamic,
  };
  Tag tag = Tag::Empty;
  std::string text;     // Utf8
  int32_t int_value = 0;
  int64_t long_value = 0;
  uint16_t a = 0;       // first index operand
  uint16_t b = 0;       // second index operand
};

struct ClassParsed {
  std::vector<CpEntry> cp;  // 1-based
  uint16_t access = 0;
  std::string name;         // slash form
  std::string superclass;   // slash form, may be empty
  std::vector<std::string> interfaces;
  struct Method {
    uint16_t access = 0;
    std::string name;
    std::string descriptor;
    bool has_code = false;
    std::vector<uint8_t> code;
    std::vector<uint16_t> handler_pcs;
  };
  std::vector<Method> methods;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> data) : d_(data) {}

  uint8_t u8() {
    if (pos_ + 1 > d_.size()) range_fail("file truncated");
    return d_[pos_++];
  }
  uint16_t u16() {
    if (pos_ + 2 > d_.size()) range_fail("file truncated");
    uint16_t v = static_cast<uint16_t>((d_[pos_] << 8) | d_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    if (pos_ + 4 > d_.size()) range_fail("file truncated");
    uint32_t v = (static_cast<uint32_t>(d_[pos_]) << 24) |
                 (static_cast<uint32_t>(d_[pos_ + 1]) << 16) |
                 (static_cast<uint32_t>(d_[pos_ + 2]) << 8) |
                 static_cast<uint32_t>(d_[pos_ + 3]);
    pos_ += 4;
    return v;
  }
  std::span<const uint8_t> bytes(size_t n) {
    if (n > d_.size() - pos_ || pos_ > d_.size()) range_fail("file truncated");
    auto s = d_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(size_t n) { bytes(n); }

 private:
  std::span<const uint8_t> d_;
  size_t pos_ = 0;
};

const CpEntry& cp_at(const ClassParsed& p, uint16_t idx) {
  if (idx == 0 || idx >= p.cp.size()) range_fail("constant pool index");
  return p.cp[idx];
}

const std::string& cp_utf8(const ClassParsed& p, uint16_t idx) {
  const CpEntry& e = cp_at(p, idx);
  if (e.tag != CpEntry::Tag::Utf8) range_fail("expected utf8 constant");
  return e.text;
}

std::string cp_class_name(const ClassParsed& p, uint16_t idx) {
  const CpEntry& e = cp_at(p, idx);
  if (e.tag != CpEntry::Tag::Class) range_fail("expected class constant");
  return cp_utf8(p, e.a);
}

ClassParsed parse_structure(std::span<const uint8_t> data) {
  Reader r(data);
  if (data.size() < 10) {
    throw ParseError(ErrorKind::BadClassMagic, "file shorter than the header");
  }
  if (r.u32() != 0xCAFEBABE) {
    throw ParseError(ErrorKind::BadClassMagic, "bad magic bytes");
  }
  r.u16();  // minor
  uint16_t major = r.u16();
  if (major < 45 || major > 69) {
    throw ParseError(ErrorKind::UnsupportedMajorVersion,
                     "major version " + std::to_string(major));
  }

  ClassParsed out;
  uint16_t cp_count = r.u16();
  out.cp.resize(1);
  for (uint16_t i = 1; i < cp_count; ++i) {
    uint8_t tag = r.u8();
    CpEntry e;
    switch (tag) {
      case 1: {
        uint16_t len = r.u16();
        auto raw = r.bytes(len);
        e.tag = CpEntry::Tag::Utf8;
        e.text.assign(raw.begin(), raw.end());
        break;
      }
      case 3:
        e.tag = CpEntry::Tag::Int;
        e.int_value = static_cast<int32_t>(r.u32());
        break;
      case 4:
        e.tag = CpEntry::Tag::Float;
        r.u32();
        break;
      case 5:
      case 6: {
        e.tag = CpEntry::Tag::Long8;
        uint64_t hi = r.u32();
        uint64_t lo = r.u32();
        e.long_value = static_cast<int64_t>((hi << 32) | lo);
        out.cp.push_back(e);
        out.cp.emplace_back();  // second slot
        ++i;
        continue;
      }
      case 7:
        e.tag = CpEntry::Tag::Class;
        e.a = r.u16();
        break;
      case 8:
        e.tag = CpEntry::Tag::String;
        e.a = r.u16();
        break;
      case 9:
      case 10:
      case 11:
        e.tag = tag == 9    ? CpEntry::Tag::FieldRef
                : tag == 10 ? CpEntry::Tag::MethodRef
                            : CpEntry::Tag::InterfaceMethodRef;
        e.a = r.u16();
        e.b = r.u16();
        break;
      case 12:
        e.tag = CpEntry::Tag::NameAndType;
        e.a = r.u16();
        e.b = r.u16();
        break;
      case 15:
        e.tag = CpEntry::Tag::MethodHandle;
        r.u8();
        e.a = r.u16();
        break;
      case 16:
      case 19:
      case 20:
        e.tag = CpEntry::Tag::Ref16;
        e.a = r.u16();
        break;
      case 17:
      case 18:
        e.tag = CpEntry::Tag::Dynamic;
        e.a = r.u16();
        e.b = r.u16();
        break;
      default:
        throw ParseError(ErrorKind::MalformedConstantPool,
                         "constant tag " + std::to_string(tag));
    }
    out.cp.push_back(std::move(e));
  }

  out.access = r.u16();
  uint16_t this_c = r.u16();
  uint16_t super_c = r.u16();
  out.name = cp_class_name(out, this_c);
  if (super_c) out.superclass = cp_class_name(out, super_c);
  uint16_t n_if = r.u16();
  for (uint16_t i = 0; i < n_if; ++i) {
    out.interfaces.push_back(cp_class_name(out, r.u16()));
  }

  auto skip_attrs = [&](uint16_t n) {
    for (uint16_t i = 0; i < n; ++i) {
      r.u16();
      uint32_t len = r.u32();
      r.skip(len);
    }
  };

  uint16_t n_fields = r.u16();
  for (uint16_t i = 0; i < n_fields; ++i) {
    r.skip(6);
    skip_attrs(r.u16());
  }

  uint16_t n_methods = r.u16();
  for (uint16_t i = 0; i < n_methods; ++i) {
    ClassParsed::Method m;
    m.access = r.u16();
    m.name = cp_utf8(out, r.u16());
    m.descriptor = cp_utf8(out, r.u16());
    uint16_t n_attr = r.u16();
    for (uint16_t j = 0; j < n_attr; ++j) {
      uint16_t attr_name = r.u16();
      uint32_t len = r.u32();
      if (cp_utf8(out, attr_name) == "Code" && !m.has_code) {
        auto body = r.bytes(len);
        Reader cr(body);
        cr.u16();  // max stack
        cr.u16();  // max locals
        uint32_t code_len = cr.u32();
        auto code = cr.bytes(code_len);
        m.code.assign(code.begin(), code.end());
        uint16_t ex_n = cr.u16();
        for (uint16_t k = 0; k < ex_n; ++k) {
          cr.u16();  // start
          cr.u16();  // end
          m.handler_pcs.push_back(cr.u16());
          uint16_t catch_type = cr.u16();
          if (catch_type) cp_class_name(out, catch_type);
        }
        m.has_code = true;
      } else {
        r.skip(len);
      }
    }
    out.methods.push_back(std::move(m));
  }
  return out;
}

// -------------------------------------------------------------- decoding

// Byte length of the instruction at pc, or 0 when the opcode is unknown.
size_t insn_length(const std::vector<uint8_t>& code, size_t pc) {
  uint8_t op = code[pc];
  auto s32_at = [&](size_t o) -> int32_t {
    if (o + 4 > code.size()) range_fail("switch operand");
    return static_cast<int32_t>((static_cast<uint32_t>(code[o]) << 24) |
                                (static_cast<uint32_t>(code[o + 1]) << 16) |
                                (static_cast<uint32_t>(code[o + 2]) << 8) |
                                code[o + 3]);
  };
  if (op == 0xC4) {  // wide
    if (pc + 1 >= code.size()) range_fail("wide operand");
    return code[pc + 1] == 0x84 ? 6 : 4;
  }
  if (op == 0xAA) {  // tableswitch
    size_t pad = (4 - ((pc + 1) % 4)) % 4;
    size_t base = pc + 1 + pad;
    int32_t lo = s32_at(base + 4);
    int32_t hi = s32_at(base + 8);
    if (hi < lo) range_fail("switch bounds");
    return 1 + pad + 12 + 4 * (static_cast<size_t>(hi - lo) + 1);
  }
  if (op == 0xAB) {  // lookupswitch
    size_t pad = (4 - ((pc + 1) % 4)) % 4;
    size_t base = pc + 1 + pad;
    int32_t npairs = s32_at(base + 4);
    if (npairs < 0) range_fail("switch pair count");
    return 1 + pad + 8 + 8 * static_cast<size_t>(npairs);
  }
  if (op <= 0x0F) return 1;
  if (op >= 0x57 && op <= 0x5F) return 1;
  if (op >= 0x1A && op <= 0x53) return 1;
  if (op >= 0x60 && op <= 0x83) return 1;
  if (op >= 0x85 && op <= 0x98) return 1;
  if (op >= 0xAC && op <= 0xB1) return 1;
  if (op == 0xBE || op == 0xBF || op == 0xC2 || op == 0xC3) return 1;
  if (op == 0x10 || op == 0x12 || op == 0xBC) return 2;
  if (op >= 0x15 && op <= 0x19) return 2;
  if (op >= 0x36 && op <= 0x3A) return 2;
  if (op == 0xA9) return 2;
  if (op == 0x11 || op == 0x13 || op == 0x14 || op == 0xBB || op == 0xBD ||
      op == 0xC0 || op == 0xC1) {
    return 3;
  }
  if (op >= 0xB2 && op <= 0xB8) return 3;
  if (op >= 0x99 && op <= 0xA8) return 3;
  if (op == 0xC6 || op == 0xC7) return 3;
  if (op == 0x84) return 3;
  if (op == 0xC8 || op == 0xC9) return 5;
  if (op == 0xB9 || op == 0xBA) return 5;
  if (op == 0xC5) return 4;
  return 0;
}

int descriptor_param_count(std::string_view desc) {
  int count = 0;
  size_t i = desc.find('(');
  if (i == std::string_view::npos) return 0;
  ++i;
  while (i < desc.size() && desc[i] != ')') {
    while (i < desc.size() && desc[i] == '[') ++i;
    if (i >= desc.size()) break;
    if (desc[i] == 'L') {
      size_t semi = desc.find(';', i);
      if (semi == std::string_view::npos) break;
      i = semi + 1;
    } else {
      ++i;
    }
    ++count;
  }
  return count;
}

bool descriptor_returns_void(std::string_view desc) {
  size_t close = desc.rfind(')');
  return close != std::string_view::npos && close + 1 < desc.size() &&
         desc[close + 1] == 'V';
}

using ValuePtr = std::shared_ptr<ResolvedValue>;

ValuePtr unknown_value() { return std::make_shared<ResolvedValue>(); }

struct Simulator {
  const ClassParsed& parsed;
  const ClassParsed::Method& method;
  MethodModel& model;

  std::vector<ValuePtr> stack;
  std::unordered_map<int, ValuePtr> locals;
  std::unordered_set<size_t> reset_pcs;     // branch targets
  std::unordered_set<size_t> handler_pcs;

  Simulator(const ClassParsed& p, const ClassParsed::Method& m,
            MethodModel& out)
      : parsed(p), method(m), model(out) {}

  ValuePtr pop() {
    if (stack.empty()) return unknown_value();
    ValuePtr v = std::move(stack.back());
    stack.pop_back();
    return v;
  }

  void push(ValuePtr v) { stack.push_back(std::move(v)); }

  void reset_tracking() {
    stack.clear();
    locals.clear();
  }

  uint16_t read_u16(size_t pc) const {
    const auto& c = method.code;
    if (pc + 2 > c.size()) range_fail("instruction operand");
    return static_cast<uint16_t>((c[pc] << 8) | c[pc + 1]);
  }

  MethodRef method_ref_at(uint16_t cp_idx) const {
    const CpEntry& e = cp_at(parsed, cp_idx);
    if (e.tag != CpEntry::Tag::MethodRef &&
        e.tag != CpEntry::Tag::InterfaceMethodRef &&
        e.tag != CpEntry::Tag::FieldRef) {
      range_fail("expected a member reference");
    }
    const CpEntry& nat = cp_at(parsed, e.b);
    if (nat.tag != CpEntry::Tag::NameAndType) range_fail("expected name+type");
    return {dotted_class_name(cp_class_name(parsed, e.a)),
            cp_utf8(parsed, nat.a), cp_utf8(parsed, nat.b)};
  }

  void collect_branch_targets() {
    const auto& code = method.code;
    size_t pc = 0;
    while (pc < code.size()) {
      uint8_t op = code[pc];
      size_t len = insn_length(code, pc);
      if (len == 0) break;  // unknown opcode: main pass throws there
      if ((op >= 0x99 && op <= 0xA8) || op == 0xC6 || op == 0xC7) {
        int16_t delta = static_cast<int16_t>(read_u16(pc + 1));
        reset_pcs.insert(pc + delta);
      } else if (op == 0xC8 || op == 0xC9) {
        if (pc + 5 <= code.size()) {
          int32_t delta = static_cast<int32_t>(
              (static_cast<uint32_t>(code[pc + 1]) << 24) |
              (static_cast<uint32_t>(code[pc + 2]) << 16) |
              (static_cast<uint32_t>(code[pc + 3]) << 8) | code[pc + 4]);
          reset_pcs.insert(pc + delta);
        }
      } else if (op == 0xAA || op == 0xAB) {
        size_t pad = (4 - ((pc + 1) % 4)) % 4;
        size_t base = pc + 1 + pad;
        auto s32_at = [&](size_t o) -> int32_t {
          if (o + 4 > code.size()) range_fail("switch operand");
          return static_cast<int32_t>(
              (static_cast<uint32_t>(code[o]) << 24) |
              (static_cast<uint32_t>(code[o + 1]) << 16) |
              (static_cast<uint32_t>(code[o + 2]) << 8) | code[o + 3]);
        };
        reset_pcs.insert(pc + s32_at(base));  // default
        if (op == 0xAA) {
          int32_t lo = s32_at(base + 4);
          int32_t hi = s32_at(base + 8);
          for (int64_t k = 0; k <= static_cast<int64_t>(hi) - lo; ++k) {
            reset_pcs.insert(pc + s32_at(base + 12 + 4 * k));
          }
        } else {
          int32_t npairs = s32_at(base + 4);
          for (int32_t k = 0; k < npairs; ++k) {
            reset_pcs.insert(pc + s32_at(base + 8 + 8ull * k + 4));
          }
        }
      }
      pc += len;
    }
    for (uint16_t h : method.handler_pcs) {
      reset_pcs.insert(h);
      handler_pcs.insert(h);
    }
  }

  void record_call(const MethodRef& callee, bool is_static, size_t nparams) {
    std::vector<ValuePtr> popped;
    for (size_t i = 0; i < nparams; ++i) popped.push_back(pop());
    std::reverse(popped.begin(), popped.end());
    ValuePtr receiver;
    if (!is_static) receiver = pop();

    CallSite site;
    site.callee = callee;
    site.is_static = is_static;
    if (receiver) site.args.push_back(*receiver);
    for (const auto& p : popped) site.args.push_back(*p);
    model.calls.push_back(std::move(site));
    model.has_invoke = true;

    // Later uses of the same storage see this call as a feeder.
    if (receiver) receiver->fed_by.push_back(callee);
    for (const auto& p : popped) p->fed_by.push_back(callee);

    if (!descriptor_returns_void(callee.descriptor)) {
      auto result = std::make_shared<ResolvedValue>();
      result->kind = ResolvedValue::Kind::Result;
      result->result = std::make_shared<CallInfo>();
      result->result->callee = callee;
      for (const auto& p : popped) result->result->args.push_back(*p);
      if (receiver) {
        result->result->args.insert(result->result->args.begin(), *receiver);
      }
      push(std::move(result));
    }
  }

  void run() {
    collect_branch_targets();
    const auto& code = method.code;
    size_t pc = 0;
    while (pc < code.size()) {
      if (reset_pcs.count(pc)) {
        reset_tracking();
        if (handler_pcs.count(pc)) push(unknown_value());
      }
      uint8_t op = code[pc];
      size_t len = insn_length(code, pc);
      if (len == 0 || pc + len > code.size()) {
        // Unknown or truncated instruction: no further decoding is safe.
        reset_tracking();
        break;
      }
      ++model.op_count;
      step(op, pc);
      pc += len;
    }
  }

  void step(uint8_t op, size_t pc) {
    const auto& code = method.code;
    switch (op) {
      case 0x00:  // nop
        break;
      case 0x01:  // aconst_null
        push(unknown_value());
        break;
      case 0x02: case 0x03: case 0x04: case 0x05: case 0x06: case 0x07:
      case 0x08: {  // iconst_m1 .. iconst_5
        auto v = std::make_shared<ResolvedValue>();
        v->kind = ResolvedValue::Kind::Int;
        v->num = static_cast<int>(op) - 0x03;
        push(std::move(v));
        break;
      }
      case 0x09: case 0x0A: {  // lconst_0/1
        auto v = std::make_shared<ResolvedValue>();
        v->kind = ResolvedValue::Kind::Int;
        v->num = op - 0x09;
        push(std::move(v));
        break;
      }
      case 0x0B: case 0x0C: case 0x0D: case 0x0E: case 0x0F:  // f/d consts
        push(unknown_value());
        break;
      case 0x10: {  // bipush
        auto v = std::make_shared<ResolvedValue>();
        v->kind = ResolvedValue::Kind::Int;
        v->num = static_cast<int8_t>(code[pc + 1]);
        push(std::move(v));
        break;
      }
      case 0x11: {  // sipush
        auto v = std::make_shared<ResolvedValue>();
        v->kind = ResolvedValue::Kind::Int;
        v->num = static_cast<int16_t>(read_u16(pc + 1));
        push(std::move(v));
        break;
      }
      case 0x12:   // ldc
      case 0x13: { // ldc_w
        uint16_t idx = op == 0x12 ? code[pc + 1] : read_u16(pc + 1);
        const CpEntry& e = cp_at(parsed, idx);
        auto v = std::make_shared<ResolvedValue>();
        if (e.tag == CpEntry::Tag::String) {
          v->kind = ResolvedValue::Kind::Str;
          v->str = cp_utf8(parsed, e.a);
          model.const_strings.push_back(v->str);
        } else if (e.tag == CpEntry::Tag::Int) {
          v->kind = ResolvedValue::Kind::Int;
          v->num = e.int_value;
        }
        push(std::move(v));
        break;
      }
      case 0x14: {  // ldc2_w
        uint16_t idx = read_u16(pc + 1);
        const CpEntry& e = cp_at(parsed, idx);
        auto v = std::make_shared<ResolvedValue>();
        if (e.tag == CpEntry::Tag::Long8) {
          v->kind = ResolvedValue::Kind::Int;
          v->num = e.long_value;
        }
        push(std::move(v));
        break;
      }
      case 0x15: case 0x16: case 0x17: case 0x18: case 0x19: {  // loads
        int slot = code[pc + 1];
        auto it = locals.find(slot);
        push(it != locals.end() ? it->second : unknown_value());
        break;
      }
      case 0x36: case 0x37: case 0x38: case 0x39: case 0x3A: {  // stores
        int slot = code[pc + 1];
        locals[slot] = pop();
        break;
      }
      case 0x84:  // iinc
        locals.erase(code[pc + 1]);
        break;
      case 0xC4: {  // wide
        uint8_t sub = code[pc + 1];
        uint16_t slot = read_u16(pc + 2);
        if (sub >= 0x15 && sub <= 0x19) {
          auto it = locals.find(slot);
          push(it != locals.end() ? it->second : unknown_value());
        } else if (sub >= 0x36 && sub <= 0x3A) {
          locals[slot] = pop();
        } else if (sub == 0x84) {
          locals.erase(slot);
        }
        break;
      }
      case 0x57:  // pop
      case 0x58:  // pop2 (long/double treated as one value)
        pop();
        break;
      case 0x59:  // dup
        if (!stack.empty()) {
          push(stack.back());
        } else {
          push(unknown_value());
        }
        break;
      case 0x5A: {  // dup_x1
        ValuePtr a = pop();
        ValuePtr b = pop();
        push(a);
        push(b);
        push(a);
        break;
      }
      case 0x5C:  // dup2: with cat2-as-one this is usually a plain dup
        if (!stack.empty()) push(stack.back());
        break;
      case 0x5B: case 0x5D: case 0x5E:  // deeper dup forms: give up
        reset_tracking();
        break;
      case 0x5F: {  // swap
        ValuePtr a = pop();
        ValuePtr b = pop();
        push(a);
        push(b);
        break;
      }
      case 0xBB: {  // new
        auto v = std::make_shared<ResolvedValue>();
        v->kind = ResolvedValue::Kind::NewObject;
        v->str = dotted_class_name(cp_class_name(parsed, read_u16(pc + 1)));
        push(std::move(v));
        break;
      }
      case 0xBC:  // newarray
      case 0xBD:  // anewarray
        pop();
        push(unknown_value());
        break;
      case 0xBE:  // arraylength
      case 0xC1:  // instanceof
        pop();
        push(unknown_value());
        break;
      case 0xC0:  // checkcast: value unchanged
        break;
      case 0xC5: {  // multianewarray
        uint8_t dims = code[pc + 3];
        for (uint8_t i = 0; i < dims; ++i) pop();
        push(unknown_value());
        break;
      }
      case 0xB2:  // getstatic
        push(unknown_value());
        break;
      case 0xB3:  // putstatic
        pop();
        break;
      case 0xB4:  // getfield
        pop();
        push(unknown_value());
        break;
      case 0xB5:  // putfield
        pop();
        pop();
        break;
      case 0xB6:  // invokevirtual
      case 0xB7:  // invokespecial
      case 0xB8:  // invokestatic
      case 0xB9: {  // invokeinterface
        MethodRef callee = method_ref_at(read_u16(pc + 1));
        record_call(callee, op == 0xB8,
                    descriptor_param_count(callee.descriptor));
        break;
      }
      case 0xBA: {  // invokedynamic: stack effect only
        const CpEntry& e = cp_at(parsed, read_u16(pc + 1));
        std::string desc;
        if (e.tag == CpEntry::Tag::Dynamic) {
          const CpEntry& nat = cp_at(parsed, e.b);
          if (nat.tag == CpEntry::Tag::NameAndType) {
            desc = cp_utf8(parsed, nat.b);
          }
        }
        model.has_invoke = true;
        if (!desc.empty()) {
          for (int i = 0; i < descriptor_param_count(desc); ++i) pop();
          if (!descriptor_returns_void(desc)) push(unknown_value());
        } else {
          reset_tracking();
        }
        break;
      }
      case 0xAC: case 0xAD: case 0xAE: case 0xAF: case 0xB0: {  // returns
        ValuePtr v = pop();
        model.returns.push_back(*v);
        reset_tracking();
        break;
      }
      case 0xB1:  // return void
        reset_tracking();
        break;
      case 0xBF:  // athrow
        model.has_throw = true;
        pop();
        reset_tracking();
        break;
      case 0xA7:  // goto
      case 0xC8:  // goto_w
      case 0xA8:  // jsr
      case 0xC9:  // jsr_w
      case 0xA9:  // ret
        reset_tracking();
        break;
      case 0xAA:  // tableswitch
      case 0xAB:  // lookupswitch
        pop();
        reset_tracking();
        break;
      case 0xC2:  // monitorenter
      case 0xC3:  // monitorexit
        pop();
        break;
      case 0xC6:  // ifnull
      case 0xC7:  // ifnonnull
        pop();
        break;
      default:
        if (op >= 0x99 && op <= 0x9E) {  // ifeq..ifle
          pop();
        } else if (op >= 0x9F && op <= 0xA6) {  // if_icmp / if_acmp
          pop();
          pop();
        } else if (op >= 0x1A && op <= 0x2D) {  // iload_0..aload_3
          int slot = (op - 0x1A) % 4;
          auto it = locals.find(slot);
          push(it != locals.end() ? it->second : unknown_value());
        } else if (op >= 0x3B && op <= 0x4E) {  // istore_0..astore_3
          locals[(op - 0x3B) % 4] = pop();
        } else if (op >= 0x2E && op <= 0x35) {  // array loads
          pop();
          pop();
          push(unknown_value());
        } else if (op >= 0x4F && op <= 0x56) {  // array stores
          pop();
          pop();
          pop();
        } else if (op >= 0x60 && op <= 0x83) {  // arithmetic
          pop();
          pop();
          push(unknown_value());
        } else if (op >= 0x85 && op <= 0x93) {  // conversions
          pop();
          push(unknown_value());
        } else if (op >= 0x94 && op <= 0x98) {  // comparisons
          pop();
          pop();
          push(unknown_value());
        }
        break;
    }
  }
};

}  // namespace

CodeModel parse_class(std::span<const uint8_t> data) {
  ClassParsed parsed = parse_structure(data);

  CodeModel model;
  ClassModel cls;
  cls.descriptor = dotted_class_name(parsed.name);
  cls.superclass = dotted_class_name(parsed.superclass);
  for (const auto& i : parsed.interfaces) {
    cls.interfaces.push_back(dotted_class_name(i));
  }
  for (const auto& e : parsed.cp) {
    if (e.tag == CpEntry::Tag::String && e.a < parsed.cp.size() &&
        parsed.cp[e.a].tag == CpEntry::Tag::Utf8) {
      model.string_pool.push_back(parsed.cp[e.a].text);
    }
  }
  for (const auto& pm : parsed.methods) {
    MethodModel m;
    m.owner = cls.descriptor;
    m.name = pm.name;
    m.descriptor = pm.descriptor;
    m.is_instance = (pm.access & 0x0008) == 0;
    if (pm.has_code) {
      Simulator sim(parsed, pm, m);
      sim.run();
    }
    cls.methods.push_back(std::move(m));
  }
  model.classes.push_back(std::move(cls));
  return model;
}

ClassDump dump_class(std::span<const uint8_t> data) {
  ClassParsed parsed = parse_structure(data);

  ClassDump dump;
  dump.name = parsed.name;
  dump.superclass = parsed.superclass;
  dump.interfaces = parsed.interfaces;
  for (const auto& pm : parsed.methods) {
    ClassDump::Method md;
    md.name = pm.name;
    md.descriptor = pm.descriptor;
    if (pm.has_code) {
      const auto& code = pm.code;
      size_t pc = 0;
      while (pc < code.size()) {
        uint8_t op = code[pc];
        size_t len = insn_length(code, pc);
        if (len == 0) range_fail("unknown opcode");
        if (pc + len > code.size()) range_fail("truncated instruction");
        auto u16_at = [&](size_t o) -> uint16_t {
          if (o + 2 > code.size()) range_fail("instruction operand");
          return static_cast<uint16_t>((code[o] << 8) | code[o + 1]);
        };
        if (op == 0x12 || op == 0x13) {
          uint16_t idx = op == 0x12 ? code[pc + 1] : u16_at(pc + 1);
          const CpEntry& e = cp_at(parsed, idx);
          if (e.tag == CpEntry::Tag::String) {
            md.strings.push_back(cp_utf8(parsed, e.a));
          }
        } else if (op >= 0xB6 && op <= 0xB9) {
          const CpEntry& e = cp_at(parsed, u16_at(pc + 1));
          if (e.tag == CpEntry::Tag::MethodRef ||
              e.tag == CpEntry::Tag::InterfaceMethodRef) {
            const CpEntry& nat = cp_at(parsed, e.b);
            if (nat.tag == CpEntry::Tag::NameAndType) {
              md.calls.push_back(cp_class_name(parsed, e.a) + "." +
                                 cp_utf8(parsed, nat.a) +
                                 cp_utf8(parsed, nat.b));
            }
          }
        }
        pc += len;
      }
    }
    dump.methods.push_back(std::move(md));
  }
  return dump;
}

}  // namespace apkaudit
