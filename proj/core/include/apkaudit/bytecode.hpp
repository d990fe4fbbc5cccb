#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apkaudit/errors.hpp"

namespace apkaudit {

// A reference to a method: fully-qualified owner class (dotted), simple
// name, and a JVM-style descriptor such as "(Ljava/lang/String;)V".
struct MethodRef {
  std::string owner;
  std::string name;
  std::string descriptor;
};

struct CallInfo;

// The best static approximation of a runtime value flowing into a call.
struct ResolvedValue {
  enum class Kind {
    Unknown,      // could not be tracked to a constant
    Str,          // string constant
    Int,          // integer constant (also bool/char/short)
    FilledArray,  // array initialised from constant data
    NewObject,    // freshly allocated instance of a known class
    Result,       // return value of a known call (see `result`)
  };

  Kind kind = Kind::Unknown;
  std::string str;    // Kind::Str payload, or class name for NewObject
  int64_t num = 0;    // Kind::Int payload
  std::vector<int64_t> bytes;  // Kind::FilledArray element values
  std::shared_ptr<CallInfo> result;  // Kind::Result payload

  // Methods that received this same value (register/slot) between its
  // definition and this use — e.g. Random.nextBytes(buf) seen before
  // the buf is passed to a key constructor.
  std::vector<MethodRef> fed_by;

  bool is_known_str() const { return kind == Kind::Str; }
  bool is_known_int() const { return kind == Kind::Int; }
};

struct CallInfo {
  MethodRef callee;
  std::vector<ResolvedValue> args;
  int depth = 0;
};

// One call instruction inside a method body.  For instance calls,
// args[0] is the receiver.
struct CallSite {
  MethodRef callee;
  bool is_static = false;
  std::vector<ResolvedValue> args;
};

struct MethodModel {
  std::string owner;       // dotted class name
  std::string name;
  std::string descriptor;
  bool is_instance = false;
  std::vector<CallSite> calls;
  std::vector<std::string> const_strings;  // every string constant loaded
  std::vector<ResolvedValue> returns;      // resolved returned values
  bool has_invoke = false;
  bool has_throw = false;
  int op_count = 0;
};

struct ClassModel {
  std::string descriptor;  // dotted, e.g. "com.example.Foo"
  std::string superclass;  // dotted, empty for java.lang.Object itself
  std::vector<std::string> interfaces;  // dotted
  std::vector<MethodModel> methods;
};

struct CodeModel {
  std::vector<ClassModel> classes;
  std::vector<std::string> string_pool;  // all string constants seen
  std::vector<std::string> notes;        // non-fatal decoding notes

  bool empty() const { return classes.empty(); }
  void merge(CodeModel&& other);

  // True when any call site targets a method on a class whose dotted
  // name starts with `prefix`.
  bool uses_api_prefix(const std::string& prefix) const;
};

// Parses one classesN.dex blob.  Verifies header magic, checksum and
// signature when `verify` is set.  Throws ParseError with kinds
// BadMagic, UnsupportedVersion, OffsetOutOfBounds, ChecksumMismatch.
CodeModel parse_dex(std::span<const uint8_t> data, bool verify = true);

// Parses one JVM .class blob (e.g. from an AAR's classes.jar).  Throws
// ParseError with kinds BadClassMagic, UnsupportedMajorVersion,
// MalformedConstantPool, IndexOutOfRange.
CodeModel parse_class(std::span<const uint8_t> data);

// Converts "Lcom/foo/Bar;" or "com/foo/Bar" to "com.foo.Bar".
std::string dotted_class_name(std::string_view internal);

}  // namespace apkaudit
