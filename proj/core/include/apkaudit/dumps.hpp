#pragma once

// Raw structural dumps of parsed bytecode containers.  These expose the
// decoded file contents (string pools, class listings, instruction
// streams) without any interpretation, for diffing against other tools.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace apkaudit {

struct DexMethodDump {
  int registers = 0;
  std::vector<std::pair<int, std::string>> insns;  // (addr, mnemonic)
  std::vector<std::string> strings;                // const-string operands
  struct Call {
    int addr;
    std::string owner;       // raw "Lcom/foo/Bar;" form
    std::string name;
    std::string descriptor;  // raw "(..)R" form
  };
  std::vector<Call> calls;
  struct Try {
    int start = 0;
    int count = 0;
    std::vector<std::pair<std::string, int>> handlers;  // (type, addr)
  };
  std::vector<Try> tries;
};

struct DexDump {
  std::vector<std::string> strings;      // full pool, index order
  std::vector<std::string> bad_strings;  // entries with invalid encoding
  struct Method {
    std::string name;
    std::string descriptor;
  };
  struct Class {
    std::string descriptor;               // raw form
    std::optional<std::string> superclass;
    std::vector<std::string> interfaces;
    std::vector<Method> methods;
  };
  std::vector<Class> classes;
  // Keyed "Lcom/foo/Bar;->name(..)R"; only methods with code.
  std::map<std::string, DexMethodDump> methods;
};

DexDump dump_dex(std::span<const uint8_t> data, bool verify = true);

struct ClassDump {
  std::string name;        // slash form "com/foo/Bar"
  std::string superclass;  // slash form, empty for java/lang/Object itself
  std::vector<std::string> interfaces;
  struct Method {
    std::string name;
    std::string descriptor;
    std::vector<std::string> strings;  // string constants loaded
    std::vector<std::string> calls;    // "owner.name(desc)R" slash form
  };
  std::vector<Method> methods;
};

ClassDump dump_class(std::span<const uint8_t> data);

}  // namespace apkaudit
