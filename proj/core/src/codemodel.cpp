#include "apkaudit/bytecode.hpp"

namespace apkaudit {

void CodeModel::merge(CodeModel&& other) {
  for (auto& c : other.classes) classes.push_back(std::move(c));
  for (auto& s : other.string_pool) string_pool.push_back(std::move(s));
  for (auto& n : other.notes) notes.push_back(std::move(n));
}

bool CodeModel::uses_api_prefix(const std::string& prefix) const {
  for (const auto& cls : classes) {
    for (const auto& m : cls.methods) {
      for (const auto& call : m.calls) {
        if (call.callee.owner.rfind(prefix, 0) == 0) return true;
      }
    }
  }
  return false;
}

}  // namespace apkaudit
