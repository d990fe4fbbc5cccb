#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apkaudit/errors.hpp"

namespace apkaudit {

struct IntentFilter {
  std::vector<std::string> actions;
  std::vector<std::string> categories;
  std::vector<std::string> schemes;
  std::vector<std::string> hosts;
};

struct Component {
  enum class Kind { Activity, Service, Receiver, Provider };

  Kind kind = Kind::Activity;
  std::string name;  // fully qualified
  std::optional<bool> exported_attr;
  std::string permission;
  std::vector<IntentFilter> filters;

  bool has_intent_filter() const { return !filters.empty(); }

  // Explicit attribute wins; otherwise the legacy rule applies: a component
  // with an intent filter is reachable from outside.
  bool is_exported() const {
    return exported_attr.value_or(has_intent_filter());
  }

  bool is_launcher() const {
    for (const auto& f : filters) {
      bool main = false, launcher = false;
      for (const auto& a : f.actions) {
        if (a == "android.intent.action.MAIN") main = true;
      }
      for (const auto& c : f.categories) {
        if (c == "android.intent.category.LAUNCHER") launcher = true;
      }
      if (main && launcher) return true;
    }
    return false;
  }
};

const char* to_string(Component::Kind kind);

struct ManifestModel {
  std::string package;
  std::optional<int> version_code;
  std::string version_name;
  std::vector<std::string> permissions;
  std::optional<int> min_sdk;
  std::optional<int> target_sdk;
  std::optional<bool> debuggable;
  std::optional<bool> allow_backup;
  std::optional<bool> uses_cleartext_traffic;
  bool has_network_security_config = false;
  // Resource id of the referenced network security config, when the
  // manifest is binary and the attribute is a reference value.
  std::optional<int64_t> network_security_config_ref;
  std::vector<Component> components;

  bool requests(const std::string& permission) const;
  std::vector<std::string> custom_schemes() const;  // excludes http/https
  std::vector<const Component*> exported_components() const;
};

// True when the buffer starts with a binary XML document header.
bool looks_binary_xml(std::span<const uint8_t> data);

// Throws NotAxml / TruncatedChunk / StringPoolOutOfRange.
ManifestModel parse_binary_manifest(std::span<const uint8_t> data);

// Fallback for library archives that ship their manifest as text.
// Throws XmlSyntaxError.
ManifestModel parse_plain_manifest(std::string_view text);

}  // namespace apkaudit
