#pragma once

// Converts parsed models into the frozen-dump JSON layout used by the
// fixture oracles, and canonicalizes both sides so comparisons ignore
// ordering where the format defines none (string pools, class listings,
// manifest components).

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "apkaudit/axml.hpp"
#include "apkaudit/container.hpp"
#include "apkaudit/dumps.hpp"
#include "json.hpp"

namespace testsupport {

using json = nlohmann::json;

inline std::vector<uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::string& path) {
  std::vector<uint8_t> bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline json load_json(const std::string& path) {
  return json::parse(read_text(path));
}

inline bool name_ends_with(const std::string& text,
                           const std::string& suffix) {
  return text.size() >= suffix.size() &&
         text.compare(text.size() - suffix.size(), suffix.size(), suffix) ==
             0;
}

// ------------------------------------------------------------ builders

inline json manifest_summary(const apkaudit::ManifestModel& m) {
  auto tri = [](const std::optional<bool>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json out;
  out["package"] = m.package;
  out["min_sdk"] = m.min_sdk ? json(*m.min_sdk) : json(nullptr);
  out["target_sdk"] = m.target_sdk ? json(*m.target_sdk) : json(nullptr);
  out["debuggable"] = tri(m.debuggable);
  out["allow_backup"] = tri(m.allow_backup);
  out["uses_cleartext_traffic"] = tri(m.uses_cleartext_traffic);
  if (m.network_security_config_ref) {
    out["network_security_config"] =
        json::array({"ref", *m.network_security_config_ref});
  } else {
    out["network_security_config"] = nullptr;
  }
  out["permissions"] = m.permissions;
  out["components"] = json::array();
  for (const apkaudit::Component& comp : m.components) {
    json c;
    std::string kind = apkaudit::to_string(comp.kind);
    std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char
                                                                  ch) {
      return static_cast<char>(std::tolower(ch));
    });
    c["kind"] = kind;
    c["name"] = comp.name;
    c["exported"] =
        comp.exported_attr ? json(*comp.exported_attr) : json(nullptr);
    c["permission"] =
        comp.permission.empty() ? json(nullptr) : json(comp.permission);
    std::vector<std::string> actions, categories, schemes;
    for (const apkaudit::IntentFilter& f : comp.filters) {
      actions.insert(actions.end(), f.actions.begin(), f.actions.end());
      categories.insert(categories.end(), f.categories.begin(),
                        f.categories.end());
      schemes.insert(schemes.end(), f.schemes.begin(), f.schemes.end());
    }
    c["actions"] = actions;
    c["categories"] = categories;
    c["schemes"] = schemes;
    out["components"].push_back(std::move(c));
  }
  return out;
}

// The {classes, strings} slice recorded for dex entries inside containers.
inline json dex_summary(const apkaudit::DexDump& dump) {
  json out;
  out["strings"] = dump.strings;
  out["classes"] = json::array();
  for (const apkaudit::DexDump::Class& cls : dump.classes) {
    json c;
    c["descriptor"] = cls.descriptor;
    c["superclass"] =
        cls.superclass ? json(*cls.superclass) : json(nullptr);
    c["interfaces"] = cls.interfaces;
    c["methods"] = json::array();
    for (const apkaudit::DexDump::Method& m : cls.methods) {
      c["methods"].push_back({{"name", m.name}, {"descriptor", m.descriptor}});
    }
    out["classes"].push_back(std::move(c));
  }
  return out;
}

// The full standalone .dex dump: summary plus decoded method bodies.
inline json dex_full(const apkaudit::DexDump& dump) {
  json out = dex_summary(dump);
  out["bad_strings"] = dump.bad_strings;
  out["methods"] = json::object();
  for (const auto& [key, body] : dump.methods) {
    json m;
    m["registers"] = body.registers;
    m["insns"] = json::array();
    for (const auto& [addr, mnemonic] : body.insns) {
      m["insns"].push_back(json::array({addr, mnemonic}));
    }
    m["strings"] = body.strings;
    m["calls"] = json::array();
    for (const auto& call : body.calls) {
      m["calls"].push_back(
          json::array({call.addr, call.owner, call.name, call.descriptor}));
    }
    m["tries"] = json::array();
    for (const auto& t : body.tries) {
      json handlers = json::array();
      for (const auto& [type, addr] : t.handlers) {
        handlers.push_back(json::array({type, addr}));
      }
      m["tries"].push_back(json::array({t.start, t.count, handlers}));
    }
    out["methods"][key] = std::move(m);
  }
  return out;
}

inline json class_summary(const apkaudit::ClassDump& dump) {
  json out;
  out["name"] = dump.name;
  out["superclass"] = dump.superclass;
  out["interfaces"] = dump.interfaces;
  out["methods"] = json::array();
  for (const apkaudit::ClassDump::Method& m : dump.methods) {
    json method;
    method["name"] = m.name;
    method["descriptor"] = m.descriptor;
    method["strings"] = m.strings;
    method["calls"] = m.calls;
    out["methods"].push_back(std::move(method));
  }
  return out;
}

inline json zip_summary(const apkaudit::ZipArchive& archive) {
  json entries = json::array();
  for (const apkaudit::ZipEntry& e : archive.entries()) {
    json row;
    row["name"] = e.name;
    row["crc"] = e.crc32;
    row["size"] = e.uncompressed_size;
    row["method"] = e.method == 0 ? "store" : "deflate";
    entries.push_back(std::move(row));
  }
  json out;
  out["entries"] = std::move(entries);
  return out;
}

// Walks a container the way the frozen dumps were produced: every entry
// that parses contributes a summary; entries that fail to read or parse
// are simply absent.
inline json container_summary(const std::vector<uint8_t>& bytes) {
  using apkaudit::ZipArchive;
  json out;
  out["manifests"] = json::object();
  out["dex"] = json::object();
  out["classfiles"] = json::object();

  auto add_manifest = [&](const ZipArchive& zip, const std::string& prefix) {
    if (!zip.has("AndroidManifest.xml")) return;
    try {
      std::vector<uint8_t> data = zip.read("AndroidManifest.xml");
      if (!apkaudit::looks_binary_xml(data)) return;
      out["manifests"][prefix + "AndroidManifest.xml"] =
          manifest_summary(apkaudit::parse_binary_manifest(data));
    } catch (const apkaudit::ParseError&) {
    }
  };
  auto add_dexes = [&](const ZipArchive& zip, const std::string& prefix) {
    for (const apkaudit::ZipEntry& e : zip.entries()) {
      if (!name_ends_with(e.name, ".dex") ||
          e.name.find('/') != std::string::npos) {
        continue;
      }
      try {
        out["dex"][prefix + e.name] =
            dex_summary(apkaudit::dump_dex(zip.read(e.name)));
      } catch (const apkaudit::ParseError&) {
      }
    }
  };

  ZipArchive zip = ZipArchive::from_bytes(bytes);
  bool bundle = false;
  for (const apkaudit::ZipEntry& e : zip.entries()) {
    if (name_ends_with(e.name, ".apk")) bundle = true;
  }
  if (bundle) {
    for (const apkaudit::ZipEntry& e : zip.entries()) {
      if (!name_ends_with(e.name, ".apk")) continue;
      try {
        ZipArchive sub = ZipArchive::from_bytes(zip.read(e.name));
        add_manifest(sub, e.name + "!");
        add_dexes(sub, e.name + "!");
      } catch (const apkaudit::ParseError&) {
      }
    }
  } else if (zip.has("classes.jar")) {
    add_manifest(zip, "");
    try {
      ZipArchive jar = ZipArchive::from_bytes(zip.read("classes.jar"));
      for (const apkaudit::ZipEntry& e : jar.entries()) {
        if (!name_ends_with(e.name, ".class")) continue;
        try {
          out["classfiles"]["classes.jar!" + e.name] =
              class_summary(apkaudit::dump_class(jar.read(e.name)));
        } catch (const apkaudit::ParseError&) {
        }
      }
    } catch (const apkaudit::ParseError&) {
    }
  } else {
    add_manifest(zip, "");
    add_dexes(zip, "");
  }
  return out;
}

// ------------------------------------------------------------ canonical

inline void sort_string_array(json& arr) {
  std::vector<std::string> items = arr.get<std::vector<std::string>>();
  std::sort(items.begin(), items.end());
  arr = items;
}

inline void sort_by_dump(json& arr) {
  std::vector<json> items(arr.begin(), arr.end());
  std::sort(items.begin(), items.end(),
            [](const json& a, const json& b) { return a.dump() < b.dump(); });
  arr = items;
}

inline void canonicalize_manifest(json& m) {
  if (m.contains("permissions")) sort_string_array(m["permissions"]);
  if (m.contains("components")) {
    for (json& comp : m["components"]) {
      for (const char* key : {"actions", "categories", "schemes"}) {
        if (comp.contains(key)) sort_string_array(comp[key]);
      }
    }
    sort_by_dump(m["components"]);
  }
}

inline void canonicalize_dex(json& d) {
  if (d.contains("strings")) sort_string_array(d["strings"]);
  if (d.contains("bad_strings")) sort_string_array(d["bad_strings"]);
  if (d.contains("classes")) {
    for (json& cls : d["classes"]) {
      if (cls.contains("interfaces")) sort_string_array(cls["interfaces"]);
      if (cls.contains("methods")) sort_by_dump(cls["methods"]);
    }
    sort_by_dump(d["classes"]);
  }
  // method bodies keep instruction/call order: it is defined by the code
}

inline void canonicalize_class(json& c) {
  if (c.contains("interfaces")) sort_string_array(c["interfaces"]);
  if (c.contains("methods")) sort_by_dump(c["methods"]);
}

inline void canonicalize_zip(json& z) {
  if (z.contains("entries")) sort_by_dump(z["entries"]);
}

inline void canonicalize_container(json& c) {
  if (c.contains("manifests")) {
    for (auto& [_, m] : c["manifests"].items()) canonicalize_manifest(m);
  }
  if (c.contains("dex")) {
    for (auto& [_, d] : c["dex"].items()) canonicalize_dex(d);
  }
  if (c.contains("classfiles")) {
    for (auto& [_, f] : c["classfiles"].items()) canonicalize_class(f);
  }
}

// Dispatches on the fixture file name; both the freshly computed summary
// and the frozen oracle go through this before comparison.
inline json canonical_for(const std::string& fixture_name, json value) {
  if (name_ends_with(fixture_name, ".dex")) {
    canonicalize_dex(value);
  } else if (name_ends_with(fixture_name, ".class")) {
    canonicalize_class(value);
  } else if (name_ends_with(fixture_name, ".axml") ||
             name_ends_with(fixture_name, ".xml")) {
    canonicalize_manifest(value);
  } else if (name_ends_with(fixture_name, ".zip")) {
    canonicalize_zip(value);
  } else {
    canonicalize_container(value);
  }
  return value;
}

// Fresh summary of a fixture file, shaped like its oracle.
inline json summarize_fixture(const std::string& fixture_name,
                              const std::vector<uint8_t>& bytes) {
  if (name_ends_with(fixture_name, ".dex")) {
    return dex_full(apkaudit::dump_dex(bytes));
  }
  if (name_ends_with(fixture_name, ".class")) {
    return class_summary(apkaudit::dump_class(bytes));
  }
  if (name_ends_with(fixture_name, ".axml")) {
    return manifest_summary(apkaudit::parse_binary_manifest(bytes));
  }
  if (name_ends_with(fixture_name, ".xml")) {
    return manifest_summary(apkaudit::parse_plain_manifest(
        std::string(bytes.begin(), bytes.end())));
  }
  if (name_ends_with(fixture_name, ".zip")) {
    return zip_summary(apkaudit::ZipArchive::from_bytes(bytes));
  }
  return container_summary(bytes);
}

}  // namespace testsupport
