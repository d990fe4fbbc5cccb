#include "apkaudit/axml.hpp"

#include <algorithm>
#include <cctype>

#include "apkaudit/bytes.hpp"

namespace apkaudit {

namespace {

// ------------------------------------------------------------------ model
struct Attr {
  enum class Type { Str, Int, Bool, Ref };
  std::string name;   // local name, prefix stripped
  uint32_t res_id = 0;
  Type type = Type::Str;
  std::string s;
  int64_t i = 0;
  bool b = false;
};

struct Elem {
  std::string name;
  std::vector<Attr> attrs;
  std::vector<Elem> children;
};

// Android public attribute resource ids used in manifests.
constexpr uint32_t kResName = 0x01010003;
constexpr uint32_t kResPermission = 0x01010006;
constexpr uint32_t kResDebuggable = 0x0101000F;
constexpr uint32_t kResExported = 0x01010010;
constexpr uint32_t kResScheme = 0x01010027;
constexpr uint32_t kResHost = 0x01010028;
constexpr uint32_t kResVersionCode = 0x0101021B;
constexpr uint32_t kResVersionName = 0x0101021C;
constexpr uint32_t kResMinSdk = 0x0101020C;
constexpr uint32_t kResTargetSdk = 0x01010270;
constexpr uint32_t kResAllowBackup = 0x01010280;
constexpr uint32_t kResCleartext = 0x010104EC;
constexpr uint32_t kResNetworkSecurityConfig = 0x01010527;

const Attr* find_attr(const Elem& e, const char* name, uint32_t res_id) {
  if (res_id) {
    for (const auto& a : e.attrs) {
      if (a.res_id == res_id) return &a;
    }
  }
  for (const auto& a : e.attrs) {
    if (a.res_id == 0 && a.name == name) return &a;
  }
  return nullptr;
}

std::optional<std::string> attr_str(const Elem& e, const char* name,
                                    uint32_t res_id = 0) {
  const Attr* a = find_attr(e, name, res_id);
  if (!a) return std::nullopt;
  switch (a->type) {
    case Attr::Type::Str: return a->s;
    case Attr::Type::Int: return std::to_string(a->i);
    case Attr::Type::Bool: return a->b ? "true" : "false";
    case Attr::Type::Ref: return "@0x" + [&] {
      char buf[16];
      snprintf(buf, sizeof buf, "%08x", static_cast<uint32_t>(a->i));
      return std::string(buf);
    }();
  }
  return std::nullopt;
}

std::optional<bool> attr_bool(const Elem& e, const char* name,
                              uint32_t res_id = 0) {
  const Attr* a = find_attr(e, name, res_id);
  if (!a) return std::nullopt;
  if (a->type == Attr::Type::Bool) return a->b;
  if (a->type == Attr::Type::Int) return a->i != 0;
  if (a->type == Attr::Type::Str) {
    if (a->s == "true") return true;
    if (a->s == "false") return false;
  }
  return std::nullopt;
}

std::optional<int> attr_int(const Elem& e, const char* name,
                            uint32_t res_id = 0) {
  const Attr* a = find_attr(e, name, res_id);
  if (!a) return std::nullopt;
  if (a->type == Attr::Type::Int) return static_cast<int>(a->i);
  if (a->type == Attr::Type::Str) {
    try {
      return std::stoi(a->s);
    } catch (...) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// --------------------------------------------------------- binary parsing
constexpr uint16_t kChunkXml = 0x0003;
constexpr uint16_t kChunkStringPool = 0x0001;
constexpr uint16_t kChunkResourceMap = 0x0180;
constexpr uint16_t kChunkNsStart = 0x0100;
constexpr uint16_t kChunkNsEnd = 0x0101;
constexpr uint16_t kChunkElemStart = 0x0102;
constexpr uint16_t kChunkElemEnd = 0x0103;
constexpr uint16_t kChunkCdata = 0x0104;

constexpr uint8_t kTypeReference = 0x01;
constexpr uint8_t kTypeString = 0x03;
constexpr uint8_t kTypeIntDec = 0x10;
constexpr uint8_t kTypeIntHex = 0x11;
constexpr uint8_t kTypeBool = 0x12;

void append_utf8(std::string& out, uint32_t cp) {
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
}

struct StringPool {
  std::vector<std::string> strings;

  const std::string& at(uint32_t idx) const {
    if (idx >= strings.size()) {
      throw ParseError(ErrorKind::StringPoolOutOfRange,
                       "string index " + std::to_string(idx) + " of " +
                           std::to_string(strings.size()));
    }
    return strings[idx];
  }
};

StringPool parse_string_pool(std::span<const uint8_t> chunk) {
  ByteReader r(chunk, ErrorKind::TruncatedChunk);
  r.seek(2);  // type already checked
  uint16_t header_size = r.u16le();
  r.skip(4);  // chunk size
  uint32_t count = r.u32le();
  r.skip(4);  // style count
  uint32_t flags = r.u32le();
  uint32_t strings_start = r.u32le();
  r.skip(4);  // styles start
  bool utf8 = (flags & 0x100) != 0;
  if (count > chunk.size()) {
    throw ParseError(ErrorKind::TruncatedChunk, "string pool count");
  }

  StringPool pool;
  pool.strings.reserve(count);
  ByteReader offsets(chunk, ErrorKind::TruncatedChunk);
  offsets.seek(header_size);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t off = offsets.u32le();
    size_t p = static_cast<size_t>(strings_start) + off;
    ByteReader s(chunk, ErrorKind::StringPoolOutOfRange);
    s.seek(p);
    std::string value;
    if (utf8) {
      uint32_t u16len = s.u8();
      if (u16len & 0x80) u16len = ((u16len & 0x7F) << 8) | s.u8();
      uint32_t bytelen = s.u8();
      if (bytelen & 0x80) bytelen = ((bytelen & 0x7F) << 8) | s.u8();
      auto bytes = s.bytes(bytelen);
      value.assign(bytes.begin(), bytes.end());
    } else {
      uint32_t len = s.u16le();
      if (len & 0x8000) len = ((len & 0x7FFF) << 16) | s.u16le();
      value.reserve(len);
      for (uint32_t j = 0; j < len; ++j) {
        uint32_t unit = s.u16le();
        if (unit >= 0xD800 && unit <= 0xDBFF && j + 1 < len) {
          uint32_t low = s.u16le();
          ++j;
          if (low >= 0xDC00 && low <= 0xDFFF) {
            append_utf8(value,
                        0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00));
            continue;
          }
          append_utf8(value, 0xFFFD);
          append_utf8(value, 0xFFFD);
          continue;
        }
        append_utf8(value, unit);
      }
    }
    pool.strings.push_back(std::move(value));
  }
  return pool;
}

Elem parse_binary_tree(std::span<const uint8_t> data) {
  if (!looks_binary_xml(data)) {
    throw ParseError(ErrorKind::NotAxml, "missing binary xml header");
  }
  ByteReader r(data, ErrorKind::TruncatedChunk);
  r.seek(2);
  r.skip(2);  // header size
  uint32_t file_size = r.u32le();
  size_t end = std::min<size_t>(file_size, data.size());

  StringPool pool;
  std::vector<uint32_t> res_map;
  Elem root;
  std::vector<Elem*> stack;
  bool has_pool = false;

  size_t off = 8;
  while (off + 8 <= end) {
    ByteReader c(data, ErrorKind::TruncatedChunk);
    c.seek(off);
    uint16_t type = c.u16le();
    uint16_t header_size = c.u16le();
    uint32_t size = c.u32le();
    if (size < 8 || off + size > end || header_size > size) {
      throw ParseError(ErrorKind::TruncatedChunk,
                       "chunk overruns document at offset " +
                           std::to_string(off));
    }
    auto chunk = data.subspan(off, size);

    switch (type) {
      case kChunkStringPool:
        pool = parse_string_pool(chunk);
        has_pool = true;
        break;
      case kChunkResourceMap: {
        ByteReader m(chunk, ErrorKind::TruncatedChunk);
        m.seek(header_size);
        while (m.remaining() >= 4) res_map.push_back(m.u32le());
        break;
      }
      case kChunkElemStart: {
        if (!has_pool) {
          throw ParseError(ErrorKind::NotAxml, "element before string pool");
        }
        ByteReader e(chunk, ErrorKind::TruncatedChunk);
        e.seek(header_size);  // skip node header (line number, comment)
        e.skip(4);            // namespace
        uint32_t name_idx = e.u32le();
        uint16_t attr_start = e.u16le();
        uint16_t attr_size = e.u16le();
        uint16_t attr_count = e.u16le();
        if (attr_size < 20) {
          throw ParseError(ErrorKind::TruncatedChunk, "attribute size");
        }
        Elem elem;
        elem.name = pool.at(name_idx);
        size_t base = static_cast<size_t>(header_size) + attr_start;
        for (uint16_t i = 0; i < attr_count; ++i) {
          ByteReader a(chunk, ErrorKind::TruncatedChunk);
          a.seek(base + static_cast<size_t>(i) * attr_size);
          a.skip(4);  // namespace
          uint32_t aname = a.u32le();
          uint32_t raw_value = a.u32le();
          a.skip(2 + 1);  // value size, res0
          uint8_t dtype = a.u8();
          uint32_t word = a.u32le();
          Attr attr;
          attr.name = pool.at(aname);
          attr.res_id = aname < res_map.size() ? res_map[aname] : 0;
          switch (dtype) {
            case kTypeString:
              attr.type = Attr::Type::Str;
              attr.s = pool.at(word != 0xFFFFFFFF ? word : raw_value);
              break;
            case kTypeBool:
              attr.type = Attr::Type::Bool;
              attr.b = word != 0;
              break;
            case kTypeIntDec:
            case kTypeIntHex:
              attr.type = Attr::Type::Int;
              attr.i = static_cast<int32_t>(word);
              break;
            case kTypeReference:
              attr.type = Attr::Type::Ref;
              attr.i = word;
              break;
            default:
              attr.type = Attr::Type::Int;
              attr.i = word;
              break;
          }
          elem.attrs.push_back(std::move(attr));
        }
        Elem* parent = stack.empty() ? nullptr : stack.back();
        if (!parent) {
          root = std::move(elem);
          stack.push_back(&root);
        } else {
          parent->children.push_back(std::move(elem));
          stack.push_back(&parent->children.back());
        }
        break;
      }
      case kChunkElemEnd:
        if (!stack.empty()) stack.pop_back();
        break;
      case kChunkNsStart:
      case kChunkNsEnd:
      case kChunkCdata:
        break;  // tolerated, nothing to extract
      default:
        break;  // unknown chunk types are skipped by size
    }
    off += size;
  }
  if (root.name.empty()) {
    throw ParseError(ErrorKind::NotAxml, "no root element");
  }
  return root;
}

// ---------------------------------------------------------- plain parsing
std::string decode_entities(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (size_t i = 0; i < in.size(); ++i) {
    if (in[i] != '&') {
      out.push_back(in[i]);
      continue;
    }
    auto rest = in.substr(i);
    auto take = [&](std::string_view ent, char ch) {
      if (rest.rfind(ent, 0) == 0) {
        out.push_back(ch);
        i += ent.size() - 1;
        return true;
      }
      return false;
    };
    if (take("&amp;", '&') || take("&lt;", '<') || take("&gt;", '>') ||
        take("&quot;", '"') || take("&apos;", '\'')) {
      continue;
    }
    out.push_back('&');
  }
  return out;
}

struct PlainParser {
  std::string_view text;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) {
    throw ParseError(ErrorKind::XmlSyntaxError,
                     what + " near offset " + std::to_string(pos));
  }

  void skip_ws() {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
  }

  bool starts_with(std::string_view s) const {
    return text.substr(pos, s.size()) == s;
  }

  std::string read_name() {
    size_t start = pos;
    while (pos < text.size()) {
      char c = text[pos];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '-' || c == '.' || c == ':') {
        ++pos;
      } else {
        break;
      }
    }
    if (pos == start) fail("expected a name");
    return std::string(text.substr(start, pos - start));
  }

  Elem parse_document() {
    std::vector<Elem> roots;
    std::vector<Elem*> stack;
    while (pos < text.size()) {
      size_t lt = text.find('<', pos);
      if (lt == std::string_view::npos) break;
      pos = lt;
      if (starts_with("<?")) {
        size_t close = text.find("?>", pos);
        if (close == std::string_view::npos) fail("unterminated declaration");
        pos = close + 2;
        continue;
      }
      if (starts_with("<!--")) {
        size_t close = text.find("-->", pos);
        if (close == std::string_view::npos) fail("unterminated comment");
        pos = close + 3;
        continue;
      }
      if (starts_with("<!")) {
        size_t close = text.find('>', pos);
        if (close == std::string_view::npos) fail("unterminated directive");
        pos = close + 1;
        continue;
      }
      if (starts_with("</")) {
        pos += 2;
        read_name();
        skip_ws();
        if (pos >= text.size() || text[pos] != '>') fail("bad closing tag");
        ++pos;
        if (!stack.empty()) stack.pop_back();
        continue;
      }
      ++pos;  // consume '<'
      Elem elem;
      elem.name = read_name();
      bool self_closing = false;
      while (true) {
        skip_ws();
        if (pos >= text.size()) fail("unterminated tag");
        if (text[pos] == '>') {
          ++pos;
          break;
        }
        if (starts_with("/>")) {
          pos += 2;
          self_closing = true;
          break;
        }
        Attr attr;
        std::string qualified = read_name();
        // Drop the namespace prefix; manifests only use one.
        size_t colon = qualified.find(':');
        attr.name = colon == std::string::npos ? qualified
                                               : qualified.substr(colon + 1);
        bool is_xmlns = qualified.rfind("xmlns", 0) == 0;
        skip_ws();
        if (pos >= text.size() || text[pos] != '=') fail("expected '='");
        ++pos;
        skip_ws();
        if (pos >= text.size() || (text[pos] != '"' && text[pos] != '\'')) {
          fail("expected a quoted value");
        }
        char quote = text[pos++];
        size_t vend = text.find(quote, pos);
        if (vend == std::string_view::npos) fail("unterminated value");
        attr.type = Attr::Type::Str;
        attr.s = decode_entities(text.substr(pos, vend - pos));
        pos = vend + 1;
        if (!is_xmlns) elem.attrs.push_back(std::move(attr));
      }
      Elem* parent = stack.empty() ? nullptr : stack.back();
      if (!parent) {
        roots.push_back(std::move(elem));
        if (!self_closing) stack.push_back(&roots.back());
      } else {
        parent->children.push_back(std::move(elem));
        if (!self_closing) stack.push_back(&parent->children.back());
      }
    }
    for (const auto& r : roots) {
      if (r.name == "manifest") return r;
    }
    throw ParseError(ErrorKind::XmlSyntaxError, "no manifest root element");
  }
};

// ------------------------------------------------------------- extraction
std::string expand_component_name(const std::string& pkg,
                                  const std::string& name) {
  if (name.empty()) return name;
  if (name.front() == '.') return pkg + name;
  if (name.find('.') == std::string::npos) return pkg + "." + name;
  return name;
}

void collect_component(const Elem& e, Component::Kind kind,
                       ManifestModel& model) {
  Component comp;
  comp.kind = kind;
  comp.name = expand_component_name(
      model.package, attr_str(e, "name", kResName).value_or(""));
  comp.exported_attr = attr_bool(e, "exported", kResExported);
  comp.permission = attr_str(e, "permission", kResPermission).value_or("");
  for (const auto& child : e.children) {
    if (child.name != "intent-filter") continue;
    IntentFilter filter;
    for (const auto& part : child.children) {
      if (part.name == "action") {
        if (auto v = attr_str(part, "name", kResName)) {
          filter.actions.push_back(*v);
        }
      } else if (part.name == "category") {
        if (auto v = attr_str(part, "name", kResName)) {
          filter.categories.push_back(*v);
        }
      } else if (part.name == "data") {
        if (auto v = attr_str(part, "scheme", kResScheme)) {
          filter.schemes.push_back(*v);
        }
        if (auto v = attr_str(part, "host", kResHost)) {
          filter.hosts.push_back(*v);
        }
      }
    }
    comp.filters.push_back(std::move(filter));
  }
  model.components.push_back(std::move(comp));
}

ManifestModel extract(const Elem& root) {
  ManifestModel model;
  model.package = attr_str(root, "package").value_or("");
  model.version_code = attr_int(root, "versionCode", kResVersionCode);
  model.version_name =
      attr_str(root, "versionName", kResVersionName).value_or("");

  for (const auto& child : root.children) {
    if (child.name == "uses-permission") {
      if (auto v = attr_str(child, "name", kResName)) {
        model.permissions.push_back(*v);
      }
    } else if (child.name == "uses-sdk") {
      model.min_sdk = attr_int(child, "minSdkVersion", kResMinSdk);
      model.target_sdk = attr_int(child, "targetSdkVersion", kResTargetSdk);
    } else if (child.name == "application") {
      model.debuggable = attr_bool(child, "debuggable", kResDebuggable);
      model.allow_backup = attr_bool(child, "allowBackup", kResAllowBackup);
      model.uses_cleartext_traffic =
          attr_bool(child, "usesCleartextTraffic", kResCleartext);
      if (const Attr* nsc = find_attr(child, "networkSecurityConfig",
                                      kResNetworkSecurityConfig)) {
        model.has_network_security_config = true;
        if (nsc->type == Attr::Type::Ref) {
          model.network_security_config_ref = nsc->i;
        }
      }
      for (const auto& comp : child.children) {
        if (comp.name == "activity") {
          collect_component(comp, Component::Kind::Activity, model);
        } else if (comp.name == "service") {
          collect_component(comp, Component::Kind::Service, model);
        } else if (comp.name == "receiver") {
          collect_component(comp, Component::Kind::Receiver, model);
        } else if (comp.name == "provider") {
          collect_component(comp, Component::Kind::Provider, model);
        }
      }
    }
  }
  return model;
}

}  // namespace

const char* to_string(Component::Kind kind) {
  switch (kind) {
    case Component::Kind::Activity: return "activity";
    case Component::Kind::Service: return "service";
    case Component::Kind::Receiver: return "receiver";
    case Component::Kind::Provider: return "provider";
  }
  return "component";
}

bool ManifestModel::requests(const std::string& permission) const {
  return std::find(permissions.begin(), permissions.end(), permission) !=
         permissions.end();
}

std::vector<std::string> ManifestModel::custom_schemes() const {
  std::vector<std::string> out;
  for (const auto& c : components) {
    for (const auto& f : c.filters) {
      for (const auto& s : f.schemes) {
        if (s == "http" || s == "https") continue;
        if (std::find(out.begin(), out.end(), s) == out.end()) {
          out.push_back(s);
        }
      }
    }
  }
  return out;
}

std::vector<const Component*> ManifestModel::exported_components() const {
  std::vector<const Component*> out;
  for (const auto& c : components) {
    if (c.is_exported()) out.push_back(&c);
  }
  return out;
}

bool looks_binary_xml(std::span<const uint8_t> data) {
  return data.size() >= 8 && data[0] == 0x03 && data[1] == 0x00 &&
         data[2] == 0x08 && data[3] == 0x00;
}

ManifestModel parse_binary_manifest(std::span<const uint8_t> data) {
  Elem root = parse_binary_tree(data);
  if (root.name != "manifest") {
    throw ParseError(ErrorKind::NotAxml, "root element is " + root.name);
  }
  return extract(root);
}

ManifestModel parse_plain_manifest(std::string_view text) {
  PlainParser parser{text};
  return extract(parser.parse_document());
}

}  // namespace apkaudit
