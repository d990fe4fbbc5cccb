#include "apkaudit/checks.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <exception>
#include <functional>
#include <string_view>

namespace apkaudit {
namespace {

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string to_upper(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::toupper(c));
  });
  return out;
}

bool starts_with(std::string_view text, std::string_view prefix) {
  return text.size() >= prefix.size() &&
         text.compare(0, prefix.size(), prefix) == 0;
}

std::string_view simple_name(std::string_view dotted) {
  size_t dot = dotted.rfind('.');
  return dot == std::string_view::npos ? dotted : dotted.substr(dot + 1);
}

// Parameter type tokens of a JVM method descriptor, e.g.
// "([BLjava/lang/String;I)V" -> {"[B", "Ljava/lang/String;", "I"}.
std::vector<std::string> param_types(const std::string& descriptor) {
  std::vector<std::string> out;
  size_t i = descriptor.find('(');
  if (i == std::string::npos) return out;
  ++i;
  while (i < descriptor.size() && descriptor[i] != ')') {
    size_t start = i;
    while (i < descriptor.size() && descriptor[i] == '[') ++i;
    if (i >= descriptor.size()) break;
    if (descriptor[i] == 'L') {
      size_t end = descriptor.find(';', i);
      if (end == std::string::npos) break;
      i = end + 1;
    } else {
      ++i;
    }
    out.push_back(descriptor.substr(start, i - start));
  }
  return out;
}

bool is_wide_type(const std::string& type) {
  return type == "J" || type == "D";
}

// Resolved argument for formal parameter `index`, skipping the receiver
// and tolerating both one-slot-per-parameter argument lists (JVM path)
// and register lists where wide parameters occupy two slots (DEX path).
const ResolvedValue* param(const CallSite& call, size_t index) {
  std::vector<std::string> types = param_types(call.callee.descriptor);
  if (index >= types.size()) return nullptr;
  size_t base = call.is_static ? 0 : 1;
  size_t flat = base + types.size();
  bool any_wide = std::any_of(types.begin(), types.end(), is_wide_type);
  if (!any_wide || call.args.size() == flat) {
    size_t at = base + index;
    return at < call.args.size() ? &call.args[at] : nullptr;
  }
  size_t slot = base;
  for (size_t k = 0; k < index; ++k) slot += is_wide_type(types[k]) ? 2 : 1;
  return slot < call.args.size() ? &call.args[slot] : nullptr;
}

size_t param_count(const CallSite& call) {
  return param_types(call.callee.descriptor).size();
}

// ------------------------------------------------------------ context

struct Site {
  const ClassModel* cls;
  const MethodModel* method;
  const CallSite* call;
};

struct ConstSite {
  const ClassModel* cls;
  const MethodModel* method;
  const std::string* value;
};

std::string location_of(const ClassModel& cls, const MethodModel& method) {
  return cls.descriptor + "." + method.name;
}

struct Ctx {
  const ManifestModel& manifest;
  const CodeModel* code;
  const CheckConfig& cfg;

  std::vector<Site> calls;
  std::vector<ConstSite> consts;
  bool lexicon_present = false;
  bool obfuscated = false;

  Ctx(const ManifestModel& m, const CodeModel* c, const CheckConfig& cf)
      : manifest(m), code(c), cfg(cf) {
    if (!code) return;
    for (const auto& cls : code->classes) {
      for (const auto& method : cls.methods) {
        for (const auto& call : method.calls) {
          calls.push_back({&cls, &method, &call});
        }
        for (const auto& value : method.const_strings) {
          consts.push_back({&cls, &method, &value});
          if (cfg.lexicon_match(value)) lexicon_present = true;
        }
      }
    }
    if (code->classes.size() >= 3) {
      size_t shorties = 0;
      for (const auto& cls : code->classes) {
        if (simple_name(cls.descriptor).size() <= 1) ++shorties;
      }
      obfuscated = shorties * 2 >= code->classes.size();
    }
  }

  bool has_code() const { return code != nullptr; }

  std::string loc(const Site& site) const {
    return location_of(*site.cls, *site.method);
  }
  std::string loc(const ConstSite& site) const {
    return location_of(*site.cls, *site.method);
  }

  bool any_call(const std::function<bool(const CallSite&)>& pred) const {
    return std::any_of(calls.begin(), calls.end(),
                       [&](const Site& s) { return pred(*s.call); });
  }

  bool any_owner_prefix(std::string_view prefix) const {
    return any_call([&](const CallSite& c) {
      return starts_with(c.callee.owner, prefix);
    });
  }

  bool any_call_named(std::string_view name) const {
    return any_call([&](const CallSite& c) { return c.callee.name == name; });
  }
};

// ------------------------------------------------------------ values

bool known_lex(const CheckConfig& cfg, const ResolvedValue& v) {
  return v.is_known_str() && cfg.lexicon_match(v.str);
}

// A value statically derived from constant material: a string constant,
// a constant-initialised array, or the result of a known derivation call
// (String.getBytes / toCharArray / Base64 decode) on a string constant.
bool derived_from_constant(const ResolvedValue& v, std::string* what) {
  switch (v.kind) {
    case ResolvedValue::Kind::Str:
      if (what) *what = "\"" + v.str + "\"";
      return true;
    case ResolvedValue::Kind::FilledArray:
      if (what) *what = "constant-initialised array";
      return true;
    case ResolvedValue::Kind::Result: {
      if (!v.result) return false;
      const MethodRef& callee = v.result->callee;
      bool derive = callee.name == "getBytes" || callee.name == "toCharArray";
      bool b64 = callee.name == "decode" &&
                 (callee.owner == "android.util.Base64" ||
                  starts_with(callee.owner, "java.util.Base64"));
      if (!derive && !b64) return false;
      for (const auto& arg : v.result->args) {
        if (arg.is_known_str()) {
          if (what) *what = callee.name + "(\"" + arg.str + "\")";
          return true;
        }
      }
      return false;
    }
    default:
      return false;
  }
}

// True when the derivation chain of `v` bottoms out in a lexicon match.
bool lex_material(const CheckConfig& cfg, const ResolvedValue& v) {
  if (known_lex(cfg, v)) return true;
  if (v.kind == ResolvedValue::Kind::Result && v.result) {
    const MethodRef& callee = v.result->callee;
    if (callee.name == "getBytes" || callee.name == "toCharArray") {
      for (const auto& arg : v.result->args) {
        if (known_lex(cfg, arg)) return true;
      }
    }
  }
  return false;
}

// ------------------------------------------------------------ API tables

bool is_preference_write(const CallSite& c) {
  return c.callee.owner.find("SharedPreferences") != std::string::npos &&
         (c.callee.name == "putString" || c.callee.name == "putStringSet");
}

bool is_plain_file_write(const CallSite& c) {
  return c.callee.name == "write" &&
         (c.callee.owner == "java.io.FileOutputStream" ||
          c.callee.owner == "java.io.FileWriter" ||
          c.callee.owner == "java.io.OutputStreamWriter");
}

bool is_log_call(const CallSite& c) {
  if (c.callee.owner != "android.util.Log") return false;
  static const std::array<std::string_view, 6> levels = {"v", "d", "i",
                                                         "w", "e", "wtf"};
  return std::find(levels.begin(), levels.end(), c.callee.name) !=
         levels.end();
}

bool is_platform_namespace(const std::string& owner) {
  static const std::array<std::string_view, 11> prefixes = {
      "android.",  "androidx.", "java.",     "javax.",
      "kotlin.",   "kotlinx.",  "dalvik.",   "com.android.",
      "org.json.", "org.w3c.",  "org.xml.",
  };
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](std::string_view p) { return starts_with(owner, p); });
}

bool is_app_namespace(const std::string& owner, const std::string& package) {
  if (package.empty()) return false;
  return owner == package || starts_with(owner, package + ".");
}

bool is_text_input_widget(const CallSite& c) {
  return c.callee.owner == "android.widget.EditText" ||
         c.callee.owner == "android.widget.AutoCompleteTextView";
}

bool is_input_type_config(const CallSite& c) {
  return c.callee.name == "setInputType" ||
         c.callee.name == "setRawInputType";
}

bool is_ipc_payload_write(const CallSite& c) {
  if (c.callee.owner == "android.content.Intent" &&
      starts_with(c.callee.name, "putExtra")) {
    return true;
  }
  return c.callee.owner == "android.os.Bundle" &&
         starts_with(c.callee.name, "put");
}

bool is_ui_text_set(const CallSite& c) {
  return (c.callee.owner == "android.widget.TextView" &&
          c.callee.name == "setText") ||
         (c.callee.owner == "android.widget.Toast" &&
          c.callee.name == "makeText");
}

bool is_window_api(const CallSite& c) {
  return c.callee.owner == "android.view.Window" ||
         c.callee.name == "getWindow";
}

bool is_window_flag_set(const CallSite& c) {
  return c.callee.owner == "android.view.Window" &&
         (c.callee.name == "addFlags" || c.callee.name == "setFlags");
}

bool is_biometric_api(const CallSite& c) {
  return starts_with(c.callee.owner, "android.hardware.biometrics.") ||
         starts_with(c.callee.owner, "androidx.biometric.") ||
         starts_with(c.callee.owner, "android.hardware.fingerprint.");
}

bool is_device_credential_gate(const CallSite& c) {
  return c.callee.owner == "android.app.KeyguardManager" &&
         (c.callee.name == "isDeviceSecure" ||
          c.callee.name == "isKeyguardSecure" ||
          c.callee.name == "createConfirmDeviceCredentialIntent");
}

bool is_persistence_sink(const CallSite& c) {
  if (c.callee.owner == "android.database.sqlite.SQLiteDatabase") {
    static const std::array<std::string_view, 8> ops = {
        "execSQL", "insert",  "insertOrThrow", "insertWithOnConflict",
        "update",  "replace", "replaceOrThrow", "updateWithOnConflict"};
    return std::find(ops.begin(), ops.end(), c.callee.name) != ops.end();
  }
  if (c.callee.name == "openFileOutput") return true;
  if (c.callee.owner == "java.io.FileOutputStream" &&
      c.callee.name == "write") {
    return true;
  }
  return c.callee.owner == "java.io.ObjectOutputStream" &&
         starts_with(c.callee.name, "write");
}

bool is_crypto_api(const CallSite& c) {
  return starts_with(c.callee.owner, "javax.crypto.") ||
         starts_with(c.callee.owner, "android.security.keystore.") ||
         c.callee.owner == "java.security.MessageDigest" ||
         c.callee.owner == "java.security.KeyStore" ||
         c.callee.owner == "java.security.Signature";
}

bool is_key_material_ctor(const CallSite& c) {
  if (c.callee.name != "<init>") return false;
  return c.callee.owner == "javax.crypto.spec.SecretKeySpec" ||
         c.callee.owner == "javax.crypto.spec.IvParameterSpec" ||
         c.callee.owner == "javax.crypto.spec.PBEKeySpec";
}

bool is_rng_sink_ctor(const CallSite& c) {
  if (c.callee.name != "<init>") return false;
  return c.callee.owner == "javax.crypto.spec.SecretKeySpec" ||
         c.callee.owner == "javax.crypto.spec.IvParameterSpec" ||
         c.callee.owner == "javax.crypto.spec.PBEKeySpec" ||
         c.callee.owner == "javax.crypto.spec.GCMParameterSpec";
}

bool is_weak_rng(const MethodRef& ref) {
  return ref.owner == "java.util.Random" ||
         (ref.owner == "java.lang.Math" && ref.name == "random");
}

bool is_networking_call(const CallSite& c) {
  static const std::array<std::string_view, 5> owners = {
      "java.net.URL", "java.net.URLConnection", "java.net.HttpURLConnection",
      "java.net.HttpsURLConnection", "java.net.Socket"};
  if (std::find(owners.begin(), owners.end(), c.callee.owner) != owners.end())
    return true;
  return starts_with(c.callee.owner, "javax.net.ssl.") ||
         starts_with(c.callee.owner, "okhttp3.") ||
         starts_with(c.callee.owner, "org.apache.http.");
}

bool is_webview_call(const CallSite& c) {
  return starts_with(c.callee.owner, "android.webkit.");
}

bool is_intent_data_read(const CallSite& c) {
  if (c.callee.owner == "android.content.Intent" &&
      (c.callee.name == "getData" || c.callee.name == "getDataString")) {
    return true;
  }
  return c.callee.owner == "android.net.Uri" &&
         (c.callee.name == "getQueryParameter" ||
          c.callee.name == "getQuery" || c.callee.name == "getEncodedQuery");
}

constexpr int64_t kFlagSecure = 0x2000;

// ------------------------------------------------------------ findings

void violate(Finding& f, std::string location, std::string reason) {
  f.verdict.state = VerdictState::Violation;
  f.evidence.push_back({std::move(location), std::move(reason)});
}

void not_applicable(Finding& f, std::string why) {
  f.verdict.state = VerdictState::NotApplicable;
  f.note = std::move(why);
}

void unverifiable(Finding& f, std::string why) {
  f.verdict.state = VerdictState::Unverifiable;
  f.note = std::move(why);
}

// ------------------------------------------------------------ checks

void check_ds1(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code() || !ctx.lexicon_present) {
    not_applicable(f, "no credential-suggestive string constants in code");
    return;
  }
  bool keystore = ctx.any_call([](const CallSite& c) {
    if (c.callee.owner != "java.security.KeyStore" ||
        c.callee.name != "getInstance") {
      return false;
    }
    const ResolvedValue* p = param(c, 0);
    return p && p->is_known_str() && p->str == "AndroidKeyStore";
  });
  for (const Site& s : ctx.calls) {
    if (!is_preference_write(*s.call) && !is_plain_file_write(*s.call)) {
      continue;
    }
    for (size_t i = 0; i < param_count(*s.call); ++i) {
      const ResolvedValue* p = param(*s.call, i);
      if (p && lex_material(ctx.cfg, *p) && !keystore) {
        violate(f, ctx.loc(s),
                "credential-suggestive constant reaches " +
                    s.call->callee.owner + "." + s.call->callee.name +
                    " with no Android Keystore usage");
        break;
      }
    }
  }
}

void check_ds2(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  if (!ctx.manifest.requests("android.permission.WRITE_EXTERNAL_STORAGE")) {
    return;
  }
  for (const Site& s : ctx.calls) {
    const std::string& name = s.call->callee.name;
    if (name == "getExternalStorageDirectory" ||
        name == "getExternalFilesDir") {
      violate(f, ctx.loc(s),
              "external storage path API " + name +
                  " used while WRITE_EXTERNAL_STORAGE is requested");
    }
  }
}

void check_ds3(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  bool any_log = false;
  bool any_known_arg = false;
  for (const Site& s : ctx.calls) {
    if (!is_log_call(*s.call)) continue;
    any_log = true;
    for (size_t i = 0; i < param_count(*s.call); ++i) {
      const ResolvedValue* p = param(*s.call, i);
      if (!p) continue;
      if (p->kind != ResolvedValue::Kind::Unknown) any_known_arg = true;
      if (known_lex(ctx.cfg, *p)) {
        violate(f, ctx.loc(s),
                "log call android.util.Log." + s.call->callee.name +
                    " receives credential-suggestive constant \"" + p->str +
                    "\"");
      }
    }
  }
  if (f.verdict.state == VerdictState::Violation) return;
  if (any_log && !any_known_arg) {
    unverifiable(f, "log calls present but every argument is unresolvable");
  }
}

void check_ds4(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  for (const Site& s : ctx.calls) {
    const std::string& owner = s.call->callee.owner;
    if (is_platform_namespace(owner) ||
        is_app_namespace(owner, ctx.manifest.package)) {
      continue;
    }
    for (size_t i = 0; i < param_count(*s.call); ++i) {
      const ResolvedValue* p = param(*s.call, i);
      if (p && known_lex(ctx.cfg, *p)) {
        violate(f, ctx.loc(s),
                "credential-suggestive constant \"" + p->str +
                    "\" passed to third-party API " + owner + "." +
                    s.call->callee.name);
        break;
      }
    }
  }
  if (f.verdict.state == VerdictState::Pass && ctx.obfuscated) {
    unverifiable(f,
                 "identifier obfuscation defeats namespace attribution of "
                 "call targets");
  }
}

void check_ds5(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code() || !ctx.any_call(is_text_input_widget)) {
    not_applicable(f, "no text-input widget API usage");
    return;
  }
  if (ctx.any_call(is_input_type_config)) return;
  for (const Site& s : ctx.calls) {
    if (is_text_input_widget(*s.call)) {
      violate(f, ctx.loc(s),
              "text input widget used without input-type configuration "
              "(keyboard cache not suppressed)");
      return;
    }
  }
}

void check_ds6(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  std::vector<const Component*> exported = ctx.manifest.exported_components();
  if (exported.empty()) return;
  for (const Site& s : ctx.calls) {
    if (!is_ipc_payload_write(*s.call)) continue;
    for (size_t i = 0; i < param_count(*s.call); ++i) {
      const ResolvedValue* p = param(*s.call, i);
      if (p && known_lex(ctx.cfg, *p)) {
        violate(f, ctx.loc(s),
                "credential-suggestive constant \"" + p->str +
                    "\" placed into IPC payload via " + s.call->callee.owner +
                    "." + s.call->callee.name + " while " +
                    exported.front()->name + " is exported");
        break;
      }
    }
  }
}

void check_ds7(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code() || !ctx.any_call(is_ui_text_set)) {
    not_applicable(f, "no UI text-set API usage");
    return;
  }
  for (const Site& s : ctx.calls) {
    if (!is_ui_text_set(*s.call)) continue;
    bool masked = std::any_of(
        s.method->calls.begin(), s.method->calls.end(),
        [](const CallSite& c) {
          return c.callee.name == "setTransformationMethod" ||
                 is_input_type_config(c);
        });
    if (masked) continue;
    for (size_t i = 0; i < param_count(*s.call); ++i) {
      const ResolvedValue* p = param(*s.call, i);
      if (p && known_lex(ctx.cfg, *p)) {
        violate(f, ctx.loc(s),
                "credential-suggestive constant \"" + p->str +
                    "\" shown via " + s.call->callee.owner + "." +
                    s.call->callee.name + " without masking");
        break;
      }
    }
  }
}

void check_ds8(const Ctx& ctx, Finding& f) {
  const std::optional<bool>& backup = ctx.manifest.allow_backup;
  if (backup.has_value() && !*backup) return;
  violate(f, "AndroidManifest.xml",
          backup.has_value()
              ? "allowBackup is explicitly true"
              : "allowBackup is absent and the platform default permits "
                "full app-data backup");
}

void check_ds9(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code() || !ctx.any_call(is_window_api)) {
    not_applicable(f, "no window API usage");
    return;
  }
  bool unknown_flags = false;
  for (const Site& s : ctx.calls) {
    if (!is_window_flag_set(*s.call)) continue;
    const ResolvedValue* flags = param(*s.call, 0);
    if (!flags) continue;
    if (flags->is_known_int() && (flags->num & kFlagSecure)) return;
    if (flags->kind == ResolvedValue::Kind::Unknown) unknown_flags = true;
  }
  if (unknown_flags) {
    unverifiable(f, "window flag arguments are unresolvable");
    return;
  }
  for (const Site& s : ctx.calls) {
    if (is_window_api(*s.call)) {
      violate(f, ctx.loc(s),
              "window surface used without FLAG_SECURE (screenshots and "
              "task-switcher previews not suppressed)");
      return;
    }
  }
}

void check_ds10(const Ctx& ctx, Finding& f) {
  bool triggered =
      ctx.has_code() &&
      (ctx.lexicon_present || ctx.any_call(is_biometric_api));
  if (!triggered) {
    not_applicable(f, "no authentication-gated flow detected");
    return;
  }
  if (ctx.any_call(is_device_credential_gate)) return;
  for (const ConstSite& s : ctx.consts) {
    if (ctx.cfg.lexicon_match(*s.value)) {
      violate(f, ctx.loc(s),
              "credential-suggestive constant \"" + *s.value +
                  "\" handled with no device-credential (keyguard) check "
                  "anywhere in the app");
      return;
    }
  }
  for (const Site& s : ctx.calls) {
    if (is_biometric_api(*s.call)) {
      violate(f, ctx.loc(s),
              "biometric flow present with no device-credential fallback "
              "check");
      return;
    }
  }
}

void check_ds11(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  for (const Site& s : ctx.calls) {
    if (!is_persistence_sink(*s.call)) continue;
    for (size_t i = 0; i < param_count(*s.call); ++i) {
      const ResolvedValue* p = param(*s.call, i);
      if (p && known_lex(ctx.cfg, *p)) {
        violate(f, ctx.loc(s),
                "credential-suggestive constant \"" + p->str +
                    "\" stored via " + s.call->callee.owner + "." +
                    s.call->callee.name);
        break;
      }
    }
  }
}

void check_ds12(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code() || !ctx.any_call(is_persistence_sink)) {
    not_applicable(f, "no local persistence call sites");
    return;
  }
  for (const Site& s : ctx.calls) {
    if (!is_persistence_sink(*s.call)) continue;
    bool encrypted =
        std::any_of(s.method->calls.begin(), s.method->calls.end(),
                    [](const CallSite& c) { return is_crypto_api(c); });
    if (!encrypted) {
      violate(f, ctx.loc(s),
              "persistence via " + s.call->callee.owner + "." +
                  s.call->callee.name +
                  " with no cryptographic API on the stored data path");
    }
  }
}

void check_crypto1(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  for (const Site& s : ctx.calls) {
    if (!is_key_material_ctor(*s.call)) continue;
    const ResolvedValue* key = param(*s.call, 0);
    std::string what;
    if (key && derived_from_constant(*key, &what)) {
      violate(f, ctx.loc(s),
              "hard-coded key material " + what + " feeds " +
                  s.call->callee.owner);
    }
  }
}

void check_crypto2(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  for (const Site& s : ctx.calls) {
    const MethodRef& callee = s.call->callee;
    if (callee.owner == "javax.crypto.Cipher" &&
        callee.name == "getInstance") {
      const ResolvedValue* t = param(*s.call, 0);
      if (t && t->is_known_str()) {
        std::string upper = to_upper(t->str);
        if (upper.find("/ECB") != std::string::npos) {
          violate(f, ctx.loc(s),
                  "cipher transformation \"" + t->str + "\" uses ECB mode");
        } else if (upper.find('/') == std::string::npos) {
          violate(f, ctx.loc(s),
                  "cipher transformation \"" + t->str +
                      "\" names no mode (provider default is ECB)");
        }
      }
    }
    if (callee.owner == "javax.crypto.spec.IvParameterSpec" &&
        callee.name == "<init>") {
      const ResolvedValue* iv = param(*s.call, 0);
      std::string what;
      if (iv && derived_from_constant(*iv, &what)) {
        violate(f, ctx.loc(s), "static IV " + what + " feeds IvParameterSpec");
      }
    }
    if (callee.owner == "javax.crypto.spec.PBEKeySpec" &&
        callee.name == "<init>" && param_count(*s.call) >= 3) {
      const ResolvedValue* iters = param(*s.call, 2);
      if (iters && iters->is_known_int() &&
          iters->num < ctx.cfg.pbe_min_iterations) {
        violate(f, ctx.loc(s),
                "PBE iteration count " + std::to_string(iters->num) +
                    " is below the " +
                    std::to_string(ctx.cfg.pbe_min_iterations) + " floor");
      }
    }
  }
  // Weak generated-key lengths: pair getInstance(algorithm) with the
  // init/initialize(bits) call in the same method.
  if (!ctx.code) return;
  for (const auto& cls : ctx.code->classes) {
    for (const auto& method : cls.methods) {
      std::string kp_algo, kg_algo;
      for (const auto& call : method.calls) {
        if (call.callee.name != "getInstance") continue;
        const ResolvedValue* a = param(call, 0);
        if (!a || !a->is_known_str()) continue;
        if (call.callee.owner == "java.security.KeyPairGenerator") {
          kp_algo = to_upper(a->str);
        } else if (call.callee.owner == "javax.crypto.KeyGenerator") {
          kg_algo = to_upper(a->str);
        }
      }
      for (const auto& call : method.calls) {
        const ResolvedValue* bits = param(call, 0);
        if (!bits || !bits->is_known_int()) continue;
        if (call.callee.owner == "java.security.KeyPairGenerator" &&
            call.callee.name == "initialize" &&
            (kp_algo == "RSA" || kp_algo == "DSA") &&
            bits->num < ctx.cfg.rsa_min_bits) {
          violate(f, location_of(cls, method),
                  kp_algo + " key length " + std::to_string(bits->num) +
                      " is below " + std::to_string(ctx.cfg.rsa_min_bits));
        }
        if (call.callee.owner == "javax.crypto.KeyGenerator" &&
            call.callee.name == "init" && kg_algo == "AES" &&
            bits->num < ctx.cfg.aes_min_bits) {
          violate(f, location_of(cls, method),
                  "AES key length " + std::to_string(bits->num) +
                      " is below " + std::to_string(ctx.cfg.aes_min_bits));
        }
      }
    }
  }
}

void check_crypto3(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  static const std::array<std::string_view, 8> weak = {
      "MD5", "MD4", "DES", "DESEDE", "RC4", "ARC4", "ARCFOUR", "BLOWFISH"};
  for (const Site& s : ctx.calls) {
    const MethodRef& callee = s.call->callee;
    if (callee.name != "getInstance") continue;
    const ResolvedValue* a = param(*s.call, 0);
    if (!a || !a->is_known_str()) continue;
    std::string algo = to_upper(a->str);
    if (callee.owner == "java.security.Signature") {
      if (algo.find("MD5") != std::string::npos ||
          algo.find("MD4") != std::string::npos ||
          algo.find("SHA1") != std::string::npos ||
          algo.find("SHA-1") != std::string::npos) {
        violate(f, ctx.loc(s),
                "deprecated signature algorithm \"" + a->str + "\"");
      }
      continue;
    }
    bool algo_context = callee.owner == "java.security.MessageDigest" ||
                        callee.owner == "javax.crypto.Cipher" ||
                        callee.owner == "javax.crypto.SecretKeyFactory" ||
                        callee.owner == "javax.crypto.KeyGenerator";
    if (!algo_context) continue;
    if (callee.owner == "javax.crypto.Cipher") {
      algo = algo.substr(0, algo.find('/'));
    }
    if (std::find(weak.begin(), weak.end(), algo) != weak.end()) {
      violate(f, ctx.loc(s),
              "deprecated algorithm \"" + a->str + "\" requested from " +
                  callee.owner);
    }
  }
}

void check_crypto4(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  bool source_present = false;
  bool sink_present = false;
  for (const Site& s : ctx.calls) {
    if (is_weak_rng(s.call->callee)) source_present = true;
    if (!is_rng_sink_ctor(*s.call)) continue;
    sink_present = true;
    for (size_t i = 0; i < param_count(*s.call); ++i) {
      const ResolvedValue* p = param(*s.call, i);
      if (!p) continue;
      bool direct = p->kind == ResolvedValue::Kind::Result && p->result &&
                    is_weak_rng(p->result->callee);
      bool fed = std::any_of(p->fed_by.begin(), p->fed_by.end(), is_weak_rng);
      if (direct || fed) {
        violate(f, ctx.loc(s),
                "java.util.Random output reaches " + s.call->callee.owner);
        break;
      }
    }
  }
  if (f.verdict.state == VerdictState::Violation) return;
  if (source_present && sink_present) {
    unverifiable(f,
                 "weak RNG and key-material construction both present but "
                 "the flow between them is unresolved");
  }
}

void check_tls1(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  static const std::array<std::string_view, 7> benign = {
      "localhost",    "127.0.0.1", "10.0.2.2",   "schemas.",
      "w3.org",       "xmlpull.org", "apache.org"};
  for (const ConstSite& s : ctx.consts) {
    std::string low = to_lower(*s.value);
    if (low.find("http://") == std::string::npos) continue;
    bool excluded =
        std::any_of(benign.begin(), benign.end(), [&](std::string_view b) {
          return low.find(b) != std::string::npos;
        });
    if (!excluded) {
      violate(f, ctx.loc(s), "cleartext URL constant \"" + *s.value + "\"");
    }
  }
  if (ctx.manifest.uses_cleartext_traffic == std::optional<bool>(true)) {
    violate(f, "AndroidManifest.xml",
            "usesCleartextTraffic is explicitly true");
  }
}

void check_tls2(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  static const std::array<std::string_view, 4> broken = {"SSL", "SSLv3",
                                                         "TLSv1", "TLSv1.1"};
  for (const Site& s : ctx.calls) {
    const MethodRef& callee = s.call->callee;
    if (callee.owner == "javax.net.ssl.SSLContext" &&
        callee.name == "getInstance") {
      const ResolvedValue* p = param(*s.call, 0);
      if (p && p->is_known_str() &&
          std::find(broken.begin(), broken.end(), p->str) != broken.end()) {
        violate(f, ctx.loc(s),
                "broken TLS protocol \"" + p->str +
                    "\" requested from SSLContext");
      }
    }
    std::string_view owner_simple = simple_name(callee.owner);
    if (owner_simple == "AllowAllHostnameVerifier" ||
        owner_simple == "NoopHostnameVerifier") {
      violate(f, ctx.loc(s),
              "permissive hostname verifier " + callee.owner + " used");
    }
  }
}

void check_tls3(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model");
    return;
  }
  for (const auto& cls : ctx.code->classes) {
    bool trust_manager =
        std::find(cls.interfaces.begin(), cls.interfaces.end(),
                  "javax.net.ssl.X509TrustManager") != cls.interfaces.end();
    bool verifier =
        std::find(cls.interfaces.begin(), cls.interfaces.end(),
                  "javax.net.ssl.HostnameVerifier") != cls.interfaces.end();
    for (const auto& method : cls.methods) {
      if (trust_manager && method.name == "checkServerTrusted" &&
          !method.has_invoke && !method.has_throw) {
        violate(f, location_of(cls, method),
                "X509TrustManager.checkServerTrusted is empty: every server "
                "certificate is accepted");
      }
      if (verifier && method.name == "verify" && !method.has_invoke) {
        bool const_true = std::any_of(
            method.returns.begin(), method.returns.end(),
            [](const ResolvedValue& r) {
              return r.is_known_int() && r.num == 1;
            });
        if (const_true) {
          violate(f, location_of(cls, method),
                  "HostnameVerifier.verify constant-returns true: every "
                  "hostname is accepted");
        }
      }
    }
  }
}

void check_tls4(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code() || !ctx.any_call(is_networking_call)) {
    not_applicable(f, "no networking API usage");
    return;
  }
  bool pinned = ctx.any_owner_prefix("okhttp3.CertificatePinner");
  if (pinned || ctx.manifest.has_network_security_config) return;
  for (const Site& s : ctx.calls) {
    if (is_networking_call(*s.call)) {
      violate(f, ctx.loc(s),
              "networking via " + s.call->callee.owner +
                  " with neither a certificate-pinning call site nor a "
                  "networkSecurityConfig manifest reference");
      return;
    }
  }
}

bool permission_justified(const Ctx& ctx, const std::string& name) {
  auto owner_prefix = [&](std::string_view p) {
    return ctx.any_owner_prefix(p);
  };
  auto any_const = [&](auto pred) {
    return std::any_of(ctx.consts.begin(), ctx.consts.end(),
                       [&](const ConstSite& s) { return pred(*s.value); });
  };
  auto const_contains = [&](std::string_view needle) {
    return any_const([&](const std::string& v) {
      return v.find(needle) != std::string::npos;
    });
  };
  if (name == "CAMERA") {
    return owner_prefix("android.hardware.Camera") ||
           owner_prefix("android.hardware.camera2") ||
           owner_prefix("androidx.camera.");
  }
  if (name == "RECORD_AUDIO") {
    return owner_prefix("android.media.AudioRecord") ||
           owner_prefix("android.media.MediaRecorder");
  }
  if (name == "READ_CONTACTS" || name == "WRITE_CONTACTS") {
    return owner_prefix("android.provider.") ||
           const_contains("content://com.android.contacts") ||
           const_contains("content://contacts");
  }
  if (name == "READ_SMS" || name == "RECEIVE_SMS" || name == "SEND_SMS") {
    return owner_prefix("android.telephony.Sms") ||
           const_contains("content://sms");
  }
  if (name == "ACCESS_FINE_LOCATION" || name == "ACCESS_COARSE_LOCATION") {
    return owner_prefix("android.location.") ||
           owner_prefix("com.google.android.gms.location");
  }
  if (name == "READ_PHONE_STATE") {
    return owner_prefix("android.telephony.TelephonyManager");
  }
  if (name == "CALL_PHONE") {
    return any_const([](const std::string& v) {
             return starts_with(v, "tel:");
           }) ||
           const_contains("android.intent.action.CALL");
  }
  if (name == "READ_EXTERNAL_STORAGE" || name == "WRITE_EXTERNAL_STORAGE") {
    return owner_prefix("android.os.Environment") ||
           ctx.any_call([](const CallSite& c) {
             return starts_with(c.callee.name, "getExternal");
           });
  }
  if (name == "GET_ACCOUNTS") return owner_prefix("android.accounts.");
  if (name == "POST_NOTIFICATIONS") {
    return owner_prefix("android.app.Notification");
  }
  return false;
}

void check_plat1(const Ctx& ctx, Finding& f) {
  if (!ctx.has_code()) {
    not_applicable(f, "no code model to index API-usage justifications");
    return;
  }
  for (const std::string& perm : ctx.manifest.permissions) {
    std::string short_name(simple_name(perm));
    bool dangerous =
        std::find(ctx.cfg.dangerous_permissions.begin(),
                  ctx.cfg.dangerous_permissions.end(),
                  short_name) != ctx.cfg.dangerous_permissions.end();
    if (!dangerous) continue;
    if (!permission_justified(ctx, short_name)) {
      violate(f, "AndroidManifest.xml",
              "dangerous permission " + perm +
                  " requested with no corresponding API usage in code");
    }
  }
}

void check_plat2(const Ctx& ctx, Finding& f) {
  std::vector<std::string> schemes = ctx.manifest.custom_schemes();
  if (schemes.empty()) return;
  if (!ctx.has_code()) {
    unverifiable(f,
                 "custom scheme \"" + schemes.front() +
                     "\" declared but handler code is unavailable");
    return;
  }
  for (const Site& s : ctx.calls) {
    if (is_intent_data_read(*s.call)) {
      violate(f, ctx.loc(s),
              "custom scheme \"" + schemes.front() +
                  "\" handled by code reading intent data (" +
                  s.call->callee.owner + "." + s.call->callee.name + ")");
    }
  }
}

void check_plat3(const Ctx& ctx, Finding& f) {
  for (const Component& comp : ctx.manifest.components) {
    if (!comp.is_exported() || !comp.permission.empty() ||
        comp.is_launcher()) {
      continue;
    }
    bool sensitive = ctx.cfg.lexicon_match(comp.name);
    std::string matched_action;
    for (const IntentFilter& filter : comp.filters) {
      for (const std::string& action : filter.actions) {
        if (ctx.cfg.lexicon_match(action)) {
          sensitive = true;
          matched_action = action;
        }
      }
    }
    if (sensitive) {
      std::string reason = "exported " +
                           std::string(to_string(comp.kind)) + " " +
                           comp.name +
                           " matches the sensitive lexicon with no "
                           "permission guard";
      if (!matched_action.empty()) {
        reason += " (action " + matched_action + ")";
      }
      violate(f, "AndroidManifest.xml", std::move(reason));
    }
  }
  if (f.verdict.state == VerdictState::Pass && ctx.has_code() &&
      ctx.obfuscated) {
    unverifiable(f,
                 "identifier obfuscation defeats name-based screening of "
                 "exported components");
  }
}

bool webview_used(const Ctx& ctx) {
  return ctx.has_code() && ctx.any_call(is_webview_call);
}

void check_plat4(const Ctx& ctx, Finding& f) {
  if (!webview_used(ctx)) {
    not_applicable(f, "no WebView usage");
    return;
  }
  bool unknown_toggle = false;
  for (const Site& s : ctx.calls) {
    if (s.call->callee.name != "setJavaScriptEnabled") continue;
    const ResolvedValue* p = param(*s.call, 0);
    if (!p) continue;
    if (p->is_known_int() && p->num != 0) {
      violate(f, ctx.loc(s), "setJavaScriptEnabled(true)");
    } else if (p->kind == ResolvedValue::Kind::Unknown) {
      unknown_toggle = true;
    }
  }
  if (f.verdict.state != VerdictState::Violation && unknown_toggle) {
    unverifiable(f, "setJavaScriptEnabled argument is unresolvable");
  }
}

void check_plat5(const Ctx& ctx, Finding& f) {
  if (!webview_used(ctx)) {
    not_applicable(f, "no WebView usage");
    return;
  }
  for (const Site& s : ctx.calls) {
    const MethodRef& callee = s.call->callee;
    if (callee.owner == "android.webkit.WebView" &&
        (callee.name == "loadUrl" || callee.name == "loadData" ||
         callee.name == "loadDataWithBaseURL" || callee.name == "postUrl")) {
      const ResolvedValue* url = param(*s.call, 0);
      if (url && url->is_known_str()) {
        std::string low = to_lower(url->str);
        if (starts_with(low, "http://") || starts_with(low, "file://")) {
          violate(f, ctx.loc(s),
                  "WebView loads unsafe URL \"" + url->str + "\"");
        }
      }
    }
    if (callee.name == "setAllowFileAccess" ||
        callee.name == "setAllowFileAccessFromFileURLs" ||
        callee.name == "setAllowUniversalAccessFromFileURLs") {
      const ResolvedValue* on = param(*s.call, 0);
      if (on && on->is_known_int() && on->num != 0) {
        violate(f, ctx.loc(s), callee.name + "(true) enables file access");
      }
    }
  }
}

void check_plat6(const Ctx& ctx, Finding& f) {
  if (!webview_used(ctx)) {
    not_applicable(f, "no WebView usage");
    return;
  }
  for (const Site& s : ctx.calls) {
    if (s.call->callee.name == "addJavascriptInterface") {
      violate(f, ctx.loc(s),
              "JavaScript bridge exposed via addJavascriptInterface");
    }
  }
}

void check_plat7(const Ctx& ctx, Finding& f) {
  if (!webview_used(ctx)) {
    not_applicable(f, "no WebView usage");
    return;
  }
  if (ctx.any_call_named("setFilterTouchesWhenObscured")) return;
  for (const Site& s : ctx.calls) {
    if (is_webview_call(*s.call)) {
      violate(f, ctx.loc(s),
              "no touch-filtering defense against draw-over-apps overlays "
              "(tapjacking): setFilterTouchesWhenObscured never called");
      return;
    }
  }
}

void check_plat8(const Ctx& ctx, Finding& f) {
  if (!webview_used(ctx)) {
    not_applicable(f, "no WebView usage");
    return;
  }
  if (ctx.any_call_named("clearCache") || ctx.any_call_named("clearFormData"))
    return;
  for (const Site& s : ctx.calls) {
    if (is_webview_call(*s.call)) {
      violate(f, ctx.loc(s),
              "web cache never cleared: no clearCache/clearFormData call "
              "site");
      return;
    }
  }
}

using CheckFn = void (*)(const Ctx&, Finding&);

CheckFn check_fn(CheckId id) {
  switch (id.category) {
    case CheckCategory::DS:
      switch (id.index) {
        case 1: return check_ds1;
        case 2: return check_ds2;
        case 3: return check_ds3;
        case 4: return check_ds4;
        case 5: return check_ds5;
        case 6: return check_ds6;
        case 7: return check_ds7;
        case 8: return check_ds8;
        case 9: return check_ds9;
        case 10: return check_ds10;
        case 11: return check_ds11;
        case 12: return check_ds12;
      }
      break;
    case CheckCategory::CRYPTO:
      switch (id.index) {
        case 1: return check_crypto1;
        case 2: return check_crypto2;
        case 3: return check_crypto3;
        case 4: return check_crypto4;
      }
      break;
    case CheckCategory::TLS:
      switch (id.index) {
        case 1: return check_tls1;
        case 2: return check_tls2;
        case 3: return check_tls3;
        case 4: return check_tls4;
      }
      break;
    case CheckCategory::PLAT:
      switch (id.index) {
        case 1: return check_plat1;
        case 2: return check_plat2;
        case 3: return check_plat3;
        case 4: return check_plat4;
        case 5: return check_plat5;
        case 6: return check_plat6;
        case 7: return check_plat7;
        case 8: return check_plat8;
      }
      break;
  }
  return nullptr;
}

Finding evaluate(CheckId id, const Ctx& ctx) {
  Finding f;
  f.check = id;
  f.masvs_link = masvs_subcategory(id);
  CheckFn fn = check_fn(id);
  try {
    fn(ctx, f);
  } catch (const std::exception& e) {
    f.evidence.clear();
    unverifiable(f, std::string("check failed: ") + e.what());
  }
  if (f.verdict.state == VerdictState::Violation) {
    auto severity = ctx.cfg.severity.find(to_string(id));
    if (severity != ctx.cfg.severity.end()) {
      f.verdict.qualifier = severity->second;
    }
  } else {
    f.evidence.clear();
    f.verdict.qualifier.clear();
  }
  return f;
}

}  // namespace

// ------------------------------------------------------------ public API

const char* to_string(CheckCategory category) {
  switch (category) {
    case CheckCategory::DS: return "DS";
    case CheckCategory::CRYPTO: return "CRYPTO";
    case CheckCategory::TLS: return "TLS";
    case CheckCategory::PLAT: return "PLAT";
  }
  return "?";
}

const std::vector<CheckId>& all_checks() {
  static const std::vector<CheckId> order = [] {
    std::vector<CheckId> out;
    for (int i = 1; i <= 12; ++i) out.push_back({CheckCategory::DS, i});
    for (int i = 1; i <= 4; ++i) out.push_back({CheckCategory::CRYPTO, i});
    for (int i = 1; i <= 4; ++i) out.push_back({CheckCategory::TLS, i});
    for (int i = 1; i <= 8; ++i) out.push_back({CheckCategory::PLAT, i});
    return out;
  }();
  return order;
}

std::string to_string(CheckId id) {
  return std::string(to_string(id.category)) + std::to_string(id.index);
}

std::optional<CheckId> parse_check_id(std::string_view name) {
  for (CheckId id : all_checks()) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

const char* masvs_subcategory(CheckId id) {
  switch (id.category) {
    case CheckCategory::DS:
      switch (id.index) {
        case 1: case 2: case 8: case 11: case 12:
          return "MASVS-STORAGE-1";
        default:
          return "MASVS-STORAGE-2";
      }
    case CheckCategory::CRYPTO:
      return id.index == 1 ? "MASVS-CRYPTO-2" : "MASVS-CRYPTO-1";
    case CheckCategory::TLS:
      return id.index == 4 ? "MASVS-NETWORK-2" : "MASVS-NETWORK-1";
    case CheckCategory::PLAT:
      if (id.index <= 3) return "MASVS-PLATFORM-1";
      if (id.index == 7) return "MASVS-PLATFORM-3";
      return "MASVS-PLATFORM-2";
  }
  return "";
}

std::string verdict_glyph(const Verdict& verdict) {
  switch (verdict.state) {
    case VerdictState::Violation:
      return verdict.qualifier.empty() ? "V" : "V(" + verdict.qualifier + ")";
    case VerdictState::Pass: return "N";
    case VerdictState::NotApplicable: return "N/A";
    case VerdictState::Unverifiable: return "-";
  }
  return "?";
}

std::optional<Verdict> verdict_from_glyph(std::string_view glyph) {
  if (glyph == "N") return Verdict{VerdictState::Pass, ""};
  if (glyph == "N/A") return Verdict{VerdictState::NotApplicable, ""};
  if (glyph == "-") return Verdict{VerdictState::Unverifiable, ""};
  if (glyph == "V") return Verdict{VerdictState::Violation, ""};
  if (glyph.size() >= 3 && starts_with(glyph, "V(") && glyph.back() == ')') {
    return Verdict{VerdictState::Violation,
                   std::string(glyph.substr(2, glyph.size() - 3))};
  }
  return std::nullopt;
}

bool CheckConfig::lexicon_match(std::string_view text) const {
  std::string low = to_lower(text);
  for (const std::string& keyword : lexicon) {
    if (!keyword.empty() && low.find(to_lower(keyword)) != std::string::npos) {
      return true;
    }
  }
  return false;
}

std::vector<Finding> run_all(const ManifestModel& manifest,
                             const CodeModel* code, Scope scope,
                             const CheckConfig& config) {
  Ctx ctx(manifest, code, config);
  std::vector<Finding> out;
  out.reserve(kCheckCount);
  for (CheckId id : all_checks()) {
    bool platform_subset =
        id.category == CheckCategory::PLAT && id.index >= 2;
    if (scope == Scope::PlatformOnly && !platform_subset) {
      Finding f;
      f.check = id;
      f.masvs_link = masvs_subcategory(id);
      unverifiable(f, "outside platform-only scope (PLAT2-PLAT8)");
      out.push_back(std::move(f));
      continue;
    }
    out.push_back(evaluate(id, ctx));
  }
  return out;
}

Finding run_one(CheckId id, const ManifestModel& manifest,
                const CodeModel* code, const CheckConfig& config) {
  Ctx ctx(manifest, code, config);
  return evaluate(id, ctx);
}

bool applicability(CheckId id, const ManifestModel& manifest,
                   const CodeModel* code, const CheckConfig& config) {
  Finding f = run_one(id, manifest, code, config);
  return f.verdict.state != VerdictState::NotApplicable;
}

}  // namespace apkaudit
