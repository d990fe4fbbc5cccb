#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apkaudit/axml.hpp"
#include "apkaudit/bytecode.hpp"

namespace apkaudit {

// ------------------------------------------------------------ identifiers

enum class CheckCategory { DS, CRYPTO, TLS, PLAT };

const char* to_string(CheckCategory category);

struct CheckId {
  CheckCategory category = CheckCategory::DS;
  int index = 1;  // DS 1-12, CRYPTO 1-4, TLS 1-4, PLAT 1-8

  friend bool operator==(const CheckId&, const CheckId&) = default;
};

inline constexpr int kCheckCount = 28;

// All 28 checks in canonical order: DS1-12, CRYPTO1-4, TLS1-4, PLAT1-8.
const std::vector<CheckId>& all_checks();

std::string to_string(CheckId id);                    // e.g. "CRYPTO2"
std::optional<CheckId> parse_check_id(std::string_view name);

// MASVS subcategory served by a check, e.g. "MASVS-STORAGE-2".
const char* masvs_subcategory(CheckId id);

// ------------------------------------------------------------ verdicts

enum class VerdictState { Violation, Pass, NotApplicable, Unverifiable };

struct Verdict {
  VerdictState state = VerdictState::Pass;
  std::string qualifier;  // only meaningful when state == Violation

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// "V" / "N" / "N/A" / "-"; violations with a qualifier render as "V(<q>)".
std::string verdict_glyph(const Verdict& verdict);
std::optional<Verdict> verdict_from_glyph(std::string_view glyph);

struct Evidence {
  std::string location;  // "pkg.Class.method" or "AndroidManifest.xml"
  std::string reason;
};

struct Finding {
  CheckId check;
  Verdict verdict;
  std::vector<Evidence> evidence;  // non-empty exactly when Violation
  std::string note;                // applicability / degradation explanation
  std::string masvs_link;
};

// ------------------------------------------------------------ configuration

struct CheckConfig {
  // Case-insensitive substrings marking credential-suggestive constants.
  std::vector<std::string> lexicon = {
      "password", "passwd", "pin",   "otp",    "cvv",        "card",
      "account",  "token",  "secret", "credential", "nid",
  };

  // Short permission names (the part after "android.permission.").
  std::vector<std::string> dangerous_permissions = {
      "CAMERA",
      "RECORD_AUDIO",
      "READ_CONTACTS",
      "WRITE_CONTACTS",
      "READ_SMS",
      "RECEIVE_SMS",
      "SEND_SMS",
      "ACCESS_FINE_LOCATION",
      "ACCESS_COARSE_LOCATION",
      "READ_PHONE_STATE",
      "CALL_PHONE",
      "READ_EXTERNAL_STORAGE",
      "WRITE_EXTERNAL_STORAGE",
      "GET_ACCOUNTS",
      "POST_NOTIFICATIONS",
  };

  int pbe_min_iterations = 10000;
  int rsa_min_bits = 2048;
  int aes_min_bits = 128;

  // Optional severity label per check name, carried into the verdict
  // qualifier on violations (e.g. {"DS11", "L"} renders "V(L)").
  std::map<std::string, std::string> severity;

  int timeout_secs = 300;  // per-artifact scan budget

  bool lexicon_match(std::string_view text) const;
};

enum class Scope { Full, PlatformOnly };

// ------------------------------------------------------------ evaluation

// Evaluates every check against the parsed models. `code` may be null
// (manifest-only scan). PlatformOnly evaluates PLAT2-PLAT8 and reports
// everything else, including PLAT1, as Unverifiable. Always returns
// exactly 28 findings in canonical order; a crashing check degrades to
// Unverifiable instead of propagating.
std::vector<Finding> run_all(const ManifestModel& manifest,
                             const CodeModel* code, Scope scope,
                             const CheckConfig& config = {});

Finding run_one(CheckId id, const ManifestModel& manifest,
                const CodeModel* code, const CheckConfig& config = {});

// False exactly when the check's precondition API surface is absent from
// the models (WebView usage for PLAT4-8, text input for DS5, ...).
bool applicability(CheckId id, const ManifestModel& manifest,
                   const CodeModel* code, const CheckConfig& config = {});

}  // namespace apkaudit
