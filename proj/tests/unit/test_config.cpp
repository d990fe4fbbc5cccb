#include <string>

#include "apkaudit/checks.hpp"
#include "apkaudit/config.hpp"
#include "apkaudit/errors.hpp"
#include "doctest.h"
#include "paths.hpp"

using apkaudit::CheckConfig;
using apkaudit::ErrorKind;
using apkaudit::ParseError;

namespace {

ErrorKind config_error(const std::string& text) {
  try {
    apkaudit::parse_config(text);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("expected a ParseError");
  return ErrorKind::IoFailure;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults hold without a config file") {
  CheckConfig cfg;
  CHECK(cfg.pbe_min_iterations == 10000);
  CHECK(cfg.rsa_min_bits == 2048);
  CHECK(cfg.aes_min_bits == 128);
  CHECK(cfg.timeout_secs == 300);
  CHECK(cfg.severity.empty());
  CHECK(cfg.lexicon_match("password"));
  bool has_send_sms = false;
  for (const std::string& p : cfg.dangerous_permissions) {
    if (p == "SEND_SMS") has_send_sms = true;
  }
  CHECK(has_send_sms);
}

TEST_CASE("every recognized key parses") {
  CheckConfig cfg = apkaudit::parse_config(
      "# tuning\n"
      "lexicon.add=geheim\n"
      "lexicon.remove=nid\n"
      "dangerous_permissions.add=BODY_SENSORS\n"
      "dangerous_permissions.remove=SEND_SMS\n"
      "crypto.pbe_min_iterations=2000\n"
      "crypto.rsa_min_bits=3072\n"
      "crypto.aes_min_bits=256\n"
      "timeout_secs=10\n"
      "severity.DS11=L\n"
      "\n"
      "severity.CRYPTO2=ML\n");
  CHECK(cfg.lexicon_match("mein-geheim"));
  CHECK(!cfg.lexicon_match("nid"));
  CHECK(cfg.pbe_min_iterations == 2000);
  CHECK(cfg.rsa_min_bits == 3072);
  CHECK(cfg.aes_min_bits == 256);
  CHECK(cfg.timeout_secs == 10);
  CHECK(cfg.severity.at("DS11") == "L");
  CHECK(cfg.severity.at("CRYPTO2") == "ML");
  bool sensors = false, sms = false;
  for (const std::string& p : cfg.dangerous_permissions) {
    if (p == "BODY_SENSORS") sensors = true;
    if (p == "SEND_SMS") sms = true;
  }
  CHECK(sensors);
  CHECK(!sms);
}

TEST_CASE("whitespace and comments are ignored") {
  CheckConfig cfg = apkaudit::parse_config(
      "  # full-line comment\n"
      "\n"
      "   timeout_secs = 42  \n");
  CHECK(cfg.timeout_secs == 42);
}

TEST_CASE("violations are reported with their line number") {
  CHECK(config_error("bogus line\n") == ErrorKind::ConfigError);
  CHECK(config_error("unknown.key=1\n") == ErrorKind::ConfigError);
  CHECK(config_error("crypto.pbe_min_iterations=ten\n") ==
        ErrorKind::ConfigError);
  CHECK(config_error("severity.NOPE=L\n") == ErrorKind::ConfigError);
  CHECK(config_error("timeout_secs=\n") == ErrorKind::ConfigError);
  try {
    apkaudit::parse_config("timeout_secs=5\nbroken\n");
  } catch (const ParseError& e) {
    std::string message = e.what();
    CHECK(message.find("line 2") != std::string::npos);
  }
}

TEST_CASE("unreadable config paths fail as io errors") {
  try {
    apkaudit::load_config_file("/nonexistent/tuning.conf");
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::IoFailure);
  }
}

TEST_CASE("the corpus tuning files load") {
  CheckConfig lax = apkaudit::load_config_file(config_path("lax_pbe.conf"));
  CHECK(lax.pbe_min_iterations == 500);
  CheckConfig lex = apkaudit::load_config_file(config_path("lexword.conf"));
  CHECK(lex.lexicon_match("kennwort"));
  CheckConfig sev = apkaudit::load_config_file(config_path("severity.conf"));
  CHECK(sev.severity.at("DS11") == "L");
  CHECK(sev.severity.at("DS12") == "ML");
}

}  // TEST_SUITE
