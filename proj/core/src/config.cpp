#include "apkaudit/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace apkaudit {
namespace {

std::string trim(std::string_view text) {
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])))
    ++begin;
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(text[end - 1])))
    --end;
  return std::string(text.substr(begin, end - begin));
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError(ErrorKind::ConfigError,
                   "line " + std::to_string(line) + ": " + what);
}

int parse_int(int line, const std::string& key, const std::string& value) {
  if (value.empty() ||
      !std::all_of(value.begin(), value.end(), [](unsigned char c) {
        return std::isdigit(c);
      })) {
    fail(line, key + " expects a non-negative integer, got \"" + value +
                   "\"");
  }
  try {
    return std::stoi(value);
  } catch (const std::exception&) {
    fail(line, key + " value \"" + value + "\" is out of range");
  }
}

void remove_value(std::vector<std::string>& list, const std::string& value) {
  list.erase(std::remove(list.begin(), list.end(), value), list.end());
}

}  // namespace

CheckConfig parse_config(std::string_view text) {
  CheckConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(line_no, "expected key=value, got \"" + line + "\"");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (key == "lexicon.add") {
      if (value.empty()) fail(line_no, "lexicon.add expects a word");
      config.lexicon.push_back(value);
    } else if (key == "lexicon.remove") {
      remove_value(config.lexicon, value);
    } else if (key == "dangerous_permissions.add") {
      if (value.empty()) {
        fail(line_no, "dangerous_permissions.add expects a permission name");
      }
      config.dangerous_permissions.push_back(value);
    } else if (key == "dangerous_permissions.remove") {
      remove_value(config.dangerous_permissions, value);
    } else if (key == "crypto.pbe_min_iterations") {
      config.pbe_min_iterations = parse_int(line_no, key, value);
    } else if (key == "crypto.rsa_min_bits") {
      config.rsa_min_bits = parse_int(line_no, key, value);
    } else if (key == "crypto.aes_min_bits") {
      config.aes_min_bits = parse_int(line_no, key, value);
    } else if (key == "timeout_secs") {
      config.timeout_secs = parse_int(line_no, key, value);
    } else if (key.rfind("severity.", 0) == 0) {
      std::string check = key.substr(9);
      if (!parse_check_id(check)) {
        fail(line_no, "severity.* names an unknown check \"" + check + "\"");
      }
      if (value.empty()) fail(line_no, "severity label must not be empty");
      config.severity[check] = value;
    } else {
      fail(line_no, "unknown key \"" + key + "\"");
    }
  }
  return config;
}

CheckConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(ErrorKind::IoFailure,
                     "cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace apkaudit
