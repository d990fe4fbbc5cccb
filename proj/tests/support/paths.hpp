#pragma once

// Locations of the checked-in test corpus, injected by the build.

#include <string>

inline std::string fixture_path(const std::string& name) {
  return std::string(APKAUDIT_FIXTURE_DIR) + "/" + name;
}

inline std::string oracle_path(const std::string& rel) {
  // fixtures_manifest.json records oracle paths relative to fixtures/.
  return fixture_path(rel);
}

inline std::string config_path(const std::string& name) {
  return fixture_path("configs/" + name);
}

inline std::string data_path(const std::string& name) {
  return std::string(APKAUDIT_DATA_DIR) + "/" + name;
}
