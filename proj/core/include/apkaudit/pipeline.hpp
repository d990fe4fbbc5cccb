#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "apkaudit/axml.hpp"
#include "apkaudit/bytecode.hpp"
#include "apkaudit/checks.hpp"
#include "apkaudit/container.hpp"

namespace apkaudit {

enum class ArtifactKind { Apk, Xapk, Aar, Unknown };

const char* to_string(ArtifactKind kind);

// How much of the artifact survived parsing:
//   A — nothing usable (container or manifest failed): zero findings.
//   B — manifest only (bytecode missing or failed): platform subset runs.
//   C — full model: every check runs.
enum class SetLabel { A, B, C };

const char* to_string(SetLabel label);

struct Degradation {
  std::string stage;   // "container", "manifest", "bytecode", "timeout", ...
  std::string detail;  // starts with the error kind, e.g. "NotAZip: ..."

  std::string text() const { return stage + ": " + detail; }

  friend bool operator==(const Degradation&, const Degradation&) = default;
};

struct ScanReport {
  std::string app_id;  // manifest package, or the file stem as fallback
  std::string source;  // path (or synthetic name) the artifact came from
  ArtifactKind artifact_kind = ArtifactKind::Unknown;
  SetLabel set_label = SetLabel::A;
  std::vector<Finding> findings;  // empty exactly when set_label == A
  std::vector<std::string> permissions;  // requested permissions, full names
  std::vector<Degradation> degradations;
  double wall_time_ms = 0.0;

  bool has_violation() const;
};

// Artifact family, decided from the container listing alone: any inner
// *.apk makes a bundle, classes.jar makes a library archive, a binary
// AndroidManifest.xml or any *.dex makes an installable package.
ArtifactKind classify(const ZipArchive& archive);

// Scans one artifact end to end. Malformed input never throws: every
// failure is recorded as a degradation and reflected in the set label.
// The only exception is an unreadable path, which throws
// ParseError(ErrorKind::IoFailure).
ScanReport scan(const std::filesystem::path& path,
                const CheckConfig& config = {});

// Same pipeline over an in-memory artifact (used by tests and fuzzing).
ScanReport scan_bytes(std::vector<uint8_t> data, const std::string& source,
                      const CheckConfig& config = {});

// Scans many artifacts with `parallelism` worker threads (clamped to >= 1).
// Results keep input order, one report per path; a failing artifact—even an
// unreadable path—degrades its own report without disturbing the others.
// Output is identical at every parallelism level.
std::vector<ScanReport> scan_corpus(
    const std::vector<std::filesystem::path>& paths, int parallelism = 1,
    const CheckConfig& config = {});

}  // namespace apkaudit
