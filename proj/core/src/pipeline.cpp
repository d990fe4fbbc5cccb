#include "apkaudit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

namespace apkaudit {
namespace {

using Clock = std::chrono::steady_clock;

// Raised internally when the per-artifact budget expires; converted into a
// degradation before scan() returns.
struct TimeoutExpired {};

// Raised after a fatal container failure has already been recorded.
struct ContainerFailed {};

struct Deadline {
  Clock::time_point at;

  void poll() const {
    if (Clock::now() >= at) throw TimeoutExpired{};
  }
};

bool ends_with(std::string_view text, std::string_view suffix) {
  return text.size() >= suffix.size() &&
         text.compare(text.size() - suffix.size(), suffix.size(), suffix) ==
             0;
}

bool looks_plain_xml(std::span<const uint8_t> data) {
  size_t i = 0;
  if (data.size() >= 3 && data[0] == 0xEF && data[1] == 0xBB &&
      data[2] == 0xBF) {
    i = 3;  // UTF-8 BOM
  }
  while (i < data.size() &&
         (data[i] == ' ' || data[i] == '\t' || data[i] == '\r' ||
          data[i] == '\n')) {
    ++i;
  }
  return i < data.size() && data[i] == '<';
}

// Deterministic evaluation order for code entries: the primary dex first,
// numbered ones by index, anything else alphabetically.
std::vector<std::string> dex_entry_names(const ZipArchive& archive) {
  std::vector<std::string> names;
  for (const ZipEntry& entry : archive.entries()) {
    if (ends_with(entry.name, ".dex") &&
        entry.name.find('/') == std::string::npos) {
      if (std::find(names.begin(), names.end(), entry.name) == names.end()) {
        names.push_back(entry.name);
      }
    }
  }
  auto rank = [](const std::string& name) -> std::pair<int, long> {
    if (name == "classes.dex") return {0, 0};
    if (name.size() > 12 && name.rfind("classes", 0) == 0 &&
        ends_with(name, ".dex")) {
      std::string digits = name.substr(7, name.size() - 11);
      if (!digits.empty() &&
          std::all_of(digits.begin(), digits.end(), [](unsigned char c) {
            return std::isdigit(c);
          })) {
        return {1, std::stol(digits)};
      }
    }
    return {2, 0};
  };
  std::sort(names.begin(), names.end(),
            [&](const std::string& a, const std::string& b) {
              auto ra = rank(a), rb = rank(b);
              if (ra != rb) return ra < rb;
              return a < b;
            });
  return names;
}

std::vector<std::string> inner_apk_names(const ZipArchive& archive) {
  std::vector<std::string> names;
  for (const ZipEntry& entry : archive.entries()) {
    if (ends_with(entry.name, ".apk")) {
      if (std::find(names.begin(), names.end(), entry.name) == names.end()) {
        names.push_back(entry.name);
      }
    }
  }
  std::sort(names.begin(), names.end(),
            [](const std::string& a, const std::string& b) {
              bool base_a = a == "base.apk" || ends_with(a, "/base.apk");
              bool base_b = b == "base.apk" || ends_with(b, "/base.apk");
              if (base_a != base_b) return base_a;
              return a < b;
            });
  return names;
}

std::string stem_of(const std::string& source) {
  return std::filesystem::path(source).stem().string();
}

void note_duplicates(const ZipArchive& archive, const std::string& where,
                     std::vector<Degradation>& out) {
  std::vector<std::string> dups = archive.duplicate_names();
  if (dups.empty()) return;
  std::string joined;
  for (const std::string& name : dups) {
    if (!joined.empty()) joined += ", ";
    joined += name;
  }
  out.push_back({where, "DuplicateEntryName: last occurrence wins for " +
                            joined});
}

struct Scanner {
  const CheckConfig& cfg;
  Deadline deadline;
  ScanReport report;

  ManifestModel manifest;
  bool manifest_ok = false;
  CodeModel code;
  bool any_code_entry = false;
  bool all_code_ok = true;
  bool timed_out = false;

  explicit Scanner(const std::string& source, const CheckConfig& config)
      : cfg(config),
        // timeout_secs <= 0 means the budget is already spent: the scan
        // degrades at the first checkpoint, which makes the path testable.
        deadline{Clock::now() + std::chrono::seconds(std::max(
                                    0, config.timeout_secs))} {
    report.source = source;
    report.app_id = stem_of(source);
  }

  void degrade(std::string stage, std::string detail) {
    report.degradations.push_back({std::move(stage), std::move(detail)});
  }

  void parse_manifest_bytes(const std::vector<uint8_t>& bytes) {
    if (looks_binary_xml(bytes)) {
      manifest = parse_binary_manifest(bytes);
    } else if (looks_plain_xml(bytes)) {
      manifest = parse_plain_manifest(std::string_view(
          reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } else {
      manifest = parse_binary_manifest(bytes);  // throws NotAxml
    }
    manifest_ok = true;
  }

  // Manifest + dex entries of one installable package archive.
  void consume_apk(const ZipArchive& archive, const std::string& prefix,
                   bool want_manifest) {
    if (want_manifest) {
      try {
        parse_manifest_bytes(archive.read("AndroidManifest.xml"));
      } catch (const ParseError& e) {
        degrade("manifest", prefix + e.what());
      }
    }
    std::vector<std::string> dexes = dex_entry_names(archive);
    for (const std::string& name : dexes) {
      deadline.poll();
      any_code_entry = true;
      try {
        CodeModel model = parse_dex(archive.read(name));
        code.merge(std::move(model));
      } catch (const ParseError& e) {
        all_code_ok = false;
        degrade("bytecode", prefix + name + ": " + e.what());
      }
    }
  }

  void consume_xapk(const ZipArchive& archive) {
    std::vector<std::string> inner = inner_apk_names(archive);
    bool manifest_taken = false;
    for (const std::string& name : inner) {
      deadline.poll();
      try {
        ZipArchive sub = ZipArchive::from_bytes(archive.read(name));
        note_duplicates(sub, "container", report.degradations);
        bool want = !manifest_taken && sub.has("AndroidManifest.xml");
        consume_apk(sub, name + ": ", want);
        if (want && manifest_ok) manifest_taken = true;
      } catch (const ParseError& e) {
        all_code_ok = false;
        degrade("container", name + ": " + e.what());
      }
    }
    if (!manifest_taken) {
      degrade("manifest", "NoSuchEntry: no inner package carries "
                          "AndroidManifest.xml");
    }
  }

  void consume_aar(const ZipArchive& archive) {
    try {
      parse_manifest_bytes(archive.read("AndroidManifest.xml"));
    } catch (const ParseError& e) {
      degrade("manifest", std::string(e.what()));
    }
    if (!archive.has("classes.jar")) {
      degrade("bytecode", "NoSuchEntry: classes.jar");
      return;
    }
    try {
      ZipArchive jar = ZipArchive::from_bytes(archive.read("classes.jar"));
      note_duplicates(jar, "container", report.degradations);
      std::vector<std::string> classes;
      for (const ZipEntry& entry : jar.entries()) {
        if (ends_with(entry.name, ".class")) classes.push_back(entry.name);
      }
      std::sort(classes.begin(), classes.end());
      classes.erase(std::unique(classes.begin(), classes.end()),
                    classes.end());
      for (const std::string& name : classes) {
        deadline.poll();
        any_code_entry = true;
        try {
          code.merge(parse_class(jar.read(name)));
        } catch (const ParseError& e) {
          all_code_ok = false;
          degrade("bytecode", "classes.jar!" + name + ": " + e.what());
        }
      }
    } catch (const ParseError& e) {
      any_code_entry = true;
      all_code_ok = false;
      degrade("bytecode", std::string("classes.jar: ") + e.what());
    }
  }

  void run(std::vector<uint8_t> bytes) {
    ZipArchive archive = [&] {
      try {
        return ZipArchive::from_bytes(std::move(bytes));
      } catch (const ParseError& e) {
        degrade("container", e.what());
        throw ContainerFailed{};
      }
    }();
    report.artifact_kind = classify(archive);
    if (report.artifact_kind == ArtifactKind::Unknown) {
      degrade("container", "UnrecognizedLayout: no manifest, bytecode, or "
                           "inner package entries");
      return;
    }
    note_duplicates(archive, "container", report.degradations);
    switch (report.artifact_kind) {
      case ArtifactKind::Apk:
        consume_apk(archive, "", /*want_manifest=*/true);
        break;
      case ArtifactKind::Xapk:
        consume_xapk(archive);
        break;
      case ArtifactKind::Aar:
        consume_aar(archive);
        break;
      case ArtifactKind::Unknown:
        break;
    }
  }

  ScanReport finish() {
    if (!manifest_ok) {
      report.set_label = SetLabel::A;
      report.findings.clear();
      if (report.degradations.empty()) {
        degrade("manifest", "NoSuchEntry: AndroidManifest.xml");
      }
      return std::move(report);
    }
    if (!manifest.package.empty()) report.app_id = manifest.package;
    report.permissions = manifest.permissions;
    bool full = any_code_entry && all_code_ok && !timed_out;
    try {
      deadline.poll();
      if (full) {
        report.set_label = SetLabel::C;
        report.findings = run_all(manifest, &code, Scope::Full, cfg);
      } else {
        if (!any_code_entry) {
          degrade("bytecode", "NoSuchEntry: no code entries in container");
        }
        report.set_label = SetLabel::B;
        report.findings = run_all(manifest, nullptr, Scope::PlatformOnly,
                                  cfg);
      }
    } catch (const TimeoutExpired&) {
      degrade("timeout", "Timeout: scan budget of " +
                             std::to_string(cfg.timeout_secs) +
                             "s exceeded before evaluation");
      report.set_label = SetLabel::B;
      report.findings = run_all(manifest, nullptr, Scope::PlatformOnly, cfg);
    }
    return std::move(report);
  }
};

ScanReport scan_impl(std::vector<uint8_t> bytes, const std::string& source,
                     const CheckConfig& config) {
  auto start = Clock::now();
  Scanner scanner(source, config);
  try {
    scanner.run(std::move(bytes));
  } catch (const ContainerFailed&) {
    // Already recorded; the report stays in set A.
  } catch (const TimeoutExpired&) {
    scanner.timed_out = true;
    scanner.degrade("timeout", "Timeout: scan budget of " +
                                   std::to_string(config.timeout_secs) +
                                   "s exceeded while parsing");
  } catch (const ParseError& e) {
    scanner.degrade("scan", e.what());
  } catch (const std::exception& e) {
    scanner.degrade("scan", std::string("InternalError: ") + e.what());
  }
  ScanReport report = scanner.finish();
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - start)
          .count();
  return report;
}

}  // namespace

const char* to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Apk: return "apk";
    case ArtifactKind::Xapk: return "xapk";
    case ArtifactKind::Aar: return "aar";
    case ArtifactKind::Unknown: return "unknown";
  }
  return "unknown";
}

const char* to_string(SetLabel label) {
  switch (label) {
    case SetLabel::A: return "A";
    case SetLabel::B: return "B";
    case SetLabel::C: return "C";
  }
  return "A";
}

bool ScanReport::has_violation() const {
  return std::any_of(findings.begin(), findings.end(), [](const Finding& f) {
    return f.verdict.state == VerdictState::Violation;
  });
}

ArtifactKind classify(const ZipArchive& archive) {
  if (archive.entries().empty()) return ArtifactKind::Unknown;
  bool any_dex = false;
  for (const ZipEntry& entry : archive.entries()) {
    if (ends_with(entry.name, ".apk")) return ArtifactKind::Xapk;
    if (ends_with(entry.name, ".dex")) any_dex = true;
  }
  if (archive.has("classes.jar")) return ArtifactKind::Aar;
  if (archive.has("AndroidManifest.xml")) {
    try {
      std::vector<uint8_t> head = archive.read("AndroidManifest.xml");
      if (looks_binary_xml(head)) return ArtifactKind::Apk;
      if (looks_plain_xml(head)) return ArtifactKind::Aar;
    } catch (const ParseError&) {
      // Unreadable manifest entry: fall through to the bytecode signal.
    }
  }
  if (any_dex) return ArtifactKind::Apk;
  return ArtifactKind::Unknown;
}

ScanReport scan(const std::filesystem::path& path,
                const CheckConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(ErrorKind::IoFailure,
                     "cannot open " + path.string() + " for reading");
  }
  std::vector<uint8_t> bytes{std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>()};
  if (in.bad()) {
    throw ParseError(ErrorKind::IoFailure, "read failed: " + path.string());
  }
  return scan_impl(std::move(bytes), path.string(), config);
}

ScanReport scan_bytes(std::vector<uint8_t> data, const std::string& source,
                      const CheckConfig& config) {
  return scan_impl(std::move(data), source, config);
}

std::vector<ScanReport> scan_corpus(
    const std::vector<std::filesystem::path>& paths, int parallelism,
    const CheckConfig& config) {
  std::vector<ScanReport> results(paths.size());
  if (paths.empty()) return results;
  size_t workers = static_cast<size_t>(std::max(1, parallelism));
  workers = std::min(workers, paths.size());

  std::mutex mutex;
  size_t next = 0;
  auto worker = [&] {
    for (;;) {
      size_t index;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next >= paths.size()) return;
        index = next++;
      }
      try {
        results[index] = scan(paths[index], config);
      } catch (const ParseError& e) {
        ScanReport failed;
        failed.source = paths[index].string();
        failed.app_id = stem_of(paths[index].string());
        failed.set_label = SetLabel::A;
        failed.degradations.push_back({"io", e.what()});
        results[index] = std::move(failed);
      } catch (const std::exception& e) {
        ScanReport failed;
        failed.source = paths[index].string();
        failed.app_id = stem_of(paths[index].string());
        failed.set_label = SetLabel::A;
        failed.degradations.push_back(
            {"scan", std::string("InternalError: ") + e.what()});
        results[index] = std::move(failed);
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return results;
}

}  // namespace apkaudit
