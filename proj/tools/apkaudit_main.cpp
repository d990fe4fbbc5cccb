// apkaudit — static security audit for Android application packages.
//
// Exit codes:
//   0  scan completed, no violations
//   1  scan completed, at least one violation
//   2  at least one artifact yielded no model (set A), or a table import
//      failed schema validation
//   3  usage errors: bad flags, missing inputs, unreadable paths given
//      directly on the command line, malformed configuration

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apkaudit/config.hpp"
#include "apkaudit/pipeline.hpp"
#include "apkaudit/report.hpp"

namespace fs = std::filesystem;
using namespace apkaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolations = 1;
constexpr int kExitDegraded = 2;
constexpr int kExitUsage = 3;

const char* format_extension(OutputFormat format) {
  switch (format) {
    case OutputFormat::Ascii: return "txt";
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
    case OutputFormat::Svg: return "svg";
  }
  return "out";
}

// Writes via a temp file in the same directory plus rename, so readers
// never observe a half-written file.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ParseError(ErrorKind::IoFailure,
                       "cannot write " + tmp.string());
    }
    out << content;
    if (!out.flush()) {
      throw ParseError(ErrorKind::IoFailure, "write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string read_file_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(ErrorKind::IoFailure, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string safe_file_stem(const std::string& name) {
  std::string out;
  for (char c : name) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
              c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out.empty() ? "report" : out;
}

struct CommonOptions {
  std::string out_dir;
  std::string format_name;
  std::string config_path;
  int jobs = 1;
  int timeout_secs = -1;  // -1: leave the config value alone
  std::string checks_filter;
  bool timings = false;
};

void add_scan_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--out", opts.out_dir,
                  "directory for report and table files");
  cmd->add_option("--format", opts.format_name,
                  "ascii|csv|json|svg (default: ascii to stdout, json for "
                  "--out files)");
  cmd->add_option("--jobs", opts.jobs, "worker threads for corpus scans")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--config", opts.config_path,
                  "scanner configuration file (key=value)")
      ->envname("APKAUDIT_CONFIG");
  cmd->add_option("--timeout", opts.timeout_secs,
                  "per-artifact scan budget in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--checks", opts.checks_filter,
                  "comma list of categories to evaluate: ds,crypto,tls,plat");
  cmd->add_flag("--timings", opts.timings,
                "include wall-clock timings in report files");
}

CheckConfig resolve_config(const CommonOptions& opts) {
  CheckConfig config;
  if (!opts.config_path.empty()) {
    config = load_config_file(opts.config_path);
  }
  if (opts.timeout_secs > 0) config.timeout_secs = opts.timeout_secs;
  return config;
}

std::optional<std::set<CheckCategory>> parse_checks_filter(
    const std::string& filter) {
  std::set<CheckCategory> keep;
  std::string token;
  std::istringstream in(filter);
  while (std::getline(in, token, ',')) {
    std::string low;
    for (char c : token) {
      low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (low == "ds") {
      keep.insert(CheckCategory::DS);
    } else if (low == "crypto") {
      keep.insert(CheckCategory::CRYPTO);
    } else if (low == "tls") {
      keep.insert(CheckCategory::TLS);
    } else if (low == "plat") {
      keep.insert(CheckCategory::PLAT);
    } else {
      return std::nullopt;
    }
  }
  if (keep.empty()) return std::nullopt;
  return keep;
}

// Deselected categories stay in the table but carry no decision.
void mask_unselected(std::vector<ScanReport>& reports,
                     const std::set<CheckCategory>& keep) {
  for (ScanReport& report : reports) {
    for (Finding& finding : report.findings) {
      if (keep.count(finding.check.category) == 0) {
        finding.verdict = {VerdictState::Unverifiable, ""};
        finding.evidence.clear();
        finding.note = "deselected on the command line";
      }
    }
  }
}

int exit_code_for(const std::vector<ScanReport>& reports) {
  bool degraded = false;
  bool violations = false;
  for (const ScanReport& report : reports) {
    if (report.set_label == SetLabel::A) degraded = true;
    if (report.has_violation()) violations = true;
  }
  if (degraded) return kExitDegraded;
  if (violations) return kExitViolations;
  return kExitOk;
}

int fail_usage(const std::string& message) {
  std::cerr << "apkaudit: " << message << "\n";
  return kExitUsage;
}

std::optional<std::vector<fs::path>> validate_inputs(
    const std::vector<std::string>& inputs) {
  std::vector<fs::path> paths;
  for (const std::string& input : inputs) {
    fs::path path(input);
    std::error_code ec;
    if (!fs::exists(path, ec) || fs::is_directory(path, ec)) {
      return std::nullopt;
    }
    paths.push_back(path);
  }
  return paths;
}

int run_scan(const std::vector<std::string>& inputs, CommonOptions& opts) {
  CheckConfig config;
  try {
    config = resolve_config(opts);
  } catch (const ParseError& e) {
    return fail_usage(e.what());
  }
  std::optional<std::set<CheckCategory>> keep;
  if (!opts.checks_filter.empty()) {
    keep = parse_checks_filter(opts.checks_filter);
    if (!keep) {
      return fail_usage("--checks expects a comma list of ds,crypto,tls,plat");
    }
  }
  auto paths = validate_inputs(inputs);
  if (!paths) return fail_usage("input path missing or not a file");

  OutputFormat format = opts.out_dir.empty() ? OutputFormat::Ascii
                                             : OutputFormat::Json;
  if (!opts.format_name.empty()) {
    auto parsed = parse_output_format(opts.format_name);
    if (!parsed) return fail_usage("unknown --format " + opts.format_name);
    format = *parsed;
  }

  std::vector<ScanReport> reports = scan_corpus(*paths, opts.jobs, config);
  if (keep) mask_unselected(reports, *keep);

  VerdictMatrix matrix = matrix_from_reports(reports);
  try {
    if (!opts.out_dir.empty()) {
      fs::create_directories(opts.out_dir);
      std::set<std::string> used;
      for (const ScanReport& report : reports) {
        std::string stem = safe_file_stem(report.app_id);
        std::string name = stem;
        for (int i = 2; used.count(name); ++i) {
          name = stem + "_" + std::to_string(i);
        }
        used.insert(name);
        write_atomic(fs::path(opts.out_dir) / (name + ".report.json"),
                     report_to_json(report, opts.timings));
      }
      write_atomic(fs::path(opts.out_dir) /
                       (std::string("matrix.") + format_extension(format)),
                   render_tables(matrix, format));
      write_atomic(fs::path(opts.out_dir) / (std::string("aggregate.") +
                                             format_extension(format)),
                   render_aggregate(aggregate(matrix), format));
    } else {
      std::cout << render_tables(matrix, format);
      if (format == OutputFormat::Ascii) {
        std::cout << "\n" << render_aggregate(aggregate(matrix), format);
      }
    }
  } catch (const ParseError& e) {
    std::cerr << "apkaudit: " << e.what() << "\n";
    return kExitDegraded;
  }
  return exit_code_for(reports);
}

int run_permissions(const std::vector<std::string>& inputs,
                    CommonOptions& opts, const std::string& table_path) {
  OutputFormat format = OutputFormat::Ascii;
  if (!opts.format_name.empty()) {
    auto parsed = parse_output_format(opts.format_name);
    if (!parsed) return fail_usage("unknown --format " + opts.format_name);
    format = *parsed;
  }
  if (format == OutputFormat::Svg) {
    return fail_usage("svg output is not defined for permission matrices");
  }

  PermissionMatrix matrix;
  std::vector<ScanReport> reports;
  if (!table_path.empty()) {
    if (!inputs.empty()) {
      return fail_usage("--table and artifact inputs cannot be combined");
    }
    try {
      matrix = import_permissions(read_file_text(table_path));
    } catch (const ParseError& e) {
      if (e.kind() == ErrorKind::IoFailure) return fail_usage(e.what());
      std::cerr << "apkaudit: " << e.what() << "\n";
      return kExitDegraded;
    }
  } else {
    if (inputs.empty()) {
      return fail_usage("permissions needs artifact inputs or --table");
    }
    CheckConfig config;
    try {
      config = resolve_config(opts);
    } catch (const ParseError& e) {
      return fail_usage(e.what());
    }
    auto paths = validate_inputs(inputs);
    if (!paths) return fail_usage("input path missing or not a file");
    reports = scan_corpus(*paths, opts.jobs, config);
    matrix = permission_matrix(reports);
  }

  std::string rendered = render_permissions(matrix, format);
  if (!opts.out_dir.empty()) {
    try {
      fs::create_directories(opts.out_dir);
      write_atomic(fs::path(opts.out_dir) / (std::string("permissions.") +
                                             format_extension(format)),
                   rendered);
    } catch (const std::exception& e) {
      std::cerr << "apkaudit: " << e.what() << "\n";
      return kExitDegraded;
    }
  } else {
    std::cout << rendered;
  }
  if (!table_path.empty()) return kExitOk;
  return exit_code_for(reports);
}

int run_replay(const std::vector<std::string>& inputs, CommonOptions& opts) {
  OutputFormat format = OutputFormat::Ascii;
  if (!opts.format_name.empty()) {
    auto parsed = parse_output_format(opts.format_name);
    if (!parsed) return fail_usage("unknown --format " + opts.format_name);
    format = *parsed;
  }
  std::vector<VerdictMatrix> parts;
  for (const std::string& input : inputs) {
    std::string text;
    try {
      text = read_file_text(input);
    } catch (const ParseError& e) {
      return fail_usage(e.what());
    }
    OutputFormat table_format = fs::path(input).extension() == ".json"
                                    ? OutputFormat::Json
                                    : OutputFormat::Csv;
    try {
      parts.push_back(import_matrix(text, table_format));
    } catch (const ParseError& e) {
      std::cerr << "apkaudit: " << input << ": " << e.what() << "\n";
      return kExitDegraded;
    }
  }
  VerdictMatrix merged;
  try {
    merged = merge_matrices(parts);
  } catch (const ParseError& e) {
    std::cerr << "apkaudit: " << e.what() << "\n";
    return kExitDegraded;
  }
  Aggregate agg = aggregate(merged);
  std::string rendered = render_aggregate(agg, format);
  if (!opts.out_dir.empty()) {
    try {
      fs::create_directories(opts.out_dir);
      write_atomic(fs::path(opts.out_dir) / (std::string("aggregate.") +
                                             format_extension(format)),
                   rendered);
    } catch (const std::exception& e) {
      std::cerr << "apkaudit: " << e.what() << "\n";
      return kExitDegraded;
    }
  } else {
    std::cout << rendered;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"static security audit for Android application packages",
               "apkaudit"};
  app.require_subcommand(1);

  CommonOptions scan_opts;
  std::vector<std::string> scan_inputs;
  CLI::App* scan_cmd =
      app.add_subcommand("scan", "scan artifacts and tabulate verdicts");
  scan_cmd->add_option("inputs", scan_inputs, "apk/xapk/aar files")
      ->required();
  add_scan_options(scan_cmd, scan_opts);

  CommonOptions perm_opts;
  std::vector<std::string> perm_inputs;
  std::string perm_table;
  CLI::App* perm_cmd = app.add_subcommand(
      "permissions", "tabulate requested permissions across artifacts");
  perm_cmd->add_option("inputs", perm_inputs, "apk/xapk/aar files");
  perm_cmd->add_option("--table", perm_table,
                       "re-render an existing permission csv instead of "
                       "scanning");
  add_scan_options(perm_cmd, perm_opts);

  CommonOptions replay_opts;
  std::vector<std::string> replay_inputs;
  CLI::App* replay_cmd = app.add_subcommand(
      "replay", "recompute aggregates from saved verdict tables");
  replay_cmd->add_option("tables", replay_inputs, "verdict tables (csv/json)")
      ->required();
  replay_cmd->add_option("--out", replay_opts.out_dir,
                         "directory for the aggregate file");
  replay_cmd->add_option("--format", replay_opts.format_name,
                         "ascii|csv|json|svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (scan_cmd->parsed()) return run_scan(scan_inputs, scan_opts);
    if (perm_cmd->parsed()) {
      return run_permissions(perm_inputs, perm_opts, perm_table);
    }
    if (replay_cmd->parsed()) return run_replay(replay_inputs, replay_opts);
  } catch (const std::exception& e) {
    std::cerr << "apkaudit: " << e.what() << "\n";
    return kExitDegraded;
  }
  return kExitUsage;
}
