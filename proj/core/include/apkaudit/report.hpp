#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "apkaudit/checks.hpp"
#include "apkaudit/pipeline.hpp"

namespace apkaudit {

enum class OutputFormat { Ascii, Csv, Json, Svg };

std::optional<OutputFormat> parse_output_format(std::string_view name);
const char* to_string(OutputFormat format);

// Column presentation order for verdict tables: DS1-DS12, CRYPTO1-CRYPTO4,
// TLS1-TLS4, PLAT1-PLAT6, PLAT8, PLAT7 (the two WebView hygiene checks
// swap places in presentation).
const std::vector<CheckId>& display_columns();

// Verdicts tabulated app-by-check. Columns may be a subset of the 28 (an
// imported single table); a missing cell means the source table carried no
// verdict for that app/check pair.
struct VerdictMatrix {
  std::vector<CheckId> columns;
  std::vector<std::string> apps;
  // cells[row][column], aligned with `apps` x `columns`.
  std::vector<std::vector<std::optional<Verdict>>> cells;

  const std::optional<Verdict>* cell(std::string_view app,
                                     CheckId check) const;

  friend bool operator==(const VerdictMatrix&, const VerdictMatrix&) =
      default;
};

// Tabulates scan results (row order = report order). Reports with no
// findings (set A) have nothing to tabulate and are omitted.
VerdictMatrix matrix_from_reports(const std::vector<ScanReport>& reports);

// Renders the matrix in three sections (data storage; crypto + network;
// platform). Ascii is a padded grid, Csv one header row per section with
// sections separated by a blank line, Json a schema-versioned document
// carrying structured verdict objects rather than glyphs. Svg renders the
// per-app violation bar chart of aggregate().
std::string render_tables(const VerdictMatrix& matrix, OutputFormat format);

// Inverse of render_tables for Csv and Json: import(render(m)) == m.
// Malformed input throws ParseError(ErrorKind::SchemaMismatch) whose
// message names the offending cell or field.
VerdictMatrix import_matrix(const std::string& text, OutputFormat format);

// Column-wise concatenation with app-row union (first-seen row order).
// Duplicate columns across parts throw SchemaMismatch.
VerdictMatrix merge_matrices(const std::vector<VerdictMatrix>& parts);

struct Aggregate {
  // App id -> number of Violation cells, in matrix row order.
  std::vector<std::pair<std::string, int>> per_app_violation_count;
  // Category name (DS, CRYPTO, TLS, PLAT) -> apps with at least one
  // Violation in that category, in matrix row order.
  std::map<std::string, std::vector<std::string>> per_category_apps;
  std::map<std::string, int> per_category_app_count;
};

Aggregate aggregate(const VerdictMatrix& matrix);

// Ascii summary, Csv tables, Json document, or Svg bar chart.
std::string render_aggregate(const Aggregate& agg, OutputFormat format);

// Permission-request matrix: rows are permission names (short names for
// android.permission.*), columns are apps. Row order: request frequency
// descending, then name.
struct PermissionMatrix {
  std::vector<std::string> apps;
  std::vector<std::string> permissions;
  std::vector<std::vector<bool>> cells;  // [permission][app]

  bool requested(std::string_view permission, std::string_view app) const;

  friend bool operator==(const PermissionMatrix&, const PermissionMatrix&) =
      default;
};

PermissionMatrix permission_matrix(const std::vector<ScanReport>& reports);

// Csv: "permission,<app>,..." header, "x" marks a request. Ascii pads the
// same grid; Json mirrors the structure. import_permissions inverts the
// Csv form (SchemaMismatch on malformed input).
std::string render_permissions(const PermissionMatrix& matrix,
                               OutputFormat format);
PermissionMatrix import_permissions(const std::string& csv);

// One scan report as a JSON document. Wall-clock timing is excluded unless
// requested so repeated runs stay byte-identical.
std::string report_to_json(const ScanReport& report,
                           bool include_timings = false);

}  // namespace apkaudit
