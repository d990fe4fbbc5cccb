#include "apkaudit/report.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "json.hpp"

namespace apkaudit {
namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void schema_fail(const std::string& what) {
  throw ParseError(ErrorKind::SchemaMismatch, what);
}

// ------------------------------------------------------------ sections

struct SectionSpec {
  const char* name;
  bool (*contains)(CheckCategory);
};

constexpr std::array<SectionSpec, 3> kSections = {{
    {"DS", [](CheckCategory c) { return c == CheckCategory::DS; }},
    {"CRYPTO/TLS",
     [](CheckCategory c) {
       return c == CheckCategory::CRYPTO || c == CheckCategory::TLS;
     }},
    {"PLAT", [](CheckCategory c) { return c == CheckCategory::PLAT; }},
}};

std::vector<size_t> section_columns(const VerdictMatrix& matrix,
                                    const SectionSpec& section) {
  std::vector<size_t> out;
  for (size_t i = 0; i < matrix.columns.size(); ++i) {
    if (section.contains(matrix.columns[i].category)) out.push_back(i);
  }
  return out;
}

std::vector<size_t> section_rows(const VerdictMatrix& matrix,
                                 const std::vector<size_t>& columns) {
  std::vector<size_t> out;
  for (size_t r = 0; r < matrix.apps.size(); ++r) {
    bool any = std::any_of(columns.begin(), columns.end(), [&](size_t c) {
      return matrix.cells[r][c].has_value();
    });
    if (any) out.push_back(r);
  }
  return out;
}

// ------------------------------------------------------------ verdict json

const char* state_name(VerdictState state) {
  switch (state) {
    case VerdictState::Violation: return "violation";
    case VerdictState::Pass: return "pass";
    case VerdictState::NotApplicable: return "not_applicable";
    case VerdictState::Unverifiable: return "unverifiable";
  }
  return "?";
}

std::optional<VerdictState> state_from_name(std::string_view name) {
  if (name == "violation") return VerdictState::Violation;
  if (name == "pass") return VerdictState::Pass;
  if (name == "not_applicable") return VerdictState::NotApplicable;
  if (name == "unverifiable") return VerdictState::Unverifiable;
  return std::nullopt;
}

ordered_json verdict_to_json(const Verdict& verdict) {
  ordered_json out;
  out["state"] = state_name(verdict.state);
  if (!verdict.qualifier.empty()) out["qualifier"] = verdict.qualifier;
  return out;
}

// ------------------------------------------------------------ csv helpers

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::vector<std::vector<std::string>> csv_sections(const std::string& text) {
  std::vector<std::vector<std::string>> sections;
  std::vector<std::string> current;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!current.empty()) sections.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(line);
    }
  }
  if (!current.empty()) sections.push_back(std::move(current));
  return sections;
}

// ------------------------------------------------------------ ascii grid

std::string pad(const std::string& text, size_t width) {
  std::string out = text;
  out.append(width > text.size() ? width - text.size() : 0, ' ');
  return out;
}

std::string render_grid(const std::string& corner,
                        const std::vector<std::string>& col_names,
                        const std::vector<std::string>& row_names,
                        const std::vector<std::vector<std::string>>& cells) {
  size_t lead = corner.size();
  for (const std::string& name : row_names) lead = std::max(lead, name.size());
  std::vector<size_t> widths(col_names.size());
  for (size_t c = 0; c < col_names.size(); ++c) {
    widths[c] = col_names[c].size();
    for (size_t r = 0; r < row_names.size(); ++r) {
      widths[c] = std::max(widths[c], cells[r][c].size());
    }
  }
  std::string out = pad(corner, lead);
  for (size_t c = 0; c < col_names.size(); ++c) {
    out += "  " + pad(col_names[c], widths[c]);
  }
  out += '\n';
  for (size_t r = 0; r < row_names.size(); ++r) {
    std::string line = pad(row_names[r], lead);
    for (size_t c = 0; c < col_names.size(); ++c) {
      line += "  " + pad(cells[r][c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

// ------------------------------------------------------------ svg chart

std::string svg_bar_chart(const Aggregate& agg) {
  const auto& counts = agg.per_app_violation_count;
  int max_count = 1;
  for (const auto& [app, n] : counts) max_count = std::max(max_count, n);
  const int bar_w = 28;
  const int gap = 14;
  const int plot_h = 160;
  const int left = 16;
  const int top = 24;
  const int bottom = 28;
  int width = left * 2 + static_cast<int>(counts.size()) * (bar_w + gap);
  int height = top + plot_h + bottom;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " +
         std::to_string(height) + "\">\n";
  svg += "<title>violations per app</title>\n";
  int x = left;
  for (const auto& [app, n] : counts) {
    int h = n * plot_h / max_count;
    int y = top + plot_h - h;
    svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
           "\" width=\"" + std::to_string(bar_w) + "\" height=\"" +
           std::to_string(h) + "\" fill=\"#4477aa\"/>\n";
    svg += "<text x=\"" + std::to_string(x + bar_w / 2) + "\" y=\"" +
           std::to_string(y - 4) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + std::to_string(n) +
           "</text>\n";
    svg += "<text x=\"" + std::to_string(x + bar_w / 2) + "\" y=\"" +
           std::to_string(top + plot_h + 16) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + app +
           "</text>\n";
    x += bar_w + gap;
  }
  svg += "<line x1=\"" + std::to_string(left - 4) + "\" y1=\"" +
         std::to_string(top + plot_h) + "\" x2=\"" +
         std::to_string(x - gap + 4) + "\" y2=\"" +
         std::to_string(top + plot_h) +
         "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace

// ------------------------------------------------------------ formats

std::optional<OutputFormat> parse_output_format(std::string_view name) {
  if (name == "ascii") return OutputFormat::Ascii;
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  if (name == "svg") return OutputFormat::Svg;
  return std::nullopt;
}

const char* to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::Ascii: return "ascii";
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
    case OutputFormat::Svg: return "svg";
  }
  return "?";
}

const std::vector<CheckId>& display_columns() {
  static const std::vector<CheckId> order = [] {
    std::vector<CheckId> out;
    for (int i = 1; i <= 12; ++i) out.push_back({CheckCategory::DS, i});
    for (int i = 1; i <= 4; ++i) out.push_back({CheckCategory::CRYPTO, i});
    for (int i = 1; i <= 4; ++i) out.push_back({CheckCategory::TLS, i});
    for (int i : {1, 2, 3, 4, 5, 6, 8, 7}) {
      out.push_back({CheckCategory::PLAT, i});
    }
    return out;
  }();
  return order;
}

// ------------------------------------------------------------ matrix

const std::optional<Verdict>* VerdictMatrix::cell(std::string_view app,
                                                  CheckId check) const {
  auto row = std::find(apps.begin(), apps.end(), app);
  auto col = std::find(columns.begin(), columns.end(), check);
  if (row == apps.end() || col == columns.end()) return nullptr;
  return &cells[static_cast<size_t>(row - apps.begin())]
               [static_cast<size_t>(col - columns.begin())];
}

VerdictMatrix matrix_from_reports(const std::vector<ScanReport>& reports) {
  VerdictMatrix matrix;
  matrix.columns = display_columns();
  for (const ScanReport& report : reports) {
    if (report.findings.empty()) continue;  // nothing tabulable (set A)
    std::vector<std::optional<Verdict>> row(matrix.columns.size());
    for (const Finding& finding : report.findings) {
      auto col = std::find(matrix.columns.begin(), matrix.columns.end(),
                           finding.check);
      if (col != matrix.columns.end()) {
        row[static_cast<size_t>(col - matrix.columns.begin())] =
            finding.verdict;
      }
    }
    matrix.apps.push_back(report.app_id);
    matrix.cells.push_back(std::move(row));
  }
  return matrix;
}

std::string render_tables(const VerdictMatrix& matrix, OutputFormat format) {
  if (format == OutputFormat::Svg) {
    return render_aggregate(aggregate(matrix), OutputFormat::Svg);
  }
  if (format == OutputFormat::Json) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["sections"] = ordered_json::array();
    for (const SectionSpec& section : kSections) {
      std::vector<size_t> cols = section_columns(matrix, section);
      if (cols.empty()) continue;
      ordered_json sec;
      sec["name"] = section.name;
      sec["columns"] = ordered_json::array();
      for (size_t c : cols) sec["columns"].push_back(to_string(matrix.columns[c]));
      sec["rows"] = ordered_json::array();
      for (size_t r : section_rows(matrix, cols)) {
        ordered_json row;
        row["app"] = matrix.apps[r];
        row["cells"] = ordered_json::array();
        for (size_t c : cols) {
          const std::optional<Verdict>& v = matrix.cells[r][c];
          row["cells"].push_back(v ? verdict_to_json(*v)
                                   : ordered_json(nullptr));
        }
        sec["rows"].push_back(std::move(row));
      }
      doc["sections"].push_back(std::move(sec));
    }
    return doc.dump(2) + "\n";
  }

  std::string out;
  bool first = true;
  for (const SectionSpec& section : kSections) {
    std::vector<size_t> cols = section_columns(matrix, section);
    if (cols.empty()) continue;
    std::vector<size_t> rows = section_rows(matrix, cols);
    if (!first) out += '\n';
    first = false;
    if (format == OutputFormat::Csv) {
      std::string header = "app";
      for (size_t c : cols) header += "," + to_string(matrix.columns[c]);
      out += header + '\n';
      for (size_t r : rows) {
        std::string line = matrix.apps[r];
        for (size_t c : cols) {
          const std::optional<Verdict>& v = matrix.cells[r][c];
          line += "," + (v ? verdict_glyph(*v) : std::string());
        }
        out += line + '\n';
      }
    } else {  // Ascii
      out += std::string(section.name) + '\n';
      std::vector<std::string> col_names, row_names;
      std::vector<std::vector<std::string>> cells;
      for (size_t c : cols) col_names.push_back(to_string(matrix.columns[c]));
      for (size_t r : rows) {
        row_names.push_back(matrix.apps[r]);
        std::vector<std::string> line;
        for (size_t c : cols) {
          const std::optional<Verdict>& v = matrix.cells[r][c];
          line.push_back(v ? verdict_glyph(*v) : std::string());
        }
        cells.push_back(std::move(line));
      }
      out += render_grid("app", col_names, row_names, cells);
    }
  }
  return out;
}

namespace {

VerdictMatrix import_matrix_csv(const std::string& text) {
  std::vector<std::vector<std::string>> sections = csv_sections(text);
  if (sections.empty()) schema_fail("no table sections found in csv input");
  VerdictMatrix matrix;
  for (const std::vector<std::string>& lines : sections) {
    std::vector<std::string> header = split_csv_line(lines.front());
    if (header.empty() || header[0] != "app") {
      schema_fail("section header must begin with 'app', got \"" +
                  lines.front() + "\"");
    }
    std::vector<size_t> col_index;
    for (size_t i = 1; i < header.size(); ++i) {
      std::optional<CheckId> id = parse_check_id(header[i]);
      if (!id) schema_fail("unknown check column \"" + header[i] + "\"");
      if (std::find(matrix.columns.begin(), matrix.columns.end(), *id) !=
          matrix.columns.end()) {
        schema_fail("duplicate check column \"" + header[i] + "\"");
      }
      matrix.columns.push_back(*id);
      col_index.push_back(matrix.columns.size() - 1);
    }
    for (auto& row : matrix.cells) row.resize(matrix.columns.size());
    for (size_t li = 1; li < lines.size(); ++li) {
      std::vector<std::string> fields = split_csv_line(lines[li]);
      if (fields.size() != header.size()) {
        schema_fail("row \"" + (fields.empty() ? "" : fields[0]) +
                    "\": expected " + std::to_string(header.size() - 1) +
                    " cells, got " + std::to_string(fields.size() - 1));
      }
      const std::string& app = fields[0];
      size_t row;
      auto found = std::find(matrix.apps.begin(), matrix.apps.end(), app);
      if (found == matrix.apps.end()) {
        matrix.apps.push_back(app);
        matrix.cells.emplace_back(matrix.columns.size());
        row = matrix.apps.size() - 1;
      } else {
        row = static_cast<size_t>(found - matrix.apps.begin());
      }
      for (size_t i = 1; i < fields.size(); ++i) {
        if (fields[i].empty()) continue;
        std::optional<Verdict> v = verdict_from_glyph(fields[i]);
        if (!v) {
          schema_fail("unknown glyph \"" + fields[i] + "\" at app " + app +
                      ", column " + header[i]);
        }
        matrix.cells[row][col_index[i - 1]] = *v;
      }
    }
  }
  return matrix;
}

VerdictMatrix import_matrix_json(const std::string& text) {
  ordered_json doc = ordered_json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    schema_fail("input is not a json object");
  }
  if (!doc.contains("schema_version") ||
      doc["schema_version"] != ordered_json(1)) {
    schema_fail("missing or unsupported schema_version (expected 1)");
  }
  if (!doc.contains("sections") || !doc["sections"].is_array()) {
    schema_fail("missing sections array");
  }
  VerdictMatrix matrix;
  for (const ordered_json& sec : doc["sections"]) {
    if (!sec.is_object() || !sec.contains("columns") ||
        !sec["columns"].is_array() || !sec.contains("rows") ||
        !sec["rows"].is_array()) {
      schema_fail("section must carry columns and rows arrays");
    }
    std::vector<size_t> col_index;
    for (const ordered_json& col : sec["columns"]) {
      if (!col.is_string()) schema_fail("column names must be strings");
      std::optional<CheckId> id = parse_check_id(col.get<std::string>());
      if (!id) {
        schema_fail("unknown check column \"" + col.get<std::string>() +
                    "\"");
      }
      if (std::find(matrix.columns.begin(), matrix.columns.end(), *id) !=
          matrix.columns.end()) {
        schema_fail("duplicate check column \"" + to_string(*id) + "\"");
      }
      matrix.columns.push_back(*id);
      col_index.push_back(matrix.columns.size() - 1);
    }
    for (auto& row : matrix.cells) row.resize(matrix.columns.size());
    for (const ordered_json& row : sec["rows"]) {
      if (!row.is_object() || !row.contains("app") ||
          !row["app"].is_string() || !row.contains("cells") ||
          !row["cells"].is_array()) {
        schema_fail("row must carry an app string and a cells array");
      }
      std::string app = row["app"].get<std::string>();
      if (row["cells"].size() != col_index.size()) {
        schema_fail("row \"" + app + "\": expected " +
                    std::to_string(col_index.size()) + " cells, got " +
                    std::to_string(row["cells"].size()));
      }
      size_t r;
      auto found = std::find(matrix.apps.begin(), matrix.apps.end(), app);
      if (found == matrix.apps.end()) {
        matrix.apps.push_back(app);
        matrix.cells.emplace_back(matrix.columns.size());
        r = matrix.apps.size() - 1;
      } else {
        r = static_cast<size_t>(found - matrix.apps.begin());
      }
      for (size_t i = 0; i < col_index.size(); ++i) {
        const ordered_json& cell = row["cells"][i];
        if (cell.is_null()) continue;
        std::string where = "row " + app + " column " +
                            to_string(matrix.columns[col_index[i]]);
        if (!cell.is_object() || !cell.contains("state") ||
            !cell["state"].is_string()) {
          schema_fail(where + ": cell must be null or carry a state string");
        }
        std::optional<VerdictState> state =
            state_from_name(cell["state"].get<std::string>());
        if (!state) {
          schema_fail(where + ": unknown state \"" +
                      cell["state"].get<std::string>() + "\"");
        }
        Verdict v;
        v.state = *state;
        if (cell.contains("qualifier")) {
          if (!cell["qualifier"].is_string()) {
            schema_fail(where + ": qualifier must be a string");
          }
          v.qualifier = cell["qualifier"].get<std::string>();
        }
        matrix.cells[r][col_index[i]] = v;
      }
    }
  }
  return matrix;
}

}  // namespace

VerdictMatrix import_matrix(const std::string& text, OutputFormat format) {
  switch (format) {
    case OutputFormat::Csv: return import_matrix_csv(text);
    case OutputFormat::Json: return import_matrix_json(text);
    default:
      schema_fail("matrices can only be imported from csv or json");
  }
}

VerdictMatrix merge_matrices(const std::vector<VerdictMatrix>& parts) {
  VerdictMatrix merged;
  for (const VerdictMatrix& part : parts) {
    std::vector<size_t> col_index;
    for (const CheckId& id : part.columns) {
      if (std::find(merged.columns.begin(), merged.columns.end(), id) !=
          merged.columns.end()) {
        schema_fail("duplicate check column \"" + to_string(id) +
                    "\" across merged tables");
      }
      merged.columns.push_back(id);
      col_index.push_back(merged.columns.size() - 1);
    }
    for (auto& row : merged.cells) row.resize(merged.columns.size());
    for (size_t r = 0; r < part.apps.size(); ++r) {
      size_t row;
      auto found =
          std::find(merged.apps.begin(), merged.apps.end(), part.apps[r]);
      if (found == merged.apps.end()) {
        merged.apps.push_back(part.apps[r]);
        merged.cells.emplace_back(merged.columns.size());
        row = merged.apps.size() - 1;
      } else {
        row = static_cast<size_t>(found - merged.apps.begin());
      }
      for (size_t c = 0; c < part.columns.size(); ++c) {
        merged.cells[row][col_index[c]] = part.cells[r][c];
      }
    }
  }
  return merged;
}

// ------------------------------------------------------------ aggregates

Aggregate aggregate(const VerdictMatrix& matrix) {
  Aggregate agg;
  static const std::array<const char*, 4> categories = {"DS", "CRYPTO",
                                                        "TLS", "PLAT"};
  for (const char* name : categories) {
    agg.per_category_apps[name];
    agg.per_category_app_count[name] = 0;
  }
  for (size_t r = 0; r < matrix.apps.size(); ++r) {
    int total = 0;
    std::map<std::string, bool> hit;
    for (size_t c = 0; c < matrix.columns.size(); ++c) {
      const std::optional<Verdict>& v = matrix.cells[r][c];
      if (v && v->state == VerdictState::Violation) {
        ++total;
        hit[to_string(matrix.columns[c].category)] = true;
      }
    }
    agg.per_app_violation_count.emplace_back(matrix.apps[r], total);
    for (const auto& [category, _] : hit) {
      agg.per_category_apps[category].push_back(matrix.apps[r]);
    }
  }
  for (auto& [category, apps] : agg.per_category_apps) {
    agg.per_category_app_count[category] = static_cast<int>(apps.size());
  }
  return agg;
}

std::string render_aggregate(const Aggregate& agg, OutputFormat format) {
  static const std::array<const char*, 4> order = {"DS", "CRYPTO", "TLS",
                                                   "PLAT"};
  if (format == OutputFormat::Svg) return svg_bar_chart(agg);
  if (format == OutputFormat::Json) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["per_app"] = ordered_json::array();
    for (const auto& [app, count] : agg.per_app_violation_count) {
      ordered_json row;
      row["app"] = app;
      row["violations"] = count;
      doc["per_app"].push_back(std::move(row));
    }
    doc["per_category"] = ordered_json::array();
    for (const char* category : order) {
      auto it = agg.per_category_apps.find(category);
      if (it == agg.per_category_apps.end()) continue;
      ordered_json row;
      row["category"] = category;
      row["count"] = static_cast<int>(it->second.size());
      row["apps"] = it->second;
      doc["per_category"].push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::string out = "app,violations\n";
    for (const auto& [app, count] : agg.per_app_violation_count) {
      out += app + "," + std::to_string(count) + "\n";
    }
    out += "\ncategory,count,apps\n";
    for (const char* category : order) {
      auto it = agg.per_category_apps.find(category);
      if (it == agg.per_category_apps.end()) continue;
      std::string apps;
      for (const std::string& app : it->second) {
        if (!apps.empty()) apps += ";";
        apps += app;
      }
      out += std::string(category) + "," +
             std::to_string(it->second.size()) + "," + apps + "\n";
    }
    return out;
  }
  std::string out = "violations per app\n";
  for (const auto& [app, count] : agg.per_app_violation_count) {
    out += "  " + app + ": " + std::to_string(count) + "\n";
  }
  out += "apps with at least one violation, per category\n";
  for (const char* category : order) {
    auto it = agg.per_category_apps.find(category);
    if (it == agg.per_category_apps.end()) continue;
    std::string apps;
    for (const std::string& app : it->second) {
      if (!apps.empty()) apps += ", ";
      apps += app;
    }
    out += "  " + std::string(category) + ": " +
           std::to_string(it->second.size());
    if (!apps.empty()) out += " (" + apps + ")";
    out += "\n";
  }
  return out;
}

// ------------------------------------------------------------ permissions

bool PermissionMatrix::requested(std::string_view permission,
                                 std::string_view app) const {
  auto row = std::find(permissions.begin(), permissions.end(), permission);
  auto col = std::find(apps.begin(), apps.end(), app);
  if (row == permissions.end() || col == apps.end()) return false;
  return cells[static_cast<size_t>(row - permissions.begin())]
              [static_cast<size_t>(col - apps.begin())];
}

PermissionMatrix permission_matrix(const std::vector<ScanReport>& reports) {
  constexpr std::string_view kPrefix = "android.permission.";
  PermissionMatrix matrix;
  std::vector<std::vector<std::string>> requested(reports.size());
  std::map<std::string, int> frequency;
  for (size_t i = 0; i < reports.size(); ++i) {
    matrix.apps.push_back(reports[i].app_id);
    for (const std::string& perm : reports[i].permissions) {
      std::string name = perm;
      if (name.rfind(kPrefix, 0) == 0) name = name.substr(kPrefix.size());
      if (std::find(requested[i].begin(), requested[i].end(), name) ==
          requested[i].end()) {
        requested[i].push_back(name);
        ++frequency[name];
      }
    }
  }
  for (const auto& [name, _] : frequency) matrix.permissions.push_back(name);
  std::sort(matrix.permissions.begin(), matrix.permissions.end(),
            [&](const std::string& a, const std::string& b) {
              if (frequency[a] != frequency[b]) {
                return frequency[a] > frequency[b];
              }
              return a < b;
            });
  matrix.cells.assign(matrix.permissions.size(),
                      std::vector<bool>(matrix.apps.size(), false));
  for (size_t r = 0; r < matrix.permissions.size(); ++r) {
    for (size_t c = 0; c < reports.size(); ++c) {
      matrix.cells[r][c] =
          std::find(requested[c].begin(), requested[c].end(),
                    matrix.permissions[r]) != requested[c].end();
    }
  }
  return matrix;
}

std::string render_permissions(const PermissionMatrix& matrix,
                               OutputFormat format) {
  if (format == OutputFormat::Json) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["apps"] = matrix.apps;
    doc["permissions"] = ordered_json::array();
    for (size_t r = 0; r < matrix.permissions.size(); ++r) {
      ordered_json row;
      row["name"] = matrix.permissions[r];
      row["requested"] = ordered_json::array();
      for (size_t c = 0; c < matrix.apps.size(); ++c) {
        row["requested"].push_back(static_cast<bool>(matrix.cells[r][c]));
      }
      doc["permissions"].push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::string out = "permission";
    for (const std::string& app : matrix.apps) out += "," + app;
    out += '\n';
    for (size_t r = 0; r < matrix.permissions.size(); ++r) {
      std::string line = matrix.permissions[r];
      for (size_t c = 0; c < matrix.apps.size(); ++c) {
        line += matrix.cells[r][c] ? ",x" : ",";
      }
      out += line + '\n';
    }
    return out;
  }
  // Ascii (and Svg, which has no natural form here) share the padded grid.
  std::vector<std::vector<std::string>> cells;
  for (size_t r = 0; r < matrix.permissions.size(); ++r) {
    std::vector<std::string> line;
    for (size_t c = 0; c < matrix.apps.size(); ++c) {
      line.push_back(matrix.cells[r][c] ? "x" : "");
    }
    cells.push_back(std::move(line));
  }
  return render_grid("permission", matrix.apps, matrix.permissions, cells);
}

PermissionMatrix import_permissions(const std::string& csv) {
  std::vector<std::vector<std::string>> sections = csv_sections(csv);
  if (sections.empty()) schema_fail("no rows found in permission csv");
  const std::vector<std::string>& lines = sections.front();
  std::vector<std::string> header = split_csv_line(lines.front());
  if (header.empty() || header[0] != "permission") {
    schema_fail("header must begin with 'permission', got \"" +
                lines.front() + "\"");
  }
  PermissionMatrix matrix;
  matrix.apps.assign(header.begin() + 1, header.end());
  for (size_t li = 1; li < lines.size(); ++li) {
    std::vector<std::string> fields = split_csv_line(lines[li]);
    if (fields.size() != header.size()) {
      schema_fail("row \"" + (fields.empty() ? "" : fields[0]) +
                  "\": expected " + std::to_string(header.size() - 1) +
                  " cells, got " + std::to_string(fields.size() - 1));
    }
    matrix.permissions.push_back(fields[0]);
    std::vector<bool> row;
    for (size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) {
        row.push_back(false);
      } else if (fields[i] == "x" || fields[i] == "X") {
        row.push_back(true);
      } else {
        schema_fail("unexpected cell \"" + fields[i] + "\" at permission " +
                    fields[0] + ", app " + header[i]);
      }
    }
    matrix.cells.push_back(std::move(row));
  }
  return matrix;
}

// ------------------------------------------------------------ report json

std::string report_to_json(const ScanReport& report, bool include_timings) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["app_id"] = report.app_id;
  doc["source"] = report.source;
  doc["artifact_kind"] = to_string(report.artifact_kind);
  doc["set_label"] = to_string(report.set_label);
  doc["permissions"] = report.permissions;
  doc["degradations"] = ordered_json::array();
  for (const Degradation& d : report.degradations) {
    ordered_json row;
    row["stage"] = d.stage;
    row["detail"] = d.detail;
    doc["degradations"].push_back(std::move(row));
  }
  doc["findings"] = ordered_json::array();
  for (const Finding& finding : report.findings) {
    ordered_json row;
    row["check"] = to_string(finding.check);
    row["masvs"] = finding.masvs_link;
    row["verdict"] = verdict_to_json(finding.verdict);
    row["evidence"] = ordered_json::array();
    for (const Evidence& e : finding.evidence) {
      ordered_json site;
      site["location"] = e.location;
      site["reason"] = e.reason;
      row["evidence"].push_back(std::move(site));
    }
    row["note"] = finding.note;
    doc["findings"].push_back(std::move(row));
  }
  if (include_timings) doc["wall_time_ms"] = report.wall_time_ms;
  return doc.dump(2) + "\n";
}

}  // namespace apkaudit
