#include <json.hpp>

#include <cmath>
#include <cstdio>

#include "saesim/errors.hpp"
#include "saesim/io.hpp"

namespace saesim::io {

namespace {

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string stage_summary(const ScoreReport& r) {
  std::vector<std::string> parts;
  for (const auto& s : r.stage_counts) parts.push_back(s.stage + "=" + std::to_string(s.n_pairs));
  return join(parts, ";");
}

// JSON members of one report, in fixed order, without the enclosing braces.
std::string report_members(const ScoreReport& r, const std::string& indent) {
  std::string o;
  auto member = [&](const std::string& key, const std::string& value, bool last = false) {
    o += indent + quote(key) + ": " + value + (last ? "\n" : ",\n");
  };
  member("tool_version", quote(r.tool_version));
  member("metric", quote(to_string(r.metric)));
  member("paired_score", format_number(r.paired_score));
  member("null_mean", format_number(r.null_mean));
  member("null_samples", std::to_string(r.null_samples));
  member("p_value", format_number(r.p_value));
  member("n_pairs", std::to_string(r.n_pairs));
  member("seed", std::to_string(r.seed));
  member("rng", quote(r.rng));
  member("config_hash", quote(r.config_hash));

  std::vector<std::string> filters;
  for (const auto& f : r.filters_applied) filters.push_back(quote(f));
  member("filters_applied", "[" + join(filters, ", ") + "]");

  std::vector<std::string> stages;
  for (const auto& s : r.stage_counts) {
    stages.push_back("{\"stage\": " + quote(s.stage) + ", \"n_pairs\": " + std::to_string(s.n_pairs) + "}");
  }
  member("stage_counts", "[" + join(stages, ", ") + "]");

  std::vector<std::string> params;
  for (const auto& [k, v] : r.params) params.push_back(quote(k) + ": " + quote(v));
  member("params", "{" + join(params, ", ") + "}", true);
  return o;
}

const char* kReportColumns =
    "metric,paired_score,null_mean,null_samples,p_value,n_pairs,seed,rng,filters_applied,"
    "stage_counts,config_hash";

std::string report_cells(const ScoreReport& r) {
  std::vector<std::string> cells = {
      to_string(r.metric),
      format_number(r.paired_score),
      format_number(r.null_mean),
      std::to_string(r.null_samples),
      format_number(r.p_value),
      std::to_string(r.n_pairs),
      std::to_string(r.seed),
      csv_cell(r.rng),
      csv_cell(join(r.filters_applied, ";")),
      csv_cell(stage_summary(r)),
      csv_cell(r.config_hash),
  };
  return join(cells, ",");
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ReportFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReportFormat::csv : ReportFormat::json;
}

std::string format_report(const ScoreReport& report, ReportFormat format) {
  report.validate();
  if (format == ReportFormat::csv) {
    return std::string(kReportColumns) + "\n" + report_cells(report) + "\n";
  }
  return "{\n" + report_members(report, "  ") + "}\n";
}

std::string format_reports(std::span<const ScoreReport> reports, ReportFormat format) {
  for (const auto& r : reports) r.validate();
  if (format == ReportFormat::csv) {
    std::string out = std::string(kReportColumns) + "\n";
    for (const auto& r : reports) out += report_cells(r) + "\n";
    return out;
  }
  std::string out = "[\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out += "  {\n" + report_members(reports[i], "    ") + "  }" + (i + 1 < reports.size() ? ",\n" : "\n");
  }
  return out + "]\n";
}

std::string format_sweep(std::span<const SweepRow> rows, ReportFormat format) {
  for (const auto& row : rows) {
    if (row.status.empty()) row.report.validate();
  }
  if (format == ReportFormat::csv) {
    std::string out = std::string("layer_a,layer_b,") + kReportColumns + ",status\n";
    for (const auto& row : rows) {
      out += std::to_string(row.layer_a) + "," + std::to_string(row.layer_b) + ",";
      if (row.status.empty()) {
        out += report_cells(row.report) + ",ok\n";
      } else {
        out += to_string(row.report.metric) + ",,,,,,,,,,," + csv_cell(row.status) + "\n";
      }
    }
    return out;
  }
  std::string out = "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out += "  {\n    \"layer_a\": " + std::to_string(row.layer_a) + ",\n    \"layer_b\": " +
           std::to_string(row.layer_b) + ",\n    \"status\": " +
           quote(row.status.empty() ? "ok" : row.status) + ",\n";
    if (row.status.empty()) {
      out += report_members(row.report, "    ");
    } else {
      out += "    \"metric\": " + quote(to_string(row.report.metric)) + "\n";
    }
    out += std::string("  }") + (i + 1 < rows.size() ? ",\n" : "\n");
  }
  return out + "]\n";
}

std::string format_subspace(std::span<const SubspaceRow> rows, ReportFormat format) {
  for (const auto& row : rows) {
    if (row.status.empty()) row.report.validate();
  }
  if (format == ReportFormat::csv) {
    std::string out = std::string("category,test,") + kReportColumns + ",status\n";
    for (const auto& row : rows) {
      out += csv_cell(row.category) + "," + std::to_string(row.test) + ",";
      if (row.status.empty()) {
        out += report_cells(row.report) + ",ok\n";
      } else {
        out += to_string(row.report.metric) + ",,,,,,,,,,," + csv_cell(row.status) + "\n";
      }
    }
    return out;
  }
  std::string out = "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out += "  {\n    \"category\": " + quote(row.category) + ",\n    \"test\": " + std::to_string(row.test) +
           ",\n    \"status\": " + quote(row.status.empty() ? "ok" : row.status) + ",\n";
    if (row.status.empty()) {
      out += report_members(row.report, "    ");
    } else {
      out += "    \"metric\": " + quote(to_string(row.report.metric)) + "\n";
    }
    out += std::string("  }") + (i + 1 < rows.size() ? ",\n" : "\n");
  }
  return out + "]\n";
}

void write_report(const ScoreReport& report, const std::filesystem::path& path, ReportFormat format) {
  write_file(path, format_report(report, format));
}

void write_reports(std::span<const ScoreReport> reports, const std::filesystem::path& path,
                   ReportFormat format) {
  write_file(path, format_reports(reports, format));
}

void write_sweep(std::span<const SweepRow> rows, const std::filesystem::path& path, ReportFormat format) {
  write_file(path, format_sweep(rows, format));
}

void write_subspace(std::span<const SubspaceRow> rows, const std::filesystem::path& path,
                    ReportFormat format) {
  write_file(path, format_subspace(rows, format));
}

}  // namespace saesim::io
