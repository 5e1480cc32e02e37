#include "regulab/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "regulab/errors.hpp"

namespace regulab {

namespace {

const std::vector<std::string> kLeading = {"instance_id", "task",  "status",
                                           "pass",        "error", "wall_time_ms"};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write to " + path + " failed");
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_number(const ExtReal& v) { return v.to_string(); }

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_number(v(i));
  }
  return out;
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

ReportTable tabulate(const std::vector<ReportRow>& rows) {
  std::set<std::string> extra;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.parameters) extra.insert("parameters." + k);
    for (const auto& [k, v] : r.outputs) extra.insert("outputs." + k);
  }
  ReportTable t;
  t.columns = kLeading;
  t.columns.insert(t.columns.end(), extra.begin(), extra.end());
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    cells.push_back(r.instance_id);
    cells.push_back(r.task);
    cells.push_back(r.failed() ? "failed" : "ok");
    cells.push_back(r.pass ? format_bool(*r.pass) : "");
    cells.push_back(r.error.value_or(""));
    cells.push_back(r.wall_time_ms ? format_number(*r.wall_time_ms) : "");
    for (const auto& col : extra) {
      const bool param = col.rfind("parameters.", 0) == 0;
      const auto& map = param ? r.parameters : r.outputs;
      const auto it = map.find(col.substr(param ? 11 : 8));
      cells.push_back(it == map.end() ? "" : it->second);
    }
    t.cells.push_back(std::move(cells));
  }
  return t;
}

std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& cells) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_field(fields[i]);
    }
    out += "\r\n";
  };
  line(header);
  for (const auto& row : cells) line(row);
  return out;
}

std::string report_csv(const ReportTable& t) { return to_csv(t.columns, t.cells); }

std::string report_json(const ReportTable& t) {
  // Rows keep column order, so use the insertion-ordered variant.
  nlohmann::ordered_json doc;
  doc["columns"] = t.columns;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.cells) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = row[i];
    doc["rows"].push_back(std::move(o));
  }
  return doc.dump(2) + "\n";
}

void write_reports(const std::vector<ReportRow>& rows, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir + ": " + ec.message());
  const ReportTable t = tabulate(rows);
  write_file((std::filesystem::path(out_dir) / "report.csv").string(), report_csv(t));
  write_file((std::filesystem::path(out_dir) / "report.json").string(), report_json(t));
}

std::string convergence_table(const NewtonTrace& trace) {
  if (trace.iterates.empty()) throw PreconditionError("convergence table: empty trace");
  const auto& err = trace.errors_to_ref;
  std::vector<std::vector<std::string>> cells;
  for (size_t k = 0; k < trace.iterates.size(); ++k) {
    std::vector<std::string> row;
    row.push_back(std::to_string(k));
    row.push_back(format_vector(trace.iterates[k]));
    row.push_back(format_number(trace.residuals[k]));
    row.push_back(err ? format_number((*err)[k]) : "");
    std::string ratio;
    if (err && k + 1 < err->size() && (*err)[k] > 0.0) {
      ratio = format_number((*err)[k + 1] / ((*err)[k] * (*err)[k]));
    }
    row.push_back(ratio);
    cells.push_back(std::move(row));
  }
  return to_csv({"iter", "x", "residual", "error_to_ref", "ratio"}, cells);
}

void emit_convergence_table(const NewtonTrace& trace, const std::string& path) {
  write_file(path, convergence_table(trace));
}

}  // namespace regulab
