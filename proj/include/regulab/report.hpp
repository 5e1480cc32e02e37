#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regulab/geometry.hpp"
#include "regulab/newton.hpp"

namespace regulab {

/// One row per (instance, task). Parameter and output cells are preformatted
/// text so CSV and JSON carry the same characters.
struct ReportRow {
  std::string instance_id;
  std::string task;
  std::map<std::string, std::string> parameters;
  std::map<std::string, std::string> outputs;
  std::optional<bool> pass;
  std::optional<std::string> error;  // set when the task errored
  std::optional<double> wall_time_ms;

  bool failed() const { return error.has_value(); }
};

/// Shortest round-trip decimal; "inf" / "-inf" for infinities.
std::string format_number(double v);
std::string format_number(const ExtReal& v);
/// Coordinates joined with ';'.
std::string format_vector(const Vector& v);
std::string format_bool(bool b);

/// Fixed leading columns instance_id, task, status, pass, error,
/// wall_time_ms, then the sorted union of parameters.* and outputs.*.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;
};
ReportTable tabulate(const std::vector<ReportRow>& rows);

/// RFC-4180: CRLF line ends, fields quoted when they contain a comma, quote
/// or line break.
std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& cells);
std::string report_csv(const ReportTable& t);
/// {"columns": [...], "rows": [{column: cell}, ...]} with string cells.
std::string report_json(const ReportTable& t);

/// Writes report.csv and report.json into out_dir (created if missing).
void write_reports(const std::vector<ReportRow>& rows, const std::string& out_dir);

/// CSV with columns iter, x, residual, error_to_ref, ratio (e_{k+1}/e_k^2).
/// Cells without data are empty.
std::string convergence_table(const NewtonTrace& trace);
void emit_convergence_table(const NewtonTrace& trace, const std::string& path);

}  // namespace regulab
