#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "regulab/instance.hpp"
#include "regulab/newton.hpp"
#include "regulab/report.hpp"

namespace regulab {

struct RunOptions {
  std::uint64_t seed = 0;
  bool timing = false;
};

/// Runs one instance's task. Task errors are caught and recorded in the row.
ReportRow run_task(const ExperimentInstance& inst, const RunOptions& opts);

/// The Newton run behind the "newton" task, exposed for the table emitter.
NewtonTrace run_newton(const ExperimentInstance& inst, const RunOptions& opts);

struct BatchOptions {
  RunOptions run;
  int parallel = 1;
  std::ostream* progress = nullptr;  // per-instance lines when set
};

struct BatchSummary {
  std::vector<ReportRow> rows;
  int failures = 0;         // rows whose task errored
  int schema_failures = 0;  // rows rejected by the instance schema

  /// 0 success, 1 task error, 2 schema error.
  int exit_code() const;
};

/// Rows come back in file order whatever the worker count.
BatchSummary run_batch(const std::vector<BatchEntry>& entries,
                       const BatchOptions& opts);

/// Parses, runs and writes report.csv / report.json into out_dir. File-level
/// schema problems throw SchemaError before anything is written.
BatchSummary run_batch_file(const std::string& path, const std::string& out_dir,
                            const BatchOptions& opts);

/// Seed from REGULAB_SEED when set, otherwise `fallback`.
std::uint64_t resolve_seed(std::uint64_t fallback);

}  // namespace regulab
