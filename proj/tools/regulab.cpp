#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "regulab/batch.hpp"
#include "regulab/errors.hpp"
#include "regulab/report.hpp"

namespace {

using namespace regulab;

ExperimentInstance pick(const std::string& path, const std::string& id) {
  auto list = parse_instance_file(path);
  if (id.empty()) {
    if (list.size() != 1) {
      throw PreconditionError(path + " holds " + std::to_string(list.size()) +
                              " instances; choose one with --id");
    }
    return list.front();
  }
  for (auto& inst : list) {
    if (inst.id == id) return inst;
  }
  throw PreconditionError("no instance with id '" + id + "' in " + path);
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

int cmd_run(const std::string& batch, const std::string& out, int parallel,
            std::uint64_t seed, bool verbose, bool timing) {
  BatchOptions opts;
  opts.parallel = parallel;
  opts.run.seed = resolve_seed(seed);
  opts.run.timing = timing;
  if (verbose) opts.progress = &std::cerr;
  const auto summary = run_batch_file(batch, out, opts);
  int passed = 0;
  for (const auto& r : summary.rows) passed += r.pass.value_or(false) ? 1 : 0;
  std::cout << summary.rows.size() << " rows, " << passed << " pass, "
            << summary.failures << " task errors, " << summary.schema_failures
            << " schema errors\n";
  return summary.exit_code();
}

int cmd_newton(const std::string& file, const std::string& id,
               const std::vector<double>& x0, std::optional<double> tol,
               std::optional<int> max_iter, const std::string& table,
               std::uint64_t seed) {
  ExperimentInstance inst = pick(file, id);
  inst.task = "newton";
  ParamsSpec p = inst.par();
  if (!x0.empty()) p.x0 = to_vector(x0);
  if (tol) p.tol = *tol;
  if (max_iter) p.max_iter = *max_iter;
  inst.params = p;
  RunOptions opts;
  opts.seed = resolve_seed(seed);
  const auto trace = run_newton(inst, opts);
  if (!table.empty()) emit_convergence_table(trace, table);

  nlohmann::ordered_json out;
  out["instance_id"] = inst.id;
  out["iterations"] = trace.iterates.size() - 1;
  out["x_final"] = format_vector(trace.iterates.back());
  out["final_residual"] = format_number(trace.residuals.back());
  out["converged"] = trace.converged;
  if (trace.failed) out["failure"] = trace.failure;
  if (trace.rate) {
    out["exponent_hat"] = format_number(trace.rate->exponent_hat);
    out["gamma_hat"] = format_number(trace.rate->gamma_hat);
    out["rate_pairs"] = trace.rate->pairs;
  }
  std::cout << out.dump(2) << "\n";
  return trace.failed ? 1 : 0;
}

int cmd_estimate(const std::string& file, const std::string& id, std::uint64_t seed) {
  std::vector<ReportRow> rows;
  RunOptions opts;
  opts.seed = resolve_seed(seed);
  for (auto inst : parse_instance_file(file)) {
    if (!id.empty() && inst.id != id) continue;
    if (inst.task != "estimate-lip") inst.task = "estimate-rg";
    rows.push_back(run_task(inst, opts));
  }
  std::cout << report_json(tabulate(rows));
  for (const auto& r : rows) {
    if (r.failed()) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regulab: regularity moduli, sufficient conditions and Newton runs"};
  app.require_subcommand(1);

  std::string batch, out;
  int parallel = 1;
  std::uint64_t seed = 0;
  bool verbose = false, timing = false;
  auto* run = app.add_subcommand("run", "Run a batch file and write report.csv/report.json");
  run->add_option("batch", batch, "Batch instance file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Sampling seed (REGULAB_SEED overrides)");
  run->add_flag("--verbose", verbose, "Stream per-instance progress to stderr");
  run->add_flag("--timing", timing, "Record wall_time_ms (makes reports run-dependent)");

  std::string file, id, table;
  std::vector<double> x0;
  std::optional<double> tol;
  std::optional<int> max_iter;
  auto* newton = app.add_subcommand("newton", "Josephy-Newton run on one instance");
  newton->add_option("instance", file, "Instance file")->required()->check(CLI::ExistingFile);
  newton->add_option("--id", id, "Instance id when the file holds several");
  newton->add_option("--x0", x0, "Starting point coordinates");
  newton->add_option("--tol", tol, "Residual tolerance");
  newton->add_option("--max-iter", max_iter, "Iteration cap");
  newton->add_option("--table", table, "Write the convergence table CSV here");
  newton->add_option("--seed", seed, "Seed for the Jacobian spot check");

  auto* estimate = app.add_subcommand("estimate", "Modulus estimates for an instance file");
  estimate->add_option("instance", file, "Instance file")->required()->check(CLI::ExistingFile);
  estimate->add_option("--id", id, "Only this instance");
  estimate->add_option("--seed", seed, "Sampling seed (REGULAB_SEED overrides)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(batch, out, parallel, seed, verbose, timing);
    if (*newton) return cmd_newton(file, id, x0, tol, max_iter, table, seed);
    if (*estimate) return cmd_estimate(file, id, seed);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
