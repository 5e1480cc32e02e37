#include "regulab/batch.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <thread>

#include "regulab/conditions.hpp"
#include "regulab/errors.hpp"
#include "regulab/perturbation.hpp"

namespace regulab {

namespace {

using Params = std::map<std::string, std::string>;

SetValuedMap mapping_with_perturbation(const ExperimentInstance& inst) {
  SetValuedMap F = build_mapping(inst.mapping);
  if (inst.perturbation) return sum_with_function(F, build_function(*inst.perturbation));
  return F;
}

void estimator_params(const ExperimentInstance& inst, Params& p) {
  const ModulusQuery q = inst.modulus_query();
  p["q"] = format_number(q.q);
  p["delta"] = format_number(q.delta);
  p["mu"] = format_number(q.mu_value());
  p["resolution"] = std::to_string(q.resolution);
  p["refinement_levels"] = std::to_string(q.refinement_levels);
  p["residual_cap"] = q.residual_cap ? format_number(*q.residual_cap) : "none";
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
  std::string out;
  for (const auto& t : trace) {
    if (!out.empty()) out += ';';
    out += std::to_string(t.resolution) + ":" + t.tau_hat.to_string();
  }
  return out;
}

void modulus_outputs(const ModulusEstimate& e, const std::string& kind, Params& o) {
  o["kind"] = kind;
  o["tau_hat"] = e.capped ? "inf" : e.tau_hat.to_string();
  o["capped"] = format_bool(e.capped);
  o["witness_x"] = e.witness ? format_vector(e.witness->first) : "";
  o["witness_y"] = e.witness ? format_vector(e.witness->second) : "";
  o["admissible_pairs"] = std::to_string(e.admissible_pairs);
  o["search_limited_pairs"] = std::to_string(e.search_limited_pairs);
  o["trace"] = format_trace(e.trace);
}

// Compares an estimate against params.expected when one is given.
std::optional<bool> expectation(const ExperimentInstance& inst, const ExtReal& v) {
  const auto& p = inst.par();
  if (!p.expected) return std::nullopt;
  const double tol = p.tolerance.value_or(0.05 * std::max(1.0, std::abs(*p.expected)));
  return v.is_finite() && std::abs(v.value() - *p.expected) <= tol;
}

double required(const std::optional<double>& v, const char* name) {
  if (!v) throw PreconditionError(std::string("params.") + name + " is required");
  return *v;
}

void task_estimate_rg(const ExperimentInstance& inst, ReportRow& row) {
  const auto e = estimate_rg_q(mapping_with_perturbation(inst), inst.modulus_query());
  modulus_outputs(e, "rg", row.outputs);
  row.pass = expectation(inst, effective_value(e));
}

void task_estimate_lip(const ExperimentInstance& inst, ReportRow& row) {
  const auto e = estimate_lip_q(mapping_with_perturbation(inst), inst.modulus_query());
  modulus_outputs(e, "lip", row.outputs);
  row.pass = expectation(inst, e.tau_hat);
}

void task_duality(const ExperimentInstance& inst, ReportRow& row) {
  const auto r = check_inverse_duality(mapping_with_perturbation(inst),
                                       inst.modulus_query());
  row.outputs["rg"] = effective_value(r.rg).to_string();
  row.outputs["lip_inverse"] = r.lip_inverse.tau_hat.to_string();
  row.outputs["residual"] = r.residual.to_string();
  row.pass = r.pass;
}

void task_verify_lg(const ExperimentInstance& inst, ReportRow& row) {
  if (!inst.perturbation) throw PreconditionError("verify-lg needs a perturbation");
  const PerturbationInstance pi{build_mapping(inst.mapping),
                                build_function(*inst.perturbation), inst.xbar,
                                inst.ybar, inst.q};
  const double tol = inst.par().tolerance.value_or(0.05);
  row.parameters["tolerance"] = format_number(tol);
  const auto r = verify_lyusternik_graves(pi, inst.modulus_query(), tol);
  row.outputs["rg_F"] = effective_value(r.rg_F).to_string();
  row.outputs["lip_f"] = r.lip_f.tau_hat.to_string();
  row.outputs["rg_Fplusf"] = effective_value(r.rg_Fplusf).to_string();
  row.outputs["margin"] = format_number(r.margin);
  row.outputs["vacuous"] = format_bool(r.vacuous);
  row.outputs["rg_F_capped"] = format_bool(r.rg_F.capped);
  row.outputs["rg_Fplusf_capped"] = format_bool(r.rg_Fplusf.capped);
  row.pass = r.pass;
}

std::string verdict_text(bool holds) {
  return holds ? "holds_on_samples" : "violated_on_samples";
}

void task_check_slope(const ExperimentInstance& inst, ReportRow& row) {
  const ModulusQuery mq = inst.modulus_query();
  SlopeCheckParams sp;
  sp.q = inst.q;
  sp.tau = required(inst.par().tau, "tau");
  sp.delta = mq.delta;
  sp.mu = mq.mu_value();
  sp.gamma = inst.par().gamma.value_or(1.0);
  sp.resolution = mq.resolution;
  row.parameters["tau"] = format_number(sp.tau);
  row.parameters["gamma"] = format_number(sp.gamma);
  const auto v = check_slope_sufficiency(mapping_with_perturbation(inst), inst.xbar,
                                         inst.ybar, sp);
  row.outputs["condition"] = "slope";
  row.outputs["domain_params"] = "delta=" + format_number(sp.delta) +
                                 ";mu=" + format_number(sp.mu) +
                                 ";gamma=" + format_number(sp.gamma);
  row.outputs["verdict"] = verdict_text(v.holds_on_samples);
  row.outputs["samples"] = std::to_string(v.admissible);
  row.outputs["witness"] =
      v.violating_witness
          ? "x=" + format_vector(v.violating_witness->x) +
                " y=" + format_vector(v.violating_witness->y) +
                " z=" + format_vector(v.violating_witness->z) +
                " slope=" + format_number(v.violating_witness->slope)
          : "";
  row.outputs["min_slope"] = v.min_slope ? format_number(*v.min_slope) : "";
  row.outputs["min_local_slope"] = v.min_local_slope ? format_number(*v.min_local_slope) : "";
  row.outputs["rg_crosscheck"] = v.rg_crosscheck ? format_number(*v.rg_crosscheck) : "";
  row.outputs["crosscheck_pass"] = format_bool(v.crosscheck_pass);
  const bool expect = inst.par().expect_holds.value_or(true);
  row.pass = v.holds_on_samples == expect && (!v.holds_on_samples || v.crosscheck_pass);
}

void task_check_coderivative(const ExperimentInstance& inst, ReportRow& row,
                             std::uint64_t seed) {
  SetValuedMap G = build_mapping(inst.mapping);
  if (inst.mapping.type == "linear") {
    G = linear_graph(inst.mapping.A);
  } else if (inst.mapping.type != "polyhedral_graph") {
    throw PreconditionError("check-coderivative needs a linear or polyhedral_graph mapping");
  }
  if (inst.perturbation) {
    throw PreconditionError("check-coderivative does not take a perturbation");
  }
  const ModulusQuery mq = inst.modulus_query();
  CoderivativeConditionQuery cq;
  cq.q = inst.q;
  cq.tau = required(inst.par().tau, "tau");
  cq.delta = mq.delta;
  cq.mu = mq.mu_value();
  if (inst.par().eta) cq.eta = *inst.par().eta;
  if (inst.par().alpha) cq.alpha = *inst.par().alpha;
  if (inst.est().resolution) cq.resolution = *inst.est().resolution;
  if (inst.par().zstar_count) cq.zstar_count = *inst.par().zstar_count;
  cq.id = inst.id;
  cq.seed = seed;
  row.parameters["tau"] = format_number(cq.tau);
  row.parameters["eta"] = format_number(cq.eta);
  row.parameters["alpha"] = format_number(cq.alpha);
  row.parameters["zstar_count"] = std::to_string(cq.zstar_count);
  row.parameters["resolution"] = std::to_string(cq.resolution);
  const auto v = check_coderivative_sufficiency(G, inst.xbar, inst.ybar, cq);
  row.outputs["condition"] = "coderivative";
  row.outputs["domain_params"] = "delta=" + format_number(cq.delta) +
                                 ";mu=" + format_number(cq.mu) +
                                 ";eta=" + format_number(cq.eta) +
                                 ";alpha=" + format_number(cq.alpha);
  row.outputs["verdict"] = verdict_text(v.holds_on_samples);
  row.outputs["samples"] = std::to_string(v.samples);
  std::string witness;
  if (v.violating_witness) {
    const auto& w = *v.violating_witness;
    witness = "x=" + format_vector(w.x) + " y=" + format_vector(w.y) +
              " z=" + format_vector(w.z) + " zstar=" + format_vector(w.zstar) +
              " ystar=" + format_vector(w.ystar) + " value=" + format_number(w.value);
  }
  row.outputs["witness"] = witness;
  row.outputs["min_value"] = v.min_value ? format_number(*v.min_value) : "";
  row.outputs["rg_crosscheck"] = v.rg_crosscheck ? format_number(*v.rg_crosscheck) : "";
  row.outputs["crosscheck_pass"] = format_bool(v.crosscheck_pass);
  const bool expect = inst.par().expect_holds.value_or(true);
  row.pass = v.holds_on_samples == expect && (!v.holds_on_samples || v.crosscheck_pass);
}

void task_newton(const ExperimentInstance& inst, ReportRow& row,
                 const RunOptions& opts) {
  const auto trace = run_newton(inst, opts);
  const auto& p = inst.par();
  row.parameters["x0"] = format_vector(*p.x0);
  row.parameters["tol"] = format_number(p.tol.value_or(1e-10));
  row.parameters["max_iter"] = std::to_string(p.max_iter.value_or(50));
  if (p.reference) row.parameters["reference"] = format_vector(*p.reference);
  row.outputs["iterations"] = std::to_string(trace.iterates.size() - 1);
  row.outputs["x_final"] = format_vector(trace.iterates.back());
  row.outputs["final_residual"] = format_number(trace.residuals.back());
  row.outputs["converged"] = format_bool(trace.converged);
  row.outputs["failure"] = trace.failure;
  row.outputs["exponent_hat"] = trace.rate ? format_number(trace.rate->exponent_hat) : "";
  row.outputs["gamma_hat"] = trace.rate ? format_number(trace.rate->gamma_hat) : "";
  row.outputs["rate_pairs"] = trace.rate ? std::to_string(trace.rate->pairs) : "0";
  if (p.reference) {
    const GeneralizedEquation ge(build_function(*inst.perturbation),
                                 build_mapping(inst.mapping), opts.seed);
    const ModulusQuery mq = inst.modulus_query();
    const auto rg = regularity_at_solution(ge, *p.reference, mq.delta, mq.resolution,
                                           mq.refinement_levels);
    row.outputs["regularity"] = effective_value(rg).to_string();
    row.outputs["regularity_trace"] = format_trace(rg.trace);
  }
  row.pass = trace.converged;
}

std::string failure_row_task(const BatchEntry& e) {
  return e.instance ? e.instance->task : e.task;
}

}  // namespace

NewtonTrace run_newton(const ExperimentInstance& inst, const RunOptions& opts) {
  if (!inst.perturbation) {
    throw PreconditionError("newton needs the single-valued part f as perturbation");
  }
  const auto& p = inst.par();
  if (!p.x0) throw PreconditionError("params.x0 is required");
  const GeneralizedEquation ge(build_function(*inst.perturbation),
                               build_mapping(inst.mapping), opts.seed);
  NewtonConfig cfg;
  cfg.x0 = *p.x0;
  if (p.tol) cfg.tol = *p.tol;
  if (p.max_iter) cfg.max_iter = *p.max_iter;
  cfg.reference = p.reference;
  return josephy_newton(ge, cfg);
}

ReportRow run_task(const ExperimentInstance& inst, const RunOptions& opts) {
  ReportRow row;
  row.instance_id = inst.id;
  row.task = inst.task;
  estimator_params(inst, row.parameters);
  row.parameters["seed"] = std::to_string(opts.seed);
  row.parameters["mapping"] = inst.mapping.type;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (inst.task == "estimate-rg") {
      task_estimate_rg(inst, row);
    } else if (inst.task == "estimate-lip") {
      task_estimate_lip(inst, row);
    } else if (inst.task == "duality") {
      task_duality(inst, row);
    } else if (inst.task == "verify-lg") {
      task_verify_lg(inst, row);
    } else if (inst.task == "check-slope") {
      task_check_slope(inst, row);
    } else if (inst.task == "check-coderivative") {
      task_check_coderivative(inst, row, opts.seed);
    } else if (inst.task == "newton") {
      task_newton(inst, row, opts);
    } else {
      throw PreconditionError("unknown task " + inst.task);
    }
  } catch (const std::exception& e) {
    row.outputs.clear();
    row.pass.reset();
    row.error = e.what();
  }
  if (opts.timing) {
    row.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  }
  return row;
}

int BatchSummary::exit_code() const {
  if (schema_failures > 0) return 2;
  if (failures > 0) return 1;
  return 0;
}

BatchSummary run_batch(const std::vector<BatchEntry>& entries,
                       const BatchOptions& opts) {
  BatchSummary summary;
  summary.rows.resize(entries.size());
  std::atomic<size_t> next{0};
  std::atomic<size_t> done{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (size_t i = next++; i < entries.size(); i = next++) {
      const BatchEntry& e = entries[i];
      ReportRow row;
      if (e.instance) {
        row = run_task(*e.instance, opts.run);
      } else {
        row.instance_id = e.id;
        row.task = failure_row_task(e);
        row.error = e.error;
      }
      const size_t finished = ++done;
      if (opts.progress) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *opts.progress << "[" << finished << "/" << entries.size() << "] "
                       << (row.instance_id.empty() ? "?" : row.instance_id) << " "
                       << row.task << " "
                       << (row.failed() ? "failed: " + *row.error
                                        : row.pass ? (*row.pass ? "pass" : "no pass")
                                                   : "done")
                       << "\n";
      }
      summary.rows[i] = std::move(row);
    }
  };

  const int n = std::max(1, std::min<int>(opts.parallel, static_cast<int>(entries.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].instance) {
      ++summary.schema_failures;
    } else if (summary.rows[i].failed()) {
      ++summary.failures;
    }
  }
  return summary;
}

BatchSummary run_batch_file(const std::string& path, const std::string& out_dir,
                            const BatchOptions& opts) {
  const auto entries = parse_batch_file(path);
  BatchSummary summary = run_batch(entries, opts);
  write_reports(summary.rows, out_dir);
  return summary;
}

std::uint64_t resolve_seed(std::uint64_t fallback) {
  const char* env = std::getenv("REGULAB_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw PreconditionError(std::string("REGULAB_SEED is not an unsigned integer: ") + env);
  }
  return v;
}

}  // namespace regulab
