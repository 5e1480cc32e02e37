#include "regulab/perturbation.hpp"

#include <cmath>
#include <limits>

#include "regulab/errors.hpp"

namespace regulab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void PerturbationInstance::validate() const {
  if (!(q > 0.0) || q > 1.0) {
    throw PreconditionError("perturbation: order q must lie in (0,1]");
  }
  if (f.input_dim() != F.domain_dim() || f.output_dim() != F.range_dim()) {
    throw DimensionError("perturbation: f and F have different shapes");
  }
  if (f(xbar).norm() > 1e-12) {
    throw PreconditionError("perturbation: f(xbar) must vanish");
  }
  if (image_distance(F, xbar, ybar).as_double() > kMembershipTol) {
    throw PreconditionError("perturbation: base point is not on gph F");
  }
}

LyusternikGravesReport verify_lyusternik_graves(const PerturbationInstance& inst,
                                                const ModulusQuery& est,
                                                double tolerance) {
  inst.validate();
  ModulusQuery query = est;
  query.q = inst.q;
  query.xbar = inst.xbar;
  query.ybar = inst.ybar;

  LyusternikGravesReport r;
  r.rg_F = estimate_rg_q(inst.F, query);
  r.lip_f = estimate_lip_q_function(inst.f, inst.xbar, inst.q, query.delta,
                                    query.resolution, query.refinement_levels);
  r.rg_Fplusf = estimate_rg_q(sum_with_function(inst.F, inst.f), query);

  const ExtReal rgF = effective_value(r.rg_F);
  const ExtReal rgFf = effective_value(r.rg_Fplusf);
  const double bound = extended_difference(rgF, r.lip_f.tau_hat);
  if (rgFf.is_infinite() && bound == kInf) {
    r.margin = 0.0;
  } else {
    r.margin = rgFf.as_double() - bound;
  }
  r.vacuous = r.lip_f.tau_hat >= rgF;
  r.pass = r.vacuous || r.margin >= -tolerance;
  return r;
}

void ContractionConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw PreconditionError("contraction: theta must lie in (0,1)");
  }
  if (!(delta > 0.0) || !(tol > 0.0) || max_iter < 1) {
    throw PreconditionError("contraction: delta, tol, max_iter must be positive");
  }
}

ContractionResult contraction_fixed_point(const Selection& phi,
                                          const Vector& x0,
                                          const ContractionConfig& cfg) {
  cfg.validate();
  ContractionResult out;
  Vector x = x0;
  Vector px = phi(x);
  const double r0 = (px - x).norm();
  if (!(r0 < cfg.delta * (1.0 - cfg.theta))) {
    throw PreconditionError(
        "contraction: d(x0, Phi(x0)) must be below delta (1 - theta)");
  }
  int growth = 0;
  for (int k = 0;; ++k) {
    const double r = (px - x).norm();
    out.iterates.push_back(x);
    out.residuals.push_back(r);
    out.iterations = k;
    if (k > 0 && r > out.residuals[k - 1]) {
      if (++growth >= 3) {
        throw ContractionViolated(
            "contraction violated: residuals " +
            std::to_string(out.residuals[k - 2]) + ", " +
            std::to_string(out.residuals[k - 1]) + ", " + std::to_string(r) +
            " keep growing at iteration " + std::to_string(k));
      }
    } else {
      growth = 0;
    }
    if (r <= cfg.tol) {
      out.xhat = x;
      out.converged = true;
      return out;
    }
    if (k >= cfg.max_iter) break;
    x = px;
    if ((x - x0).norm() > cfg.delta) {
      throw ContractionViolated("contraction violated: iterate " +
                                std::to_string(k + 1) +
                                " left the ball around x0");
    }
    px = phi(x);
  }
  out.xhat = x;
  out.converged = false;
  return out;
}

PerturbedSolveResult perturbed_solve(const SetValuedMap& F, const Function& f,
                                     const Vector& y, const Vector& x0,
                                     const ContractionConfig& cfg) {
  cfg.validate();
  if (f.input_dim() != F.domain_dim() || f.output_dim() != F.range_dim()) {
    throw DimensionError("perturbed_solve: f and F have different shapes");
  }
  const EvalRegion region{x0, y, cfg.delta, cfg.delta, 21};
  int calls = 0;
  Selection phi = [&](const Vector& u) -> Vector {
    const PreimageResult pre = preimage_distance(F, u, y - f(u), region);
    if (!pre.nearest) {
      throw EmptySetError("perturbed_solve: empty preimage at iterate " +
                          std::to_string(calls));
    }
    ++calls;
    return *pre.nearest;
  };

  ContractionConfig inner = cfg;
  inner.tol = cfg.tol * 1e-2;
  PerturbedSolveResult out;
  out.trace = contraction_fixed_point(phi, x0, inner);
  // The last selection value solves the inclusion for the previous iterate
  // exactly, so it is the better point to hand back.
  out.xhat = phi(out.trace.xhat);
  const auto Ff = sum_with_function(F, f);
  out.residual = image_distance(Ff, out.xhat, y).as_double();
  out.verified = out.trace.converged && out.residual <= cfg.tol;
  return out;
}

StrictApproximationReport check_strict_approximation(const Function& f,
                                                     const Function& g,
                                                     const Vector& xbar,
                                                     double q, double delta,
                                                     int resolution) {
  if ((f(xbar) - g(xbar)).norm() > 1e-12) {
    throw PreconditionError("strict approximation: f(xbar) != g(xbar)");
  }
  const Function diff = f - g;
  StrictApproximationReport r;
  for (int k = 0; k < 5; ++k) {
    const double dk = delta * std::ldexp(1.0, -k);
    r.deltas.push_back(dk);
    r.lip_diff.push_back(
        estimate_lip_q_function(diff, xbar, q, dk, resolution).tau_hat.as_double());
  }
  bool monotone = true;
  for (size_t k = 1; k < r.lip_diff.size(); ++k) {
    if (r.lip_diff[k] > r.lip_diff[k - 1]) monotone = false;
  }
  r.is_strict = monotone && r.lip_diff.back() <= 0.02;
  return r;
}

LinearizationReport linearization_equivalence(const SetValuedMap& F,
                                              const Function& f,
                                              const Vector& xbar,
                                              const Vector& ybar,
                                              const ModulusQuery& est) {
  const Vector fx = f(xbar);
  const Matrix J = f.jacobian(xbar);
  const Function g = Function::affine(J, fx - J * xbar);
  const auto Ff = sum_with_function(F, f);
  const auto Fg = sum_with_function(F, g);
  if (image_distance(Ff, xbar, ybar).as_double() > kMembershipTol) {
    throw PreconditionError("linearization: ybar is not in F(xbar) + f(xbar)");
  }

  LinearizationReport r;
  for (int k = 0; k < 5; ++k) {
    ModulusQuery query = est;
    query.q = 1.0;
    query.xbar = xbar;
    query.ybar = ybar;
    query.delta = est.delta * std::ldexp(1.0, -k);
    LinearizationLevel level;
    level.delta = query.delta;
    level.rg_nonlinear = effective_value(estimate_rg_q(Ff, query));
    level.rg_linearized = effective_value(estimate_rg_q(Fg, query));
    const double a = level.rg_nonlinear.as_double();
    const double b = level.rg_linearized.as_double();
    if (level.rg_nonlinear.is_infinite() && level.rg_linearized.is_infinite()) {
      level.relative_gap = 0.0;
    } else if (level.rg_nonlinear.is_infinite() ||
               level.rg_linearized.is_infinite()) {
      level.relative_gap = kInf;
    } else {
      const double scale = std::max(std::abs(a), std::abs(b));
      level.relative_gap = scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
    }
    r.levels.push_back(level);
  }
  r.pass = r.levels.back().relative_gap <= 0.10 &&
           r.levels.back().relative_gap <= r.levels.front().relative_gap;
  return r;
}

}  // namespace regulab
