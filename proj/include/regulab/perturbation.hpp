#pragma once

#include <functional>
#include <string>
#include <vector>

#include "regulab/function.hpp"
#include "regulab/mappings.hpp"
#include "regulab/moduli.hpp"

namespace regulab {

/// F with a single-valued perturbation f normalized by f(xbar) = 0.
struct PerturbationInstance {
  SetValuedMap F;
  Function f;
  Vector xbar;
  Vector ybar;
  double q = 1.0;

  void validate() const;
};

struct LyusternikGravesReport {
  ModulusEstimate rg_F;
  ModulusEstimate lip_f;
  ModulusEstimate rg_Fplusf;
  /// rg(F+f) - (rg F - lip f) on the extended line; capped moduli count as
  /// +INF and (+INF) - (+INF) = 0.
  double margin = 0.0;
  bool pass = false;
  /// lip f >= rg F: the inequality says nothing and cannot fail.
  bool vacuous = false;
};

LyusternikGravesReport verify_lyusternik_graves(const PerturbationInstance& inst,
                                                const ModulusQuery& est,
                                                double tolerance = 0.05);

struct ContractionConfig {
  double theta = 0.5;
  double delta = 1.0;
  double tol = 1e-10;
  int max_iter = 200;

  void validate() const;
};

struct ContractionResult {
  Vector xhat;
  int iterations = 0;
  /// r_k = |Phi(x_k) - x_k| for every visited iterate.
  std::vector<double> residuals;
  std::vector<Vector> iterates;
  bool converged = false;
};

using Selection = std::function<Vector(const Vector&)>;

/// Picard iteration x_{k+1} = Phi(x_k) for a selection of a set-valued
/// contraction on the closed ball B_delta(x0). Throws ContractionViolated on
/// three consecutive residual increases or when an iterate leaves the ball;
/// returns an unconverged trace when max_iter runs out.
ContractionResult contraction_fixed_point(const Selection& phi,
                                          const Vector& x0,
                                          const ContractionConfig& cfg);

struct PerturbedSolveResult {
  Vector xhat;
  ContractionResult trace;
  /// image_distance(F + f, xhat, y), computed independently of the iteration.
  double residual = 0.0;
  bool verified = false;
};

/// Solves y in F(x) + f(x) by iterating Phi(u) = nearest point of
/// F^{-1}(y - f(u)) to u. Throws EmptySetError naming the iterate when a
/// preimage is empty.
PerturbedSolveResult perturbed_solve(const SetValuedMap& F, const Function& f,
                                     const Vector& y, const Vector& x0,
                                     const ContractionConfig& cfg);

struct StrictApproximationReport {
  std::vector<double> deltas;
  std::vector<double> lip_diff;
  bool is_strict = false;
};

/// lip^q (f - g)(xbar) along delta_k = delta 2^{-k}, k = 0..4.
StrictApproximationReport check_strict_approximation(const Function& f,
                                                     const Function& g,
                                                     const Vector& xbar,
                                                     double q, double delta,
                                                     int resolution);

struct LinearizationLevel {
  double delta = 0.0;
  ExtReal rg_nonlinear;
  ExtReal rg_linearized;
  double relative_gap = 0.0;
};

struct LinearizationReport {
  std::vector<LinearizationLevel> levels;
  bool pass = false;
};

/// Compares rg(F + f) with rg(F + g), g(x) = f(xbar) + J(xbar)(x - xbar), on
/// the shrinking sequence delta_k = est.delta 2^{-k}, k = 0..4. Passes when the
/// final relative gap is at most 10% and no larger than the first.
LinearizationReport linearization_equivalence(const SetValuedMap& F,
                                              const Function& f,
                                              const Vector& xbar,
                                              const Vector& ybar,
                                              const ModulusQuery& est);

}  // namespace regulab
