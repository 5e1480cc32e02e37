#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "regulab/function.hpp"
#include "regulab/geometry.hpp"
#include "regulab/mappings.hpp"

namespace regulab {

/// Returned as tau_hat when no admissible pair exists.
inline constexpr double kModulusCap = 1e6;

/// Pairs closer than this to F^{-1}(y) (or with d(x, x') below it) are
/// skipped, the numeric form of "x not in F^{-1}(y)".
inline constexpr double kExclusionBand = 1e-6;

struct ModulusQuery {
  double q = 1.0;
  Vector xbar;
  Vector ybar;
  double delta = 0.5;
  std::optional<double> mu;  // defaults to delta
  std::optional<double> residual_cap;
  int resolution = 21;
  int refinement_levels = 1;

  double mu_value() const { return mu.value_or(delta); }

  /// Checks the invariants. The order restriction 0 < q <= 1 applies to
  /// regularity queries; Hölder continuity estimates accept any q > 0.
  void validate(bool require_unit_order = true) const;
};

struct TraceEntry {
  int resolution = 0;
  ExtReal tau_hat;
};

struct ModulusEstimate {
  ExtReal tau_hat;
  std::optional<std::pair<Vector, Vector>> witness;
  long admissible_pairs = 0;
  /// Pairs skipped because the preimage search came back empty-handed.
  long search_limited_pairs = 0;
  std::vector<TraceEntry> trace;
  bool capped = false;
};

/// Grid estimate of rg^q F(xbar, ybar): the smallest ratio
/// d(y, F(x))^q / d(x, F^{-1}(y)) over grid pairs in the open balls
/// B_delta(xbar) x B_delta(ybar). An upper estimate of the modulus; one trace
/// entry per nested refinement level.
ModulusEstimate estimate_rg_q(const SetValuedMap& F, const ModulusQuery& query);

/// Grid estimate of lip^q Phi(xbar, ybar): the largest ratio
/// d(y, Phi(x))^q / d(x, x') over grid points x and sampled graph pairs
/// (x', y). A lower estimate of the modulus.
ModulusEstimate estimate_lip_q(const SetValuedMap& Phi,
                               const ModulusQuery& query);

/// Largest ratio |f(x) - f(x')|^q / |x - x'| over grid pairs in B_delta(xbar).
ModulusEstimate estimate_lip_q_function(const Function& f, const Vector& xbar,
                                        double q, double delta, int resolution,
                                        int refinement_levels = 1);

struct DualityReport {
  ModulusEstimate rg;
  ModulusEstimate lip_inverse;
  /// |rg - lip_inverse^(-q)|, with capped estimates read as +INF.
  ExtReal residual;
  bool pass = false;
};

/// Compares rg^q F(xbar, ybar) with (lip^{1/q} F^{-1}(ybar, xbar))^{-q}.
/// Maps without a closed-form inverse are inverted through a sampled graph.
DualityReport check_inverse_duality(const SetValuedMap& F,
                                    const ModulusQuery& query);

/// ExtReal view of an estimate: capped results read as +INF.
ExtReal effective_value(const ModulusEstimate& e);

}  // namespace regulab
