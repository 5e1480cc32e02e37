#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "regulab/function.hpp"
#include "regulab/geometry.hpp"
#include "regulab/mappings.hpp"

namespace regulab {

/// psi_y(u, v) = |v - y|^q + indicator of gph F at (u, v).
ExtReal psi_value(const SetValuedMap& F, const Vector& y, double q,
                  const Vector& u, const Vector& v);

struct SlopeQuery {
  Vector x;
  Vector z;  // z in F(x)
  Vector y;
  double q = 1.0;
  ParametricGamma gamma{1.0};
  std::vector<double> radii;  // strictly decreasing, >= 1e-5
  int resolution = 41;

  void validate(const SetValuedMap& F) const;
};

struct SlopeEntry {
  double radius = 0.0;
  std::optional<double> estimate;  // empty when no graph point is in range
};

/// Per-radius lower estimates of the slope of psi_y at (x, z) in the
/// parametric product metric. The last entry is the working estimate.
std::vector<SlopeEntry> slope_psi(const SetValuedMap& F,
                                  const SlopeQuery& query);

struct SlopeCheckParams {
  double q = 1.0;
  double tau = 1.0;
  double delta = 0.5;
  double mu = 0.5;
  double gamma = 1.0;
  int resolution = 21;
};

struct SlopeTriple {
  Vector x, y, z;
  double slope = 0.0;
};

struct SlopeVerdict {
  bool holds_on_samples = true;
  long admissible = 0;
  /// Smallest slope over the sampled triples, sup taken over the region.
  std::optional<double> min_slope;
  /// Smallest of the smallest-radius local estimates.
  std::optional<double> min_local_slope;
  std::optional<SlopeTriple> violating_witness;
  /// estimate_rg_q with residual cap tau*mu, run when the verdict holds.
  std::optional<double> rg_crosscheck;
  bool crosscheck_pass = false;
};

/// Samples admissible triples (x, y, z) of the slope criterion and checks the
/// slope of psi_y at (x, z) against tau with 10% slack. The slope at each
/// triple is the sup of the difference quotient over graph points of the
/// criterion region (including the nearest solutions of F(u) = y).
SlopeVerdict check_slope_sufficiency(const SetValuedMap& F, const Vector& xbar,
                                     const Vector& ybar,
                                     const SlopeCheckParams& params);

/// Generators (u_i, v_i) of the normal cone to a polyhedral graph.
struct PolyhedralNormalCone {
  std::vector<std::pair<Vector, Vector>> generators;
};

/// Active rows of (A | B) at (x, z). Throws when (x, z) is off the graph.
PolyhedralNormalCone normal_cone_polyhedral_graph(const PolyhedralGraph& G,
                                                  const Vector& x,
                                                  const Vector& z);

/// Cap on generator count for exact coderivative computations.
inline constexpr int kMaxGenerators = 12;

struct CoderivativeDistance {
  ExtReal distance;
  bool infeasible = false;  // D*F(x, z)(ystar) is empty
  Vector xstar;             // attaining element when feasible
};

/// d(0, D*F(x, z)(ystar)) by enumeration of generator supports.
CoderivativeDistance coderivative_distance(const PolyhedralGraph& G,
                                           const Vector& x, const Vector& z,
                                           const Vector& ystar);

/// Polyhedral graph of x -> A x, written as two opposite inequality blocks.
SetValuedMap linear_graph(const Matrix& A);

struct CoderivativeConditionQuery {
  double q = 1.0;
  double tau = 1.0;
  double delta = 0.5;
  double mu = 0.5;
  double eta = 0.05;
  double alpha = 0.5;
  int resolution = 7;   // grid points per axis for x and y
  int zstar_count = 24; // sphere samples for z* and for the y* offsets
  std::string id = "instance";
  std::uint64_t seed = 0;

  void validate() const;
};

struct CoderivativeTuple {
  Vector x, y, z, zstar, ystar;
  double value = 0.0;  // q |z - y|^{q-1} d(0, D*F(x, z)(ystar))
};

struct CoderivativeVerdict {
  bool holds_on_samples = true;
  long samples = 0;
  std::optional<CoderivativeTuple> violating_witness;
  std::optional<double> min_value;
  std::optional<double> rg_crosscheck;
  bool crosscheck_pass = false;
};

CoderivativeVerdict check_coderivative_sufficiency(
    const SetValuedMap& G, const Vector& xbar, const Vector& ybar,
    const CoderivativeConditionQuery& query);

/// Per-radius estimates of the slope of a scalar function.
std::vector<SlopeEntry> numeric_slope(const ScalarFunction& g, const Vector& x,
                                      const std::vector<double>& radii,
                                      int resolution);

struct ChainRuleReport {
  double slope_of_power = 0.0;  // slope of g^q
  double predicted = 0.0;       // q g^{q-1} slope of g
  double residual = 0.0;
  bool pass = false;            // residual within 5% relative
};

ChainRuleReport slope_chain_rule_check(const ScalarFunction& g,
                                       const Vector& x, double q,
                                       const std::vector<double>& radii,
                                       int resolution);

struct EkelandQuery {
  Matrix dist;                 // metric on indices
  std::vector<double> values;  // +inf allowed
  int x0 = 0;
  double epsilon = 1.0;
  double lambda = 1.0;

  void validate() const;
};

struct EkelandCertificate {
  int index = 0;
  double distance_to_x0 = 0.0;
  double value = 0.0;
  /// min over u of values[u] + (eps/lambda) dist(u, index) - values[index].
  double min_slack = 0.0;
  bool holds_i = false;
  bool holds_ii = false;
  bool holds_iii = false;
  int iterations = 0;

  bool holds() const { return holds_i && holds_ii && holds_iii; }
};

/// Exhaustive check of the three Ekeland conclusions at `index`.
EkelandCertificate ekeland_certificate(const EkelandQuery& query, int index);

/// Ekeland point of a finite metric space by descent on
/// values[u] + (eps/lambda) dist(u, x_k), moving only on strict decrease.
EkelandCertificate ekeland_point(const EkelandQuery& query);

}  // namespace regulab
