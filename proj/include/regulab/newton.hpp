#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regulab/function.hpp"
#include "regulab/mappings.hpp"
#include "regulab/moduli.hpp"

namespace regulab {

/// The problem f(x) + F(x) contains 0, with F a zero map, the normal cone of
/// a box, or a polyhedral graph.
class GeneralizedEquation {
 public:
  /// Validates shapes and spot-checks an analytic Jacobian against central
  /// differences at 5 pseudo-random points (relative error <= 1e-5).
  GeneralizedEquation(Function f, SetValuedMap F, std::uint64_t seed = 0);

  const Function& f() const { return f_; }
  const SetValuedMap& F() const { return F_; }
  int dim() const { return f_.input_dim(); }

 private:
  Function f_;
  SetValuedMap F_;
};

/// d(0, f(x) + F(x)).
double residual(const GeneralizedEquation& ge, const Vector& x);

/// Solves the linearized inclusion f(xk) + J(xk)(x - xk) + F(x) contains 0
/// exactly. Among several solutions the one nearest xk wins, ties broken
/// lexicographically. Throws SubproblemUnsolvable when none exists.
Vector solve_subproblem(const GeneralizedEquation& ge, const Vector& xk);

struct NewtonConfig {
  Vector x0;
  double tol = 1e-10;
  int max_iter = 50;
  std::optional<Vector> reference;
};

struct RateEstimate {
  double exponent_hat = 0.0;
  double gamma_hat = 0.0;
  int pairs = 0;
};

struct NewtonTrace {
  std::vector<Vector> iterates;
  std::vector<double> residuals;
  std::optional<std::vector<double>> errors_to_ref;
  std::optional<RateEstimate> rate;
  bool converged = false;
  bool failed = false;
  std::string failure;
};

/// Josephy-Newton iteration from cfg.x0 until the residual drops to cfg.tol.
/// Subproblem failures end the run with `failed` set.
NewtonTrace josephy_newton(const GeneralizedEquation& ge,
                           const NewtonConfig& cfg);

/// Least-squares fit of log e_{k+1} = p log e_k + log gamma over consecutive
/// errors inside (1e-14, 1e-1). Throws InsufficientData below 3 pairs.
RateEstimate estimate_rate(const std::vector<Vector>& iterates,
                           const Vector& xstar);
RateEstimate estimate_rate(const NewtonTrace& trace, const Vector& xstar);

/// rg of F + f at (xstar, 0) with q = 1: the regularity the quadratic rate
/// relies on.
ModulusEstimate regularity_at_solution(const GeneralizedEquation& ge,
                                       const Vector& xstar, double delta,
                                       int resolution, int refinement_levels);

}  // namespace regulab
