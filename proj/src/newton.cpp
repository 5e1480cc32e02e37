#include "regulab/newton.hpp"

#include <cmath>
#include <random>

#include "regulab/errors.hpp"

namespace regulab {

namespace {

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

Vector solve_box(const NormalConeOfBox& N, const Matrix& M, const Vector& qv,
                 const Vector& xk) {
  const int n = static_cast<int>(N.lower.size());
  if (n > 8) throw SizeError("solve_subproblem: box dimension above 8");
  int patterns = 1;
  for (int i = 0; i < n; ++i) patterns *= 3;

  std::vector<Vector> feasible;
  int singular = 0, infeasible = 0, skipped = 0;
  for (int p = 0; p < patterns; ++p) {
    std::vector<int> state(n);
    std::vector<int> free_idx, fixed_idx;
    Vector x = Vector::Zero(n);
    bool valid = true;
    int code = p;
    for (int i = 0; i < n; ++i, code /= 3) {
      state[i] = code % 3;  // 0 lower, 1 free, 2 upper
      if (state[i] == 1) {
        free_idx.push_back(i);
        continue;
      }
      const double bound = state[i] == 0 ? N.lower(i) : N.upper(i);
      // A degenerate coordinate is covered once, by its lower pattern.
      if (!std::isfinite(bound) || (state[i] == 2 && N.lower(i) == N.upper(i))) {
        valid = false;
      }
      x(i) = bound;
      fixed_idx.push_back(i);
    }
    if (!valid) {
      ++skipped;
      continue;
    }
    const int k = static_cast<int>(free_idx.size());
    if (k > 0) {
      Matrix Mff(k, k);
      Vector rhs(k);
      for (int a = 0; a < k; ++a) {
        rhs(a) = -qv(free_idx[a]);
        for (int i : fixed_idx) rhs(a) -= M(free_idx[a], i) * x(i);
        for (int b = 0; b < k; ++b) Mff(a, b) = M(free_idx[a], free_idx[b]);
      }
      Eigen::FullPivLU<Matrix> lu(Mff);
      if (!lu.isInvertible()) {
        ++singular;
        continue;
      }
      const Vector xf = lu.solve(rhs);
      for (int a = 0; a < k; ++a) x(free_idx[a]) = xf(a);
    }
    const Vector w = M * x + qv;
    const double wtol = kMembershipTol * (1.0 + w.cwiseAbs().maxCoeff());
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      const double tl = kMembershipTol * std::max(1.0, std::abs(N.lower(i)));
      const double tu = kMembershipTol * std::max(1.0, std::abs(N.upper(i)));
      if (x(i) < N.lower(i) - tl || x(i) > N.upper(i) + tu) ok = false;
      if (N.lower(i) == N.upper(i)) continue;
      if (state[i] == 0 && w(i) < -wtol) ok = false;
      if (state[i] == 2 && w(i) > wtol) ok = false;
    }
    if (!ok) {
      ++infeasible;
      continue;
    }
    feasible.push_back(x);
  }
  if (feasible.empty()) {
    throw SubproblemUnsolvable(
        "subproblem unsolvable: " + std::to_string(patterns) + " patterns, " +
        std::to_string(singular) + " singular, " + std::to_string(infeasible) +
        " infeasible, " + std::to_string(skipped) + " unbounded");
  }
  const Vector* best = &feasible.front();
  for (const auto& c : feasible) {
    const double dc = (c - xk).norm();
    const double db = (*best - xk).norm();
    if (dc < db - 1e-12 || (std::abs(dc - db) <= 1e-12 && lex_less(c, *best))) {
      best = &c;
    }
  }
  return *best;
}

}  // namespace

GeneralizedEquation::GeneralizedEquation(Function f, SetValuedMap F,
                                         std::uint64_t seed)
    : f_(std::move(f)), F_(std::move(F)) {
  if (!f_.valid()) throw PreconditionError("generalized equation: empty f");
  const bool supported = std::holds_alternative<ZeroMap>(F_.rep()) ||
                         std::holds_alternative<NormalConeOfBox>(F_.rep()) ||
                         std::holds_alternative<PolyhedralGraph>(F_.rep());
  if (!supported) {
    throw PreconditionError("generalized equation: F must be a zero map, a "
                            "box normal cone or a polyhedral graph, got " +
                            F_.kind());
  }
  if (f_.input_dim() != F_.domain_dim() || f_.output_dim() != F_.range_dim()) {
    throw DimensionError("generalized equation: f and F have different shapes");
  }
  if (f_.has_jacobian()) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int s = 0; s < 5; ++s) {
      Vector x(f_.input_dim());
      for (int i = 0; i < x.size(); ++i) x(i) = unif(rng);
      const Matrix J = f_.jacobian(x);
      const Matrix Jfd = f_.finite_difference_jacobian(x);
      const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
      const double err = (J - Jfd).cwiseAbs().maxCoeff() / scale;
      if (!(err <= 1e-5)) {
        throw PreconditionError(
            "generalized equation: Jacobian disagrees with finite "
            "differences (relative error " + std::to_string(err) + ")");
      }
    }
  }
}

double residual(const GeneralizedEquation& ge, const Vector& x) {
  return image_distance(ge.F(), x, -ge.f()(x)).as_double();
}

Vector solve_subproblem(const GeneralizedEquation& ge, const Vector& xk) {
  const Matrix M = ge.f().jacobian(xk);
  const Vector fx = ge.f()(xk);
  if (!M.allFinite() || !fx.allFinite()) {
    throw SubproblemUnsolvable("subproblem unsolvable: non-finite model at xk");
  }
  // Linear model l(x) = M x + qv.
  const Vector qv = fx - M * xk;

  if (std::holds_alternative<ZeroMap>(ge.F().rep())) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
    const Vector step = cod.solve(-fx);
    if ((M * step + fx).norm() > kMembershipTol * (1.0 + fx.norm())) {
      throw SubproblemUnsolvable(
          "subproblem unsolvable: singular Jacobian, inconsistent system");
    }
    return xk + step;
  }
  if (const auto* N = std::get_if<NormalConeOfBox>(&ge.F().rep())) {
    return solve_box(*N, M, qv, xk);
  }
  const auto& P = std::get<PolyhedralGraph>(ge.F().rep());
  // (x, -l(x)) in gph F: (A - B M) x <= c + B qv.
  const Polyhedron feasible(P.A - P.B * M, P.c + P.B * qv);
  auto x = try_project_polyhedron(feasible, xk);
  if (!x) throw SubproblemUnsolvable("subproblem unsolvable: empty polyhedron");
  return *x;
}

NewtonTrace josephy_newton(const GeneralizedEquation& ge,
                           const NewtonConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw PreconditionError("newton: tol must be positive");
  if (cfg.max_iter < 1) throw PreconditionError("newton: max_iter < 1");
  if (cfg.x0.size() != ge.dim()) throw DimensionError("newton: x0 dimension");
  if (cfg.reference && cfg.reference->size() != ge.dim()) {
    throw DimensionError("newton: reference dimension");
  }
  NewtonTrace trace;
  Vector x = cfg.x0;
  double r = residual(ge, x);
  trace.iterates.push_back(x);
  trace.residuals.push_back(r);
  for (int k = 0; k < cfg.max_iter && !(r <= cfg.tol); ++k) {
    try {
      x = solve_subproblem(ge, x);
    } catch (const SubproblemUnsolvable& e) {
      trace.failed = true;
      trace.failure = "iteration " + std::to_string(k + 1) + ": " + e.what();
      break;
    }
    r = residual(ge, x);
    trace.iterates.push_back(x);
    trace.residuals.push_back(r);
  }
  trace.converged = !trace.failed && r <= cfg.tol;
  if (cfg.reference) {
    std::vector<double> errors;
    for (const auto& it : trace.iterates) {
      errors.push_back((it - *cfg.reference).norm());
    }
    trace.errors_to_ref = std::move(errors);
    try {
      trace.rate = estimate_rate(trace.iterates, *cfg.reference);
    } catch (const InsufficientData&) {
    }
  }
  return trace;
}

RateEstimate estimate_rate(const std::vector<Vector>& iterates,
                           const Vector& xstar) {
  std::vector<double> lx, ly;
  for (size_t k = 0; k + 1 < iterates.size(); ++k) {
    const double e0 = (iterates[k] - xstar).norm();
    const double e1 = (iterates[k + 1] - xstar).norm();
    auto inside = [](double e) { return e > 1e-14 && e < 1e-1; };
    if (inside(e0) && inside(e1)) {
      lx.push_back(std::log(e0));
      ly.push_back(std::log(e1));
    }
  }
  if (lx.size() < 3) {
    throw InsufficientData("insufficient decay window: " +
                           std::to_string(lx.size()) + " admissible pairs");
  }
  const auto n = static_cast<Eigen::Index>(lx.size());
  Matrix X(n, 2);
  Vector Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = lx[i];
    X(i, 1) = 1.0;
    Y(i) = ly[i];
  }
  const Vector coef = X.colPivHouseholderQr().solve(Y);
  return {coef(0), std::exp(coef(1)), static_cast<int>(n)};
}

RateEstimate estimate_rate(const NewtonTrace& trace, const Vector& xstar) {
  return estimate_rate(trace.iterates, xstar);
}

ModulusEstimate regularity_at_solution(const GeneralizedEquation& ge,
                                       const Vector& xstar, double delta,
                                       int resolution, int refinement_levels) {
  const auto Ff = sum_with_function(ge.F(), ge.f());
  ModulusQuery q;
  q.q = 1.0;
  q.xbar = xstar;
  q.ybar = Vector::Zero(ge.F().range_dim());
  q.delta = delta;
  q.resolution = resolution;
  q.refinement_levels = refinement_levels;
  return estimate_rg_q(Ff, q);
}

}  // namespace regulab
