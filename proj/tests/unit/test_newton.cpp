#include <cmath>

#include "doctest.h"
#include "regulab/errors.hpp"
#include "regulab/newton.hpp"
#include "support.hpp"

using namespace regulab;
using testing_support::Gen;
using testing_support::mat;
using testing_support::vec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Function quadratic(double a, double b, double c) {
  return Function(
      1, 1, [=](const Vector& x) { return vec({a * x(0) * x(0) + b * x(0) + c}); },
      [=](const Vector& x) { return mat({{2 * a * x(0) + b}}); });
}

SetValuedMap nonneg(int n = 1) {
  return SetValuedMap::normal_cone_box(Vector::Zero(n), Vector::Constant(n, kInf));
}

// Checks 0 in m + N_[lo, hi](x) with m the linear model at xk, coordinatewise.
bool model_inclusion_holds(const Function& f, const Vector& lo, const Vector& hi,
                           const Vector& xk, const Vector& x, double tol) {
  const Vector m = f(xk) + f.jacobian(xk) * (x - xk);
  for (int i = 0; i < x.size(); ++i) {
    if (x(i) < lo(i) - tol || x(i) > hi(i) + tol) return false;
    const bool at_lo = std::abs(x(i) - lo(i)) <= tol;
    const bool at_hi = std::abs(x(i) - hi(i)) <= tol;
    if (at_lo && at_hi) continue;
    if (at_lo) {
      if (m(i) < -tol) return false;
    } else if (at_hi) {
      if (m(i) > tol) return false;
    } else if (std::abs(m(i)) > tol) {
      return false;
    }
  }
  return true;
}

NewtonConfig config(double x0, double tol = 1e-12, int max_iter = 50) {
  NewtonConfig c;
  c.x0 = vec({x0});
  c.tol = tol;
  c.max_iter = max_iter;
  return c;
}

}  // namespace

TEST_CASE("residual examples") {
  const GeneralizedEquation sq(quadratic(1, 0, -2), SetValuedMap::zero(1, 1));
  CHECK(residual(sq, vec({1})) == doctest::Approx(1.0));
  CHECK(residual(sq, vec({std::sqrt(2.0)})) <= 1e-15);
  const GeneralizedEquation comp(quadratic(1, 1, -3), nonneg());
  CHECK(residual(comp, vec({0})) == doctest::Approx(3.0));
  CHECK(residual(comp, vec({2})) == doctest::Approx(3.0));
  const GeneralizedEquation shift(quadratic(0, 1, 1), nonneg());
  CHECK(residual(shift, vec({0})) == 0.0);
}

TEST_CASE("subproblem examples satisfy the linearized inclusion exactly") {
  const GeneralizedEquation sq(quadratic(1, 0, -2), SetValuedMap::zero(1, 1));
  const Vector a = solve_subproblem(sq, vec({3}));
  CHECK(a(0) == doctest::Approx(11.0 / 6.0).epsilon(1e-14));
  CHECK(model_inclusion_holds(sq.f(), vec({-kInf}), vec({kInf}), vec({3}), a, 1e-9));

  const GeneralizedEquation shift(quadratic(0, 1, 1), nonneg());
  const Vector b = solve_subproblem(shift, vec({5}));
  CHECK(b(0) == 0.0);
  CHECK(model_inclusion_holds(shift.f(), vec({0}), vec({kInf}), vec({5}), b, 1e-9));

  const GeneralizedEquation capped(quadratic(1, 0, -2),
                                   SetValuedMap::normal_cone_box(vec({0}), vec({1.4})));
  const Vector c = solve_subproblem(capped, vec({3}));
  CHECK(c(0) == doctest::Approx(1.4));
  CHECK(model_inclusion_holds(capped.f(), vec({0}), vec({1.4}), vec({3}), c, 1e-9));
}

TEST_CASE("random box subproblems satisfy the inclusion") {
  Gen gen(81);
  int solved = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = gen.integer(1, 3);
    const Matrix M = gen.matrix(n, n);
    const Matrix S = M * M.transpose() + 0.5 * Matrix::Identity(n, n);  // monotone model
    const Vector c = gen.vector(n, -2, 2);
    const Function f(
        n, n, [S, c](const Vector& x) { return Vector(S * x + c + 0.1 * x.array().cube().matrix()); },
        [S](const Vector& x) {
          return Matrix(S + Matrix(0.3 * x.array().square().matrix().asDiagonal()));
        });
    Vector lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo(i) = gen.uniform(-1.5, -0.1);
      hi(i) = t % 3 == 0 ? kInf : gen.uniform(0.1, 1.5);
    }
    const GeneralizedEquation ge(f, SetValuedMap::normal_cone_box(lo, hi), 1);
    const Vector xk = gen.vector(n, -1, 1);
    const Vector x = solve_subproblem(ge, xk);
    CHECK(model_inclusion_holds(f, lo, hi, xk, x, 1e-9));
    ++solved;
  }
  CHECK(solved == 200);
}

TEST_CASE("without constraints the iteration is classical Newton") {
  const Function f(
      2, 2,
      [](const Vector& x) { return vec({x(0) * x(0) + x(1) - 3, x(0) - x(1) * x(1) + 1}); },
      [](const Vector& x) { return mat({{2 * x(0), 1}, {1, -2 * x(1)}}); });
  const GeneralizedEquation ge(f, SetValuedMap::zero(2, 2));
  NewtonConfig cfg;
  cfg.x0 = vec({2, 2});
  cfg.tol = 1e-13;
  const auto tr = josephy_newton(ge, cfg);
  REQUIRE(tr.converged);
  for (size_t k = 0; k + 1 < tr.iterates.size(); ++k) {
    const Vector& x = tr.iterates[k];
    const Vector expect = x - f.jacobian(x).lu().solve(f(x));
    CHECK((tr.iterates[k + 1] - expect).norm() <= 1e-12 * std::max(1.0, expect.norm()));
  }
}

TEST_CASE("convergence on the bundled problems") {
  const GeneralizedEquation sq(quadratic(1, 0, -2), SetValuedMap::zero(1, 1));
  const auto a = josephy_newton(sq, config(3));
  CHECK(a.converged);
  CHECK(std::abs(a.iterates.back()(0) - std::sqrt(2.0)) <= 1e-12);

  const double root = (std::sqrt(13.0) - 1.0) / 2.0;
  const GeneralizedEquation comp(quadratic(1, 1, -3), nonneg());
  const auto b = josephy_newton(comp, config(2));
  CHECK(b.converged);
  CHECK(std::abs(b.iterates.back()(0) - root) <= 1e-12);

  const GeneralizedEquation shift(quadratic(0, 1, 1), nonneg());
  const auto c = josephy_newton(shift, config(5));
  CHECK(c.converged);
  CHECK(c.iterates.size() <= 3);
  CHECK(c.iterates.back()(0) == 0.0);
}

TEST_CASE("quadratic rate on the square root of 2") {
  const GeneralizedEquation sq(quadratic(1, 0, -2), SetValuedMap::zero(1, 1));
  auto cfg = config(3, 1e-15);
  cfg.reference = vec({std::sqrt(2.0)});
  const auto tr = josephy_newton(sq, cfg);
  REQUIRE(tr.rate.has_value());
  const auto& r = *tr.rate;
  CHECK(r.exponent_hat >= 1.8);
  CHECK(r.exponent_hat <= 2.2);
  const double gstar = 1.0 / (2.0 * std::sqrt(2.0));
  CHECK(std::abs(r.gamma_hat - gstar) <= 0.5 * gstar);
  REQUIRE(tr.errors_to_ref.has_value());
  const auto& e = *tr.errors_to_ref;
  for (size_t k = 0; k + 1 < e.size(); ++k) {
    if (e[k] <= 1e-14 || e[k] >= 1e-1 || e[k + 1] <= 1e-14) continue;
    CHECK(e[k + 1] <= r.gamma_hat * e[k] * e[k] * 1.1);
  }
}

TEST_CASE("rate estimation edge cases") {
  const GeneralizedEquation shift(quadratic(0, 1, 1), nonneg());
  const auto tr = josephy_newton(shift, config(5));
  CHECK_THROWS_AS(estimate_rate(tr, vec({0})), InsufficientData);

  std::vector<Vector> geometric;
  for (int k = 1; k <= 20; ++k) geometric.push_back(vec({std::pow(0.5, k)}));
  const auto g = estimate_rate(geometric, vec({0}));
  CHECK(g.exponent_hat == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.gamma_hat == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("two solutions: the nearest subproblem solution picks the basin") {
  // 0 in 1 - x + N_[0, inf)(x) holds at x = 0 and x = 1.
  const GeneralizedEquation ge(quadratic(0, -1, 1), nonneg());
  CHECK(residual(ge, vec({0})) == 0.0);
  CHECK(residual(ge, vec({1})) == 0.0);
  const auto lo = josephy_newton(ge, config(0.1));
  CHECK(lo.converged);
  CHECK(lo.iterates.back()(0) == 0.0);
  const auto hi = josephy_newton(ge, config(0.9));
  CHECK(hi.converged);
  CHECK(hi.iterates.back()(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a singular solution loses the quadratic rate") {
  const GeneralizedEquation ge(quadratic(1, 0, 0), SetValuedMap::zero(1, 1));
  const auto tr = josephy_newton(ge, config(1, 1e-20, 40));
  CHECK(tr.iterates.size() >= 10);
  for (size_t k = 0; k + 1 < tr.iterates.size(); ++k) {
    CHECK(tr.iterates[k + 1](0) == doctest::Approx(0.5 * tr.iterates[k](0)));
  }
  const auto r = estimate_rate(tr, vec({0}));
  CHECK(std::abs(r.exponent_hat - 1.0) <= 0.05);
  CHECK(std::abs(r.gamma_hat - 0.5) <= 0.05);
}

TEST_CASE("generalized equation preconditions") {
  const Function wrong(
      1, 1, [](const Vector& x) { return vec({x(0) * x(0)}); },
      [](const Vector& x) { return mat({{3 * x(0) + 1}}); });
  CHECK_THROWS_AS(GeneralizedEquation(wrong, SetValuedMap::zero(1, 1)), PreconditionError);
  CHECK_THROWS_AS(GeneralizedEquation(quadratic(1, 0, -2), SetValuedMap::linear(mat({{1}}))),
                  PreconditionError);
  CHECK_THROWS_AS(GeneralizedEquation(quadratic(1, 0, -2), SetValuedMap::zero(2, 2)),
                  DimensionError);
  const GeneralizedEquation sq(quadratic(1, 0, -2), SetValuedMap::zero(1, 1));
  CHECK_THROWS_AS(josephy_newton(sq, config(1, 0.0)), PreconditionError);
  // f(x) = x^2 + 1 has no real root: the linear model at 0 is the constant 1.
  const GeneralizedEquation none(quadratic(1, 0, 1), SetValuedMap::zero(1, 1));
  CHECK_THROWS_AS(solve_subproblem(none, vec({0})), SubproblemUnsolvable);
  const auto failed = josephy_newton(none, config(0));
  CHECK(failed.failed);
  CHECK_FALSE(failed.failure.empty());
}

TEST_CASE("regularity at the solution is positive and finite") {
  const GeneralizedEquation sq(quadratic(1, 0, -2), SetValuedMap::zero(1, 1));
  const auto rg = regularity_at_solution(sq, vec({std::sqrt(2.0)}), 0.25, 21, 2);
  const double v = effective_value(rg).value();
  // |f'| ranges over (2(sqrt 2 - 0.25), 2(sqrt 2 + 0.25)) on the ball.
  CHECK(v >= 2 * (std::sqrt(2.0) - 0.25) - 1e-9);
  CHECK(v <= 2 * std::sqrt(2.0) + 1e-9);
}
