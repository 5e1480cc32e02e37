#include <cmath>

#include "doctest.h"
#include "regulab/errors.hpp"
#include "regulab/perturbation.hpp"
#include "support.hpp"

using namespace regulab;
using testing_support::mat;
using testing_support::vec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Function scalar(std::function<double(double)> f, std::function<double(double)> df) {
  return Function(
      1, 1, [f](const Vector& x) { return vec({f(x(0))}); },
      [df](const Vector& x) { return mat({{df(x(0))}}); });
}

Function cube(double c = 1.0) {
  return scalar([c](double u) { return c * u * u * u; },
                [c](double u) { return 3 * c * u * u; });
}

ModulusQuery est(int n, int m, double delta = 0.5, int res = 21, int levels = 1) {
  ModulusQuery q;
  q.xbar = Vector::Zero(n);
  q.ybar = Vector::Zero(m);
  q.delta = delta;
  q.resolution = res;
  q.refinement_levels = levels;
  return q;
}

PerturbationInstance scalar_instance(SetValuedMap F, Function f, double q = 1.0) {
  return PerturbationInstance{std::move(F), std::move(f), vec({0}), vec({0}), q};
}

}  // namespace

TEST_CASE("Lyusternik-Graves examples") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  const auto r0 = verify_lyusternik_graves(scalar_instance(I, Function::zero(1, 1)), est(1, 1));
  CHECK(effective_value(r0.rg_F).value() == doctest::Approx(1.0));
  CHECK(effective_value(r0.rg_Fplusf).value() == doctest::Approx(1.0));
  CHECK(r0.lip_f.tau_hat.value() == 0.0);
  CHECK(std::abs(r0.margin) <= 1e-9);
  CHECK(r0.pass);

  const auto r1 = verify_lyusternik_graves(
      scalar_instance(I, -0.3 * Function::identity(1)), est(1, 1));
  CHECK(effective_value(r1.rg_Fplusf).value() == doctest::Approx(0.7));
  CHECK(std::abs(r1.margin) <= 1e-9);

  const auto r2 = verify_lyusternik_graves(
      scalar_instance(SetValuedMap::smooth(cube()), cube(0.1), 1.0 / 3), est(1, 1, 0.5, 41, 2));
  CHECK(r2.pass);
}

TEST_CASE("Lyusternik-Graves sharpness family") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  for (double lambda : {0.1, 0.3, 0.5}) {
    const auto r = verify_lyusternik_graves(
        scalar_instance(I, -lambda * Function::identity(1)), est(1, 1));
    CHECK(std::abs(effective_value(r.rg_Fplusf).value() - (1 - lambda)) <= 0.02);
    CHECK(r.margin >= -0.05);
  }
}

TEST_CASE("Lyusternik-Graves battery") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  const auto D = SetValuedMap::linear(mat({{2, 0}, {0, 1}}));
  const auto R = SetValuedMap::linear(mat({{1, 0.5}, {-0.5, 1}}));
  const auto Npos = sum_with_function(SetValuedMap::normal_cone_box(vec({0}), vec({kInf})),
                                      Function::identity(1));
  const auto Nbox = sum_with_function(SetValuedMap::normal_cone_box(vec({-1}), vec({1})),
                                      Function::identity(1));
  const auto sin1 = scalar([](double u) { return std::sin(u); },
                           [](double u) { return std::cos(u); });
  const Function trig2(
      2, 2, [](const Vector& x) { return vec({0.3 * std::sin(x(0)), 0.2 * x(1) * x(1)}); },
      [](const Vector& x) { return mat({{0.3 * std::cos(x(0)), 0}, {0, 0.4 * x(1)}}); });
  const Function mix2(
      2, 2,
      [](const Vector& x) { return vec({0.1 * x(0) * x(1), 0.2 * (std::cos(x(0)) - 1)}); },
      [](const Vector& x) {
        return mat({{0.1 * x(1), 0.1 * x(0)}, {-0.2 * std::sin(x(0)), 0}});
      });

  struct Case {
    PerturbationInstance inst;
    ModulusQuery query;
  };
  const std::vector<Case> cases = {
      {scalar_instance(I, Function::zero(1, 1)), est(1, 1)},
      {scalar_instance(I, -0.1 * Function::identity(1)), est(1, 1)},
      {scalar_instance(I, 0.4 * Function::identity(1)), est(1, 1)},
      {scalar_instance(I, 0.2 * sin1), est(1, 1)},
      {scalar_instance(I, -0.5 * sin1), est(1, 1)},
      {scalar_instance(SetValuedMap::smooth(cube()), cube(0.1), 1.0 / 3), est(1, 1, 0.5, 41, 2)},
      {scalar_instance(SetValuedMap::smooth(cube()), 0.05 * sin1, 1.0 / 3), est(1, 1, 0.5, 41)},
      {scalar_instance(Npos, 0.3 * sin1), est(1, 1)},
      {scalar_instance(Nbox, -0.2 * Function::identity(1)), est(1, 1)},
      {PerturbationInstance{D, trig2, vec({0, 0}), vec({0, 0}), 1.0}, est(2, 2, 0.5, 11, 2)},
      {PerturbationInstance{R, mix2, vec({0, 0}), vec({0, 0}), 1.0}, est(2, 2, 0.5, 11, 2)},
  };
  REQUIRE(cases.size() >= 10);
  for (const auto& c : cases) {
    const auto r = verify_lyusternik_graves(c.inst, c.query);
    CHECK(r.margin >= -0.05);
    CHECK(r.pass);
  }
}

TEST_CASE("vacuous instances are flagged and never fail") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  const auto r = verify_lyusternik_graves(scalar_instance(I, -1.5 * Function::identity(1)),
                                          est(1, 1));
  CHECK(r.vacuous);
  CHECK(r.pass);
}

TEST_CASE("perturbation instance validation") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  const auto shifted = Function::affine(mat({{1}}), vec({1}));
  CHECK_THROWS_AS(verify_lyusternik_graves(scalar_instance(I, shifted), est(1, 1)),
                  PreconditionError);
  CHECK_THROWS_AS(
      verify_lyusternik_graves(scalar_instance(I, Function::identity(1), 2.0), est(1, 1)),
      PreconditionError);
}

TEST_CASE("contraction fixed points and residual domination") {
  ContractionConfig cfg;
  cfg.theta = 0.5;
  cfg.delta = 3.0;
  const auto lin = contraction_fixed_point([](const Vector& u) { return Vector(0.5 * u); },
                                           vec({1}), cfg);
  CHECK(lin.converged);
  CHECK(std::abs(lin.xhat(0)) <= 1e-9);
  for (size_t k = 0; k < lin.residuals.size(); ++k) {
    CHECK(lin.residuals[k] <= std::pow(cfg.theta, k) * lin.residuals[0] * 1.01);
  }

  // Oracle: long-double iteration of cos far past convergence.
  long double w = 1.0L;
  for (int i = 0; i < 10000; ++i) w = std::cos(w);
  ContractionConfig cc;
  cc.theta = 0.85;
  cc.delta = 4.0;
  cc.max_iter = 500;
  const auto cosr = contraction_fixed_point(
      [](const Vector& u) { return vec({std::cos(u(0))}); }, vec({1}), cc);
  CHECK(cosr.converged);
  CHECK(std::abs(cosr.xhat(0) - static_cast<double>(w)) <= 1e-8);
  for (size_t k = 0; k < cosr.residuals.size(); ++k) {
    CHECK(cosr.residuals[k] <= std::pow(cc.theta, k) * cosr.residuals[0] * 1.01);
  }

  CHECK_THROWS_AS(contraction_fixed_point([](const Vector& u) { return Vector(2.0 * u); },
                                          vec({1}), cfg),
                  ContractionViolated);
  CHECK_THROWS_AS(contraction_fixed_point([](const Vector& u) { return Vector(u.array() + 10); },
                                          vec({1}), cfg),
                  PreconditionError);
}

TEST_CASE("perturbed_solve on the three bundled instances") {
  ContractionConfig cfg;
  cfg.theta = 0.5;
  cfg.delta = 2.0;
  cfg.tol = 1e-10;

  const auto a = perturbed_solve(SetValuedMap::linear(mat({{1}})),
                                 -0.3 * Function::identity(1), vec({0.35}), vec({0}), cfg);
  CHECK(a.verified);
  CHECK(a.xhat(0) == doctest::Approx(0.5).epsilon(1e-9));

  const Matrix A = mat({{2, 0}, {0, 1}});
  const Function f(
      2, 2, [](const Vector& x) { return Vector(0.1 * x.array().sin().matrix()); },
      [](const Vector& x) {
        return Matrix(0.1 * x.array().cos().matrix().asDiagonal());
      });
  const auto b = perturbed_solve(SetValuedMap::linear(A), f, vec({1, 1}), vec({0.5, 0.9}), cfg);
  CHECK(b.verified);
  // Oracle: plain Newton on A x + f(x) = y.
  Vector x = vec({0, 0});
  for (int i = 0; i < 50; ++i) {
    const Vector r = A * x + f(x) - vec({1, 1});
    x -= (A + f.jacobian(x)).lu().solve(r);
  }
  CHECK((b.xhat - x).norm() <= 1e-8);
  CHECK((A * b.xhat + f(b.xhat) - vec({1, 1})).norm() <= 1e-8);

  const auto N = SetValuedMap::normal_cone_box(vec({0}), vec({kInf}));
  const auto c = perturbed_solve(N, Function::affine(mat({{1}}), vec({1})), vec({0}),
                                 vec({0.2}), cfg);
  CHECK(c.verified);
  CHECK(std::abs(c.xhat(0)) <= 1e-12);
  CHECK(c.residual <= 1e-8);
}

TEST_CASE("strict approximation") {
  const auto sq = scalar([](double u) { return u * u; }, [](double u) { return 2 * u; });
  const auto zero = Function::zero(1, 1);
  const auto same = check_strict_approximation(sq, sq, vec({0}), 1.0, 0.1, 41);
  CHECK(same.is_strict);
  for (double v : same.lip_diff) CHECK(v == 0.0);

  const auto quad = check_strict_approximation(sq, zero, vec({0}), 1.0, 0.1, 41);
  CHECK(quad.is_strict);
  for (size_t k = 1; k < quad.lip_diff.size(); ++k) {
    CHECK(quad.lip_diff[k] <= quad.lip_diff[k - 1]);
  }
  const auto lin = check_strict_approximation(Function::identity(1), zero, vec({0}), 1.0, 0.1, 41);
  CHECK_FALSE(lin.is_strict);
  CHECK(lin.lip_diff.back() == doctest::Approx(1.0));
}

TEST_CASE("linearization equivalence") {
  const auto aff = Function::affine(mat({{2}}), vec({0}));
  const auto exact = linearization_equivalence(SetValuedMap::zero(1, 1), aff, vec({0}),
                                               vec({0}), est(1, 1, 0.2));
  CHECK(exact.pass);
  for (const auto& l : exact.levels) CHECK(l.relative_gap == 0.0);

  const auto f1 = scalar([](double u) { return u + u * u; }, [](double u) { return 1 + 2 * u; });
  const auto r1 = linearization_equivalence(SetValuedMap::zero(1, 1), f1, vec({0}), vec({0}),
                                            est(1, 1, 0.2));
  CHECK(r1.pass);
  CHECK(r1.levels.size() == 5);
  CHECK(r1.levels.back().relative_gap < r1.levels.front().relative_gap);

  const double xbar = std::sqrt(3.0) - 1.0;
  const auto f2 = scalar([](double u) { return u - 1 + 0.5 * u * u; },
                         [](double u) { return 1 + u; });
  const auto r2 = linearization_equivalence(SetValuedMap::normal_cone_box(vec({0}), vec({kInf})),
                                            f2, vec({xbar}), vec({0}), est(1, 1, 0.2));
  CHECK(r2.pass);
  CHECK(r2.levels.back().relative_gap <= 0.10);
}
