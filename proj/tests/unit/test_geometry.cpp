#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "regulab/errors.hpp"
#include "regulab/geometry.hpp"
#include "support.hpp"

using namespace regulab;
using testing_support::Gen;
using testing_support::mat;
using testing_support::vec;

TEST_CASE("ExtReal: infinity and shortest text") {
  const ExtReal inf = ExtReal::infinity();
  CHECK(inf.is_infinite());
  CHECK(inf.to_string() == "inf");
  CHECK(ExtReal(0.5).to_string() == "0.5");
  CHECK(ExtReal(2.0).to_string() == "2");
  CHECK(extended_difference(inf, inf) == 0.0);
  CHECK(std::isinf(extended_difference(1.0, inf)));
  CHECK(extended_difference(inf, 3.0) == std::numeric_limits<double>::infinity());
  CHECK(ExtReal(1.0) < inf);
  CHECK((inf + ExtReal(1.0)).is_infinite());
  CHECK(from_double(std::numeric_limits<double>::infinity()).is_infinite());
  CHECK_THROWS(ExtReal(std::nan("")));
  CHECK_THROWS(inf.value());
}

TEST_CASE("product_distance examples") {
  const ParametricGamma g2(2.0), g5(5.0);
  CHECK(product_distance(vec({0}), vec({0}), vec({0}), vec({0}), g2) == 0.0);
  CHECK(product_distance(vec({0}), vec({0}), vec({1}), vec({0.75}), g2) ==
        doctest::Approx(1.5));
  CHECK(product_distance(vec({3, 4}), vec({0}), vec({0, 0}), vec({0}), g5) ==
        doctest::Approx(5.0));
  CHECK_THROWS_AS(ParametricGamma(0.0), PreconditionError);
  CHECK_THROWS_AS(product_distance(vec({0}), vec({0}), vec({0, 0}), vec({0}), g2),
                  DimensionError);
}

TEST_CASE("product_distance: gamma 1 is the max metric, and the triangle inequality") {
  Gen gen(11);
  const ParametricGamma one(1.0);
  for (int i = 0; i < 100; ++i) {
    const Vector u1 = gen.vector(2), v1 = gen.vector(3), u2 = gen.vector(2), v2 = gen.vector(3);
    const double expect = std::max((u1 - u2).norm(), (v1 - v2).norm());
    CHECK(product_distance(u1, v1, u2, v2, one) == doctest::Approx(expect).epsilon(1e-14));
  }
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const ParametricGamma g(gen.uniform(0.01, 10.0));
    const Vector a1 = gen.vector(2, -5, 5), a2 = gen.vector(1, -5, 5);
    const Vector b1 = gen.vector(2, -5, 5), b2 = gen.vector(1, -5, 5);
    const Vector c1 = gen.vector(2, -5, 5), c2 = gen.vector(1, -5, 5);
    const double ab = product_distance(a1, a2, b1, b2, g);
    const double bc = product_distance(b1, b2, c1, c2, g);
    const double ac = product_distance(a1, a2, c1, c2, g);
    const double ba = product_distance(b1, b2, a1, a2, g);
    if (ac > ab + bc + 1e-12 || ab != ba) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("dual_product_norm examples and brute-force duality") {
  CHECK(dual_product_norm(vec({0}), vec({0}), ParametricGamma(3.0)) == 0.0);
  CHECK(dual_product_norm(vec({1, 0}), vec({0, 2}), ParametricGamma(4.0)) ==
        doctest::Approx(1.5));

  // sup of <(xs, ys), (x, y)> over max(|x|, gamma |y|) <= 1, in R^1 x R^1
  // by a dense grid over the primal unit ball.
  Gen gen(7);
  for (int t = 0; t < 20; ++t) {
    const double xs = gen.uniform(-2, 2), ys = gen.uniform(-2, 2);
    const double gamma = gen.uniform(0.2, 5.0);
    double best = 0.0;
    const int N = 400;
    for (int i = 0; i <= N; ++i) {
      const double x = -1.0 + 2.0 * i / N;
      for (int j = 0; j <= N; ++j) {
        const double y = (-1.0 + 2.0 * j / N) / gamma;
        best = std::max(best, xs * x + ys * y);
      }
    }
    const double d = dual_product_norm(vec({xs}), vec({ys}), ParametricGamma(gamma));
    CHECK(d == doctest::Approx(best).epsilon(1e-9));
  }
}

namespace {

// Nearest point of {x : A x <= b} in R^2 by a dense grid search followed by
// a local pattern search. Independent of the active-set code.
Vector grid_projection_2d(const Polyhedron& P, const Vector& x, double radius) {
  Vector best;
  double bd = std::numeric_limits<double>::infinity();
  const int N = 400;
  for (int i = 0; i <= N; ++i) {
    for (int j = 0; j <= N; ++j) {
      const Vector p = x + vec({-radius + 2 * radius * i / N, -radius + 2 * radius * j / N});
      if ((P.A * p - P.b).maxCoeff() > 0) continue;
      if ((p - x).norm() < bd) {
        bd = (p - x).norm();
        best = p;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("project_polyhedron examples") {
  const Polyhedron half(mat({{1}}), vec({1}));
  CHECK(project_polyhedron(half, vec({0.5}))(0) == doctest::Approx(0.5));

  const Polyhedron box(mat({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}), vec({1, 1, 0, 0}));
  const Vector p = project_polyhedron(box, vec({2, -1}));
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(0.0));

  const Polyhedron plane(mat({{1, 1}}), vec({0}));
  const Vector q = project_polyhedron(plane, vec({1, 1}));
  CHECK(q.norm() <= 1e-12);
  const Vector oracle = grid_projection_2d(plane, vec({1, 1}), 2.0);
  CHECK((q - oracle).norm() <= 0.02);
}

TEST_CASE("project_polyhedron: errors") {
  const Polyhedron empty(mat({{1}, {-1}}), vec({-1, -1}));
  CHECK_THROWS_AS(project_polyhedron(empty, vec({0})), EmptySetError);
  CHECK_FALSE(try_project_polyhedron(empty, vec({0})).has_value());
  Matrix A = Matrix::Zero(13, 1);
  A.col(0).setOnes();
  CHECK_THROWS_AS(project_polyhedron(Polyhedron(A, Vector::Ones(13)), vec({0})),
                  SizeError);
  CHECK_THROWS_AS(project_polyhedron(Polyhedron(mat({{1, 1}}), vec({0})), vec({0})),
                  DimensionError);
}

TEST_CASE("project_polyhedron: random polygons against the grid oracle, idempotence, optimality") {
  Gen gen(21);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const int rows = gen.integer(2, 6);
    Matrix A = gen.matrix(rows, 2);
    Vector b = gen.vector(rows, 0.1, 1.0);  // contains the origin
    const Polyhedron P(A, b);
    const Vector x = gen.vector(2, -3, 3);
    const Vector p = project_polyhedron(P, x);
    CHECK(P.contains(p));
    // Idempotence.
    CHECK((project_polyhedron(P, p) - p).norm() <= 1e-10);
    // Variational inequality <x - p, w - p> <= 0 over feasible grid points.
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const Vector w = gen.vector(2, -4, 4);
      if (!P.contains(w, 0.0)) continue;
      worst = std::max(worst, (x - p).dot(w - p));
    }
    CHECK(worst <= 1e-9);
    const Vector oracle = grid_projection_2d(P, x, (x - p).norm() + 0.05);
    CHECK((p - oracle).norm() <= 0.03);
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("excess: examples and monotonicity in A") {
  const SetDistance ball{[](const Vector& a) {
                           return ExtReal(std::max(0.0, a.norm() - 1.0));
                         },
                         false};
  CHECK(excess({}, ball) == ExtReal(0.0));
  const std::vector<Vector> a1 = {vec({2, 0})};
  CHECK(excess(a1, ball).value() == doctest::Approx(1.0));

  const SetDistance one{[](const Vector& a) { return ExtReal(std::abs(a(0) - 1.0)); },
                        false};
  const std::vector<Vector> a2 = {vec({0}), vec({3})};
  CHECK(excess(a2, one).value() == doctest::Approx(2.0));

  const SetDistance nothing{[](const Vector&) { return ExtReal::infinity(); }, true};
  CHECK(excess({}, nothing).is_infinite());
  CHECK(excess(a2, nothing).is_infinite());

  Gen gen(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<Vector> A2;
    for (int i = 0; i < 6; ++i) A2.push_back(gen.vector(2, -3, 3));
    const std::vector<Vector> A1(A2.begin(), A2.begin() + gen.integer(0, 6));
    CHECK(excess(A1, ball) <= excess(A2, ball));
  }
}

TEST_CASE("nnls and distance_to_cone against enumeration") {
  Gen gen(9);
  for (int t = 0; t < 50; ++t) {
    const Matrix G = gen.matrix(3, 2);
    const Vector target = gen.vector(3);
    // Oracle: the minimum over the four faces of a two-generator cone.
    double best = target.norm();
    for (int j = 0; j < 2; ++j) {
      const double s = std::max(0.0, G.col(j).dot(target) / G.col(j).squaredNorm());
      best = std::min(best, (target - s * G.col(j)).norm());
    }
    const Vector lam = G.colPivHouseholderQr().solve(target);
    if (lam.minCoeff() >= 0) best = std::min(best, (G * lam - target).norm());
    CHECK(distance_to_cone(G, target) == doctest::Approx(best).epsilon(1e-8));
    const Vector l = nnls(G, target);
    CHECK(l.minCoeff() >= 0.0);
  }
}
