#include <cmath>

#include "doctest.h"
#include "regulab/conditions.hpp"
#include "regulab/errors.hpp"
#include "support.hpp"

using namespace regulab;
using testing_support::Gen;
using testing_support::mat;
using testing_support::vec;

namespace {

Function cube() {
  return Function(
      1, 1, [](const Vector& x) { return vec({x(0) * x(0) * x(0)}); },
      [](const Vector& x) { return mat({{3 * x(0) * x(0)}}); });
}

SlopeQuery slope_query(double x, double z, double y, double q, double gamma,
                       int resolution = 41) {
  SlopeQuery s;
  s.x = vec({x});
  s.z = vec({z});
  s.y = vec({y});
  s.q = q;
  s.gamma = ParametricGamma(gamma);
  s.radii = {0.05, 0.01};
  s.resolution = resolution;
  return s;
}

double final_estimate(const std::vector<SlopeEntry>& e) {
  REQUIRE(e.back().estimate.has_value());
  return *e.back().estimate;
}

// Independent EVP checker on a finite space.
bool evp_holds(const EkelandQuery& q, int xhat) {
  const double k = q.epsilon / q.lambda;
  if (!(q.dist(xhat, q.x0) < q.lambda)) return false;
  if (!(q.values[xhat] <= q.values[q.x0])) return false;
  for (int u = 0; u < static_cast<int>(q.values.size()); ++u) {
    if (q.values[u] + k * q.dist(u, xhat) < q.values[xhat]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("psi_value examples") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  CHECK(psi_value(I, vec({0}), 1.0, vec({0.5}), vec({0.5})).value() == doctest::Approx(0.5));
  CHECK(psi_value(I, vec({0}), 1.0, vec({0.5}), vec({0.4})).is_infinite());
  const auto C = SetValuedMap::smooth(cube());
  CHECK(psi_value(C, vec({0}), 1.0 / 3, vec({0.5}), vec({0.125})).value() ==
        doctest::Approx(0.5));
}

TEST_CASE("slope_psi examples") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  CHECK(std::abs(final_estimate(slope_psi(I, slope_query(0.5, 0.5, 0, 1, 1))) - 1.0) <= 0.05);
  CHECK(final_estimate(slope_psi(I, slope_query(0.0, 0.0, 0, 1, 1))) == 0.0);
  const auto C = SetValuedMap::smooth(cube());
  CHECK(std::abs(final_estimate(slope_psi(C, slope_query(0.2, 0.008, 0, 1.0 / 3, 1))) - 1.0) <=
        0.05);
  CHECK_THROWS_AS(slope_psi(I, slope_query(0.5, 0.4, 0, 1, 1)), PreconditionError);
}

TEST_CASE("slope_psi is nondecreasing in resolution at fixed radius") {
  const auto C = SetValuedMap::smooth(Function(
      1, 1, [](const Vector& x) { return vec({std::sin(2 * x(0)) + 0.3 * x(0)}); }));
  for (double x : {-0.3, 0.1, 0.4}) {
    const double z = std::sin(2 * x) + 0.3 * x;
    double prev = -1.0;
    for (int res : {11, 21, 41, 81}) {
      auto s = slope_query(x, z, 0.0, 1.0, 1.0, res);
      s.radii = {0.05};
      const double v = final_estimate(slope_psi(C, s));
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("slope_psi of a smooth scalar graph matches calculus (q = 1)") {
  // Along the graph, |f(u) - y| drops at rate |f'| per unit of
  // max(|du|, gamma |dv|) = |du| max(1, gamma |f'|).
  Gen gen(81);
  for (int t = 0; t < 12; ++t) {
    const double a = gen.uniform(-1, 1), b = gen.uniform(-1, 1);
    const Function f(1, 1, [a, b](const Vector& u) {
      return vec({a * u(0) + b * u(0) * u(0) + 0.2 * std::sin(u(0))});
    });
    const double x = gen.uniform(-0.5, 0.5);
    const double fx = f(vec({x}))(0);
    const double fp = a + 2 * b * x + 0.2 * std::cos(x);
    if (std::abs(fp) < 0.1) continue;
    const double gamma = gen.uniform(0.3, 2.0);
    const double y = fx + (gen.uniform(0, 1) < 0.5 ? -0.5 : 0.5);
    const double analytic = std::abs(fp) / std::max(1.0, gamma * std::abs(fp));
    auto s = slope_query(x, fx, y, 1.0, gamma, 81);
    s.radii = {0.02, 0.005};
    const double est = final_estimate(slope_psi(SetValuedMap::smooth(f), s));
    CHECK(std::abs(est - analytic) <= 0.10 * analytic);
  }
}

TEST_CASE("check_slope_sufficiency verdicts") {
  const auto I = SetValuedMap::linear(mat({{1}}));
  SlopeCheckParams p;
  p.tau = 0.9;
  const auto ok = check_slope_sufficiency(I, vec({0}), vec({0}), p);
  CHECK(ok.holds_on_samples);
  CHECK(ok.admissible > 0);
  REQUIRE(ok.rg_crosscheck.has_value());
  CHECK(*ok.rg_crosscheck >= 0.9);
  CHECK(ok.crosscheck_pass);

  p.tau = 1.5;
  const auto bad = check_slope_sufficiency(I, vec({0}), vec({0}), p);
  CHECK_FALSE(bad.holds_on_samples);
  REQUIRE(bad.violating_witness.has_value());
  CHECK(bad.violating_witness->slope < 0.9 * 1.5);
  CHECK(image_distance(I, bad.violating_witness->x, bad.violating_witness->z).value() <= 1e-9);

  const auto C = SetValuedMap::smooth(cube());
  SlopeCheckParams c;
  c.q = 1.0 / 3;
  c.tau = 0.5;
  CHECK(check_slope_sufficiency(C, vec({0}), vec({0}), c).holds_on_samples);
}

TEST_CASE("slope lower bound for metrically regular linear maps with gamma = 1/tau*") {
  // At every admissible (x, z = a x, y), the final slope estimate is at least
  // 0.9 tau* for the scalar map x -> a x with tau* = |a|.
  Gen gen(91);
  for (double a : {0.5, 1.0, 2.0, -1.5}) {
    const auto F = SetValuedMap::linear(mat({{a}}));
    const double tstar = std::abs(a);
    const double delta = 0.3, mu = 0.3;
    int tested = 0;
    for (int t = 0; t < 40 && tested < 8; ++t) {
      const double x = gen.uniform(-delta - mu, delta + mu);
      const double y = gen.uniform(-delta, delta);
      const double z = a * x;
      if (!(std::abs(z - y) > 1e-3 && std::abs(z - y) < tstar * mu)) continue;
      auto s = slope_query(x, z, y, 1.0, 1.0 / tstar, 41);
      s.radii = {std::min(0.05, 0.5 * std::abs(z - y) / tstar)};
      CHECK(final_estimate(slope_psi(F, s)) >= 0.9 * tstar);
      ++tested;
    }
    CHECK(tested > 0);
  }
}

TEST_CASE("normal cone generators of polyhedral graphs") {
  const auto band = std::get<PolyhedralGraph>(
      SetValuedMap::polyhedral(mat({{1}, {-1}}), mat({{-1}, {1}}), vec({0, 1})).rep());
  CHECK(normal_cone_polyhedral_graph(band, vec({0}), vec({0.5})).generators.empty());
  const auto lower = normal_cone_polyhedral_graph(band, vec({0}), vec({0}));
  REQUIRE(lower.generators.size() == 1);
  CHECK(lower.generators[0].first(0) == 1.0);
  CHECK(lower.generators[0].second(0) == -1.0);
  CHECK_THROWS_AS(normal_cone_polyhedral_graph(band, vec({0}), vec({3})), PreconditionError);

  const Matrix A = mat({{2, 0}, {1, 1}});
  const auto G = std::get<PolyhedralGraph>(linear_graph(A).rep());
  const auto all = normal_cone_polyhedral_graph(G, vec({0.3, -0.2}), A * vec({0.3, -0.2}));
  CHECK(all.generators.size() == 4);
}

TEST_CASE("coderivative_distance examples") {
  const Matrix D = mat({{2, 0}, {0, 1}});
  const auto G = std::get<PolyhedralGraph>(linear_graph(D).rep());
  const auto r = coderivative_distance(G, vec({0, 0}), vec({0, 0}), vec({0, 1}));
  CHECK(r.distance.value() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(coderivative_distance(G, vec({0, 0}), vec({0, 0}), vec({0, 0})).distance.value() ==
        doctest::Approx(0.0));

  const auto band = std::get<PolyhedralGraph>(
      SetValuedMap::polyhedral(mat({{1}, {-1}}), mat({{-1}, {1}}), vec({0, 1})).rep());
  const auto b = coderivative_distance(band, vec({0}), vec({0}), vec({1}));
  CHECK_FALSE(b.infeasible);
  CHECK(b.distance.value() == doctest::Approx(1.0));
  // Only nonnegative multiples of the generator exist: y* = -1 is infeasible.
  CHECK(coderivative_distance(band, vec({0}), vec({0}), vec({-1})).infeasible);
  CHECK(coderivative_distance(band, vec({0}), vec({0}), vec({-1})).distance.is_infinite());
}

TEST_CASE("coderivative_distance equals |A^T y*| on 100 random linear graphs") {
  Gen gen(101);
  for (int t = 0; t < 100; ++t) {
    const int n = gen.integer(1, 3), m = gen.integer(1, 3);
    const Matrix A = gen.matrix(m, n, -2, 2);
    const auto G = std::get<PolyhedralGraph>(linear_graph(A).rep());
    const Vector x = gen.vector(n);
    const Vector ys = gen.vector(m, -2, 2);
    const auto r = coderivative_distance(G, x, A * x, ys);
    CHECK(std::abs(r.distance.value() - (A.transpose() * ys).norm()) <= 1e-8);
  }
}

TEST_CASE("check_coderivative_sufficiency verdicts") {
  const Matrix D = mat({{2, 0}, {0, 1}});
  const auto G = linear_graph(D);
  CoderivativeConditionQuery q;
  q.tau = 0.9;
  const auto ok = check_coderivative_sufficiency(G, vec({0, 0}), vec({0, 0}), q);
  CHECK(ok.holds_on_samples);
  CHECK(ok.samples > 0);
  REQUIRE(ok.min_value.has_value());
  CHECK(*ok.min_value >= 1.0 * (1 - q.eta) * 0.9);
  CHECK(ok.crosscheck_pass);

  q.tau = 1.5;
  const auto bad = check_coderivative_sufficiency(G, vec({0, 0}), vec({0, 0}), q);
  CHECK_FALSE(bad.holds_on_samples);
  REQUIRE(bad.violating_witness.has_value());
  // The witness direction leans on the weak singular direction (0, 1).
  const Vector& ys = bad.violating_witness->ystar;
  CHECK(std::abs(ys(1)) > std::abs(ys(0)));

  q.tau = 1e-3;
  CHECK(check_coderivative_sufficiency(G, vec({0, 0}), vec({0, 0}), q).holds_on_samples);

  Matrix big = Matrix::Identity(7, 7);
  CHECK_THROWS_AS(check_coderivative_sufficiency(linear_graph(big), Vector::Zero(7),
                                                 Vector::Zero(7), q),
                  Error);
}

TEST_CASE("coderivative lower bound on random well-conditioned linear maps") {
  Gen gen(111);
  for (int t = 0; t < 5; ++t) {
    Vector sigma;
    const Matrix A = gen.conditioned(2, 0.7, 2.0, &sigma);
    CoderivativeConditionQuery q;
    q.tau = 0.5 * sigma.minCoeff();
    q.id = "random-" + std::to_string(t);
    const auto v = check_coderivative_sufficiency(linear_graph(A), vec({0, 0}), vec({0, 0}), q);
    REQUIRE(v.min_value.has_value());
    CHECK(*v.min_value >= sigma.minCoeff() * (1 - q.eta) * 0.9);
  }
}

TEST_CASE("numeric slope and the chain rule") {
  const std::vector<double> radii = {0.05, 0.01};
  const ScalarFunction absval = [](const Vector& x) { return std::abs(x(0)); };
  CHECK(*numeric_slope(absval, vec({1}), radii, 41).back().estimate == doctest::Approx(1.0));
  CHECK(*numeric_slope(absval, vec({0}), radii, 41).back().estimate == 0.0);
  const ScalarFunction sq = [](const Vector& x) { return x(0) * x(0); };
  CHECK(std::abs(*numeric_slope(sq, vec({0.3}), radii, 41).back().estimate - 0.6) <= 0.02);

  const ScalarFunction g = [](const Vector& x) { return x(0) * x(0) + 1.0; };
  const auto cr = slope_chain_rule_check(g, vec({1}), 0.5, radii, 41);
  CHECK(std::abs(cr.slope_of_power - 1.0 / std::sqrt(2.0)) <= 0.02);
  CHECK(cr.predicted == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
  CHECK(cr.pass);
  CHECK(slope_chain_rule_check(g, vec({1}), 1.0, radii, 41).residual == 0.0);
  const ScalarFunction three = [](const Vector&) { return 3.0; };
  const auto c = slope_chain_rule_check(three, vec({0.2}), 0.7, radii, 41);
  CHECK(c.slope_of_power == 0.0);
  CHECK(c.predicted == 0.0);
  CHECK(c.pass);
}

TEST_CASE("Ekeland examples") {
  EkelandQuery one;
  one.dist = Matrix::Zero(1, 1);
  one.values = {2.0};
  const auto c1 = ekeland_point(one);
  CHECK(c1.index == 0);
  CHECK(c1.holds());

  EkelandQuery two;
  two.dist = mat({{0, 1}, {1, 0}});
  two.values = {0.5, 0.0};
  two.epsilon = 1.0;
  two.lambda = 2.0;
  const auto c2 = ekeland_point(two);
  CHECK(c2.index == 0);
  CHECK(c2.holds());
  CHECK(evp_holds(two, 0));
  CHECK(c2.min_slack == doctest::Approx(0.0));

  EkelandQuery far = two;
  far.values = {5.0, 0.0};
  CHECK_THROWS_AS(ekeland_point(far), PreconditionError);
  EkelandQuery broken;
  broken.dist = mat({{0, 1, 5}, {1, 0, 1}, {5, 1, 0}});
  broken.values = {0, 0, 0};
  CHECK_THROWS_AS(ekeland_point(broken), PreconditionError);
}

TEST_CASE("Ekeland certificates on 1000 random finite spaces") {
  Gen gen(121);
  int failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const int N = t < 100 ? 100 : gen.integer(2, 30);
    std::vector<Vector> pts;
    for (int i = 0; i < N; ++i) pts.push_back(gen.vector(2, 0, 3));
    EkelandQuery q;
    q.dist.resize(N, N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) q.dist(i, j) = (pts[i] - pts[j]).norm();
    }
    for (int i = 0; i < N; ++i) q.values.push_back(gen.uniform(0, 2));
    q.epsilon = gen.uniform(0.05, 1.0);
    q.lambda = gen.uniform(0.1, 3.0);
    const double vmin = *std::min_element(q.values.begin(), q.values.end());
    std::vector<int> starts;
    for (int i = 0; i < N; ++i) {
      if (q.values[i] < vmin + q.epsilon) starts.push_back(i);
    }
    q.x0 = starts[gen.integer(0, static_cast<int>(starts.size()) - 1)];
    const auto cert = ekeland_point(q);
    if (!cert.holds() || !evp_holds(q, cert.index)) ++failures;
  }
  CHECK(failures == 0);
}
