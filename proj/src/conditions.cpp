#include "regulab/conditions.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "regulab/errors.hpp"
#include "regulab/grid.hpp"
#include "regulab/moduli.hpp"

namespace regulab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double qpow(double d, double q) { return q == 1.0 ? d : std::pow(d, q); }

void check_order(double q) {
  if (!(q > 0.0) || q > 1.0) {
    throw PreconditionError("order q must lie in (0,1]");
  }
}

void check_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw PreconditionError("slope: no radii");
  for (size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] >= 1e-5) || !std::isfinite(radii[i])) {
      throw PreconditionError("slope: radii must be finite and >= 1e-5");
    }
    if (i > 0 && !(radii[i] < radii[i - 1])) {
      throw PreconditionError("slope: radii must be strictly decreasing");
    }
  }
}

}  // namespace

ExtReal psi_value(const SetValuedMap& F, const Vector& y, double q,
                  const Vector& u, const Vector& v) {
  check_same_dim(v, y, "psi_value");
  if (image_distance(F, u, v).as_double() > 1e-8) return ExtReal::infinity();
  return ExtReal(qpow((v - y).norm(), q));
}

void SlopeQuery::validate(const SetValuedMap& F) const {
  if (!(q > 0.0)) throw PreconditionError("slope query: q must be positive");
  check_radii(radii);
  if (resolution < 3) throw PreconditionError("slope query: resolution < 3");
  check_same_dim(z, y, "slope query");
  if (image_distance(F, x, z).as_double() > 1e-8) {
    throw PreconditionError("slope query: (x, z) is not on the graph");
  }
}

std::vector<SlopeEntry> slope_psi(const SetValuedMap& F,
                                  const SlopeQuery& query) {
  query.validate(F);
  const double g = query.gamma.value();
  const double base = qpow((query.z - query.y).norm(), query.q);
  std::vector<SlopeEntry> out;
  for (double r : query.radii) {
    const EvalRegion region{query.x, query.z, r, r / g, query.resolution};
    SlopeEntry entry{r, std::nullopt};
    for (const auto& [u, v] : graph_sample(F, region)) {
      const double pd = product_distance(u, v, query.x, query.z, query.gamma);
      if (pd == 0.0 || pd > r * (1.0 + 1e-12)) continue;
      const double num = base - qpow((v - query.y).norm(), query.q);
      const double quotient = std::max(num, 0.0) / pd;
      entry.estimate = std::max(entry.estimate.value_or(0.0), quotient);
    }
    out.push_back(entry);
  }
  return out;
}

SlopeVerdict check_slope_sufficiency(const SetValuedMap& F, const Vector& xbar,
                                     const Vector& ybar,
                                     const SlopeCheckParams& p) {
  check_order(p.q);
  if (!(p.tau > 0) || !(p.delta > 0) || !(p.mu > 0)) {
    throw PreconditionError("slope check: tau, delta and mu must be positive");
  }
  if (p.resolution < 3) throw PreconditionError("slope check: resolution < 3");
  const ParametricGamma gamma(p.gamma);
  if (image_distance(F, xbar, ybar).as_double() > kMembershipTol) {
    throw PreconditionError("slope check: base point is not on the graph");
  }

  const double outer = p.delta + p.mu;
  const double reach = std::pow(p.tau * p.mu, 1.0 / p.q);
  // Points with |v - y| >= |z - y| add nothing to the sup, so the candidate
  // box in the second factor only needs radius delta + reach.
  const EvalRegion cand_region{xbar, ybar, outer, p.delta + reach,
                               4 * (p.resolution - 1) + 1};
  const auto candidates = graph_sample(F, cand_region);
  const EvalRegion search{xbar, ybar, outer, p.delta, p.resolution};
  const std::vector<double> local_radii{0.05 * p.delta, 0.005 * p.delta};

  SlopeVerdict verdict;
  const auto xs = ball_grid(xbar, outer, p.resolution);
  const auto ys = ball_grid(ybar, p.delta, p.resolution);
  for (const auto& y : ys) {
    const PreimageLocator locator(F, y, search);
    for (const auto& x : xs) {
      const PreimageResult pre = locator.query(x);
      if (pre.distance.is_finite() && pre.distance.value() <= kExclusionBand) {
        continue;
      }
      const auto proj = image_projection(F, x, y);
      if (!proj.nearest) continue;
      const Vector& z = *proj.nearest;
      const double base = qpow((z - y).norm(), p.q);
      if (!(base < p.tau * p.mu)) continue;
      ++verdict.admissible;

      auto quotient = [&](const Vector& u, const Vector& v) {
        const double pd = product_distance(u, v, x, z, gamma);
        if (pd == 0.0) return 0.0;
        return std::max(base - qpow((v - y).norm(), p.q), 0.0) / pd;
      };
      double sup = 0.0;
      for (const auto& [u, v] : candidates) sup = std::max(sup, quotient(u, v));
      if (pre.nearest &&
          ((*pre.nearest - xbar).cwiseAbs().array() <= outer).all()) {
        sup = std::max(sup, quotient(*pre.nearest, y));
      }

      SlopeQuery local{x, z, y, p.q, gamma, local_radii, 21};
      const auto entries = slope_psi(F, local);
      if (entries.back().estimate) {
        verdict.min_local_slope =
            std::min(verdict.min_local_slope.value_or(kInf),
                     *entries.back().estimate);
      }

      if (!verdict.min_slope || sup < *verdict.min_slope) {
        verdict.min_slope = sup;
        if (sup < 0.9 * p.tau) verdict.violating_witness = SlopeTriple{x, y, z, sup};
      }
    }
  }
  verdict.holds_on_samples = !verdict.violating_witness.has_value();

  if (verdict.holds_on_samples) {
    ModulusQuery mq;
    mq.q = p.q;
    mq.xbar = xbar;
    mq.ybar = ybar;
    mq.delta = p.delta;
    mq.mu = p.mu;
    mq.residual_cap = p.tau * p.mu;
    mq.resolution = std::max(5, 2 * (p.resolution - 1) + 1);
    const auto est = estimate_rg_q(F, mq);
    verdict.rg_crosscheck = est.tau_hat.as_double();
    verdict.crosscheck_pass = est.tau_hat.as_double() >= 0.9 * p.tau;
  }
  return verdict;
}

PolyhedralNormalCone normal_cone_polyhedral_graph(const PolyhedralGraph& G,
                                                  const Vector& x,
                                                  const Vector& z) {
  if (x.size() != G.A.cols() || z.size() != G.B.cols()) {
    throw DimensionError("normal cone: point dimensions differ from graph");
  }
  const Vector slack = G.A * x + G.B * z - G.c;
  const double pnorm = std::sqrt(x.squaredNorm() + z.squaredNorm());
  PolyhedralNormalCone cone;
  for (int i = 0; i < slack.size(); ++i) {
    const double rownorm =
        std::sqrt(G.A.row(i).squaredNorm() + G.B.row(i).squaredNorm());
    const double tol = kMembershipTol * (1.0 + std::abs(G.c(i)) + rownorm * pnorm);
    if (slack(i) > tol) {
      throw PreconditionError("normal cone: point is not on the graph (row " +
                              std::to_string(i) + ")");
    }
    if (slack(i) >= -tol) {
      cone.generators.emplace_back(G.A.row(i).transpose(),
                                   G.B.row(i).transpose());
    }
  }
  return cone;
}

CoderivativeDistance coderivative_distance(const PolyhedralGraph& G,
                                           const Vector& x, const Vector& z,
                                           const Vector& ystar) {
  if (ystar.size() != G.B.cols()) {
    throw DimensionError("coderivative_distance: ystar dimension");
  }
  const auto cone = normal_cone_polyhedral_graph(G, x, z);
  const int k = static_cast<int>(cone.generators.size());
  const int n = static_cast<int>(G.A.cols());
  const int m = static_cast<int>(G.B.cols());
  if (k > kMaxGenerators) {
    throw SizeError("coderivative_distance: " + std::to_string(k) +
                    " active generators exceed the cap of " +
                    std::to_string(kMaxGenerators));
  }
  const double ytol = kMembershipTol * (1.0 + ystar.norm());
  if (ystar.norm() <= ytol) {
    return {ExtReal(0.0), false, Vector::Zero(n)};
  }

  // The optimum of min |U l| s.t. V l = -ystar, l >= 0 is attained on a
  // support with independent columns of [U; V], where it also solves the
  // equality-constrained problem without sign constraints.
  CoderivativeDistance best{ExtReal::infinity(), true, Vector::Zero(n)};
  const unsigned limit = 1u << k;
  for (unsigned mask = 1; mask < limit; ++mask) {
    const int s = std::popcount(mask);
    if (s > n + m) continue;
    Matrix U(n, s), V(m, s);
    int c = 0;
    for (int i = 0; i < k; ++i) {
      if (mask & (1u << i)) {
        U.col(c) = cone.generators[i].first;
        V.col(c) = cone.generators[i].second;
        ++c;
      }
    }
    Matrix W(n + m, s);
    W << U, V;
    Eigen::CompleteOrthogonalDecomposition<Matrix> wcod(W);
    if (wcod.rank() < s) continue;

    Matrix K = Matrix::Zero(s + m, s + m);
    K.topLeftCorner(s, s) = U.transpose() * U;
    K.topRightCorner(s, m) = V.transpose();
    K.bottomLeftCorner(m, s) = V;
    Vector rhs = Vector::Zero(s + m);
    rhs.tail(m) = -ystar;
    const Vector sol = K.completeOrthogonalDecomposition().solve(rhs);
    Vector lambda = sol.head(s);
    if ((V * lambda + ystar).norm() > ytol) continue;
    if (lambda.minCoeff() < -1e-10 * (1.0 + lambda.cwiseAbs().maxCoeff())) {
      continue;
    }
    lambda = lambda.cwiseMax(0.0);
    if ((V * lambda + ystar).norm() > ytol) continue;
    const Vector xs = U * lambda;
    const ExtReal d(xs.norm());
    if (best.infeasible || d < best.distance) best = {d, false, xs};
  }
  return best;
}

SetValuedMap linear_graph(const Matrix& A) {
  const auto m = A.rows();
  Matrix Ax(2 * m, A.cols());
  Ax << A, -A;
  Matrix By(2 * m, m);
  By << -Matrix::Identity(m, m), Matrix::Identity(m, m);
  return SetValuedMap::polyhedral(std::move(Ax), std::move(By),
                                  Vector::Zero(2 * m));
}

void CoderivativeConditionQuery::validate() const {
  check_order(q);
  if (!(tau > 0) || !(delta > 0) || !(mu > 0)) {
    throw PreconditionError("coderivative query: tau, delta, mu must be positive");
  }
  if (!(eta > 0 && eta < 1)) {
    throw PreconditionError("coderivative query: eta must lie in (0,1)");
  }
  if (!(alpha > 0 && alpha < 1)) {
    throw PreconditionError("coderivative query: alpha must lie in (0,1)");
  }
  if (resolution < 3 || zstar_count < 1) {
    throw PreconditionError("coderivative query: sample counts too small");
  }
}

CoderivativeVerdict check_coderivative_sufficiency(
    const SetValuedMap& G, const Vector& xbar, const Vector& ybar,
    const CoderivativeConditionQuery& query) {
  query.validate();
  const auto* poly = std::get_if<PolyhedralGraph>(&G.rep());
  if (!poly) {
    throw PreconditionError(
        "coderivative check: mapping must be a polyhedral graph");
  }
  if (image_distance(G, xbar, ybar).as_double() > kMembershipTol) {
    throw PreconditionError("coderivative check: base point is not on the graph");
  }
  const int m = G.range_dim();
  const double outer = query.delta + query.mu;
  const double reach = std::pow(query.tau * query.mu, 1.0 / query.q);
  const std::uint64_t offset = stable_hash(query.id) ^ query.seed;
  const auto zsphere = sphere_samples(m, query.zstar_count, offset);
  auto shifts = sphere_samples(m, query.zstar_count, offset + 7919);
  if (shifts.size() > 4) shifts.resize(4);

  CoderivativeVerdict verdict;
  const EvalRegion search{xbar, ybar, outer, query.delta, query.resolution};
  const auto xs = ball_grid(xbar, outer, query.resolution);
  const auto ys = ball_grid(ybar, query.delta, query.resolution);
  for (const auto& y : ys) {
    const PreimageLocator locator(G, y, search);
    for (const auto& x : xs) {
      const PreimageResult pre = locator.query(x);
      if (pre.distance.is_finite() && pre.distance.value() <= kExclusionBand) {
        continue;
      }
      const auto proj = image_projection(G, x, y);
      if (!proj.nearest) continue;
      const Vector z = *proj.nearest;
      const double r = (z - y).norm();
      if (r == 0.0 || !(r < reach)) continue;

      std::vector<Vector> zstars{(z - y) / r};
      for (const auto& s : zsphere) {
        if (s.dot(z - y) > query.alpha * r) zstars.push_back(s);
      }
      if (zstars.size() > 7) zstars.resize(7);
      const double factor = query.q * std::pow(r, query.q - 1.0);
      const double bound = query.eta / factor;

      for (const auto& zs : zstars) {
        std::vector<Vector> ystars{zs};
        for (double frac : {0.5, 0.99}) {
          for (const auto& s : shifts) ystars.push_back(zs + frac * bound * s);
        }
        for (const auto& ys_ : ystars) {
          const auto cd = coderivative_distance(*poly, x, z, ys_);
          const double value = factor * cd.distance.as_double();
          ++verdict.samples;
          if (!verdict.min_value || value < *verdict.min_value) {
            verdict.min_value = value;
            if (value < query.tau) {
              verdict.violating_witness =
                  CoderivativeTuple{x, y, z, zs, ys_, value};
            }
          }
        }
      }
    }
  }
  verdict.holds_on_samples = !verdict.violating_witness.has_value();

  if (verdict.holds_on_samples) {
    ModulusQuery mq;
    mq.q = query.q;
    mq.xbar = xbar;
    mq.ybar = ybar;
    mq.delta = query.delta;
    mq.mu = query.mu;
    mq.resolution = 11;
    const auto est = estimate_rg_q(G, mq);
    verdict.rg_crosscheck = est.tau_hat.as_double();
    verdict.crosscheck_pass = est.tau_hat.as_double() >= 0.9 * query.tau;
  }
  return verdict;
}

std::vector<SlopeEntry> numeric_slope(const ScalarFunction& g, const Vector& x,
                                      const std::vector<double>& radii,
                                      int resolution) {
  check_radii(radii);
  if (resolution < 3) throw PreconditionError("numeric_slope: resolution < 3");
  const double gx = g(x);
  if (std::isnan(gx)) throw PreconditionError("numeric_slope: g(x) is NaN");
  std::vector<SlopeEntry> out;
  for (double r : radii) {
    if (gx == kInf) {
      out.push_back({r, kInf});
      continue;
    }
    SlopeEntry entry{r, std::nullopt};
    for (const auto& u : box_grid(x, r, resolution)) {
      const double d = (u - x).norm();
      if (d == 0.0 || d > r * (1.0 + 1e-12)) continue;
      const double gu = g(u);
      const double quotient = std::max(gx - gu, 0.0) / d;
      entry.estimate = std::max(entry.estimate.value_or(0.0), quotient);
    }
    out.push_back(entry);
  }
  return out;
}

ChainRuleReport slope_chain_rule_check(const ScalarFunction& g,
                                       const Vector& x, double q,
                                       const std::vector<double>& radii,
                                       int resolution) {
  if (!(q > 0.0)) throw PreconditionError("chain rule: q must be positive");
  const double gx = g(x);
  if (!(gx > 0.0)) {
    throw PreconditionError("chain rule: g(x) must be positive");
  }
  ScalarFunction gq = [&g, q](const Vector& u) {
    const double v = g(u);
    return v <= 0.0 ? 0.0 : std::pow(v, q);
  };
  const auto lhs = numeric_slope(gq, x, radii, resolution);
  const auto rhs = numeric_slope(g, x, radii, resolution);
  ChainRuleReport report;
  report.slope_of_power = lhs.back().estimate.value_or(0.0);
  report.predicted = q * std::pow(gx, q - 1.0) * rhs.back().estimate.value_or(0.0);
  report.residual = std::abs(report.slope_of_power - report.predicted);
  const double scale =
      std::max(std::abs(report.predicted), std::abs(report.slope_of_power));
  report.pass = report.residual <= 1e-12 || report.residual <= 0.05 * scale;
  return report;
}

void EkelandQuery::validate() const {
  const auto N = static_cast<Eigen::Index>(values.size());
  if (N == 0) throw PreconditionError("ekeland: empty space");
  if (dist.rows() != N || dist.cols() != N) {
    throw DimensionError("ekeland: distance matrix shape differs from values");
  }
  if (x0 < 0 || x0 >= N) throw PreconditionError("ekeland: x0 out of range");
  if (!(epsilon > 0) || !(lambda > 0)) {
    throw PreconditionError("ekeland: epsilon and lambda must be positive");
  }
  const double scale = 1.0 + dist.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * scale;
  for (Eigen::Index i = 0; i < N; ++i) {
    if (dist(i, i) != 0.0) throw PreconditionError("ekeland: nonzero diagonal");
    for (Eigen::Index j = 0; j < N; ++j) {
      if (!(dist(i, j) >= 0.0) || std::abs(dist(i, j) - dist(j, i)) > tol) {
        throw PreconditionError("ekeland: distance not symmetric nonnegative");
      }
      for (Eigen::Index l = 0; l < N; ++l) {
        if (dist(i, l) > dist(i, j) + dist(j, l) + tol) {
          throw PreconditionError("ekeland: triangle inequality fails");
        }
      }
    }
  }
  double vmin = kInf;
  for (double v : values) {
    if (std::isnan(v) || v == -kInf) {
      throw PreconditionError("ekeland: values must be reals or +inf");
    }
    vmin = std::min(vmin, v);
  }
  if (!std::isfinite(values[x0]) || !(values[x0] < vmin + epsilon)) {
    throw PreconditionError("ekeland: values[x0] must be below min + epsilon");
  }
}

EkelandCertificate ekeland_certificate(const EkelandQuery& query, int index) {
  const double c = query.epsilon / query.lambda;
  EkelandCertificate cert;
  cert.index = index;
  cert.distance_to_x0 = query.dist(index, query.x0);
  cert.value = query.values[index];
  double least = kInf;
  for (size_t u = 0; u < query.values.size(); ++u) {
    least = std::min(least, query.values[u] + c * query.dist(u, index));
  }
  cert.min_slack = least - cert.value;
  cert.holds_i = cert.distance_to_x0 < query.lambda;
  cert.holds_ii = cert.value <= query.values[query.x0];
  cert.holds_iii = least >= cert.value;
  return cert;
}

EkelandCertificate ekeland_point(const EkelandQuery& query) {
  query.validate();
  const double c = query.epsilon / query.lambda;
  int k = query.x0;
  int iterations = 0;
  while (true) {
    int best = k;
    double best_val = query.values[k];
    for (size_t u = 0; u < query.values.size(); ++u) {
      const double val = query.values[u] + c * query.dist(u, k);
      if (val < best_val) {
        best_val = val;
        best = static_cast<int>(u);
      }
    }
    if (best == k) break;
    k = best;
    ++iterations;
  }
  EkelandCertificate cert = ekeland_certificate(query, k);
  cert.iterations = iterations;
  return cert;
}

}  // namespace regulab
