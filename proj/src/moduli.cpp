#include "regulab/moduli.hpp"

#include <cmath>
#include <limits>

#include "regulab/errors.hpp"
#include "regulab/grid.hpp"

namespace regulab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double qpow(double d, double q) { return q == 1.0 ? d : std::pow(d, q); }

struct LevelBest {
  double value = 0.0;
  long admissible = 0;
  long limited = 0;
  std::optional<std::pair<Vector, Vector>> witness;
};

ExtReal finish(ModulusEstimate& est, const LevelBest& last) {
  est.admissible_pairs = last.admissible;
  est.search_limited_pairs = last.limited;
  est.witness = last.witness;
  if (last.admissible == 0) {
    est.capped = true;
    est.tau_hat = ExtReal(kModulusCap);
  } else {
    est.capped = false;
    est.tau_hat = from_double(last.value);
  }
  return est.tau_hat;
}

void check_base_point(const SetValuedMap& F, const ModulusQuery& query) {
  if (query.xbar.size() != F.domain_dim() ||
      query.ybar.size() != F.range_dim()) {
    throw DimensionError("modulus query: base point dimensions differ from map");
  }
  const ExtReal d = image_distance(F, query.xbar, query.ybar);
  if (d.as_double() > kMembershipTol) {
    throw PreconditionError("base point is not on the graph (residual " +
                            d.to_string() + ")");
  }
}

// Ratio for one (x, y) pair under the admissibility rules; nullopt when the
// pair is excluded. `limited` is bumped for search-limited exclusions.
std::optional<double> rg_ratio(const ExtReal& d_img, const PreimageResult& pre,
                               const ModulusQuery& query, long& limited) {
  if (pre.distance.is_infinite()) {
    if (pre.search_limited) {
      ++limited;
      return std::nullopt;
    }
    if (d_img.is_infinite()) return std::nullopt;
  } else if (pre.distance.value() <= kExclusionBand) {
    return std::nullopt;
  }
  const double lhs = qpow(d_img.as_double(), query.q);
  if (query.residual_cap && !(lhs < *query.residual_cap)) return std::nullopt;
  if (pre.distance.is_infinite()) return 0.0;
  return lhs / pre.distance.value();
}

LevelBest rg_level_affine(const AffineForm& a, const std::vector<Vector>& xs,
                          const std::vector<Vector>& ys,
                          const ModulusQuery& query) {
  LevelBest best;
  best.value = kInf;
  const auto N = static_cast<Eigen::Index>(xs.size());
  if (N == 0) return best;
  const Matrix pinv = a.M.completeOrthogonalDecomposition().pseudoInverse();
  Matrix X(a.M.cols(), N);
  for (Eigen::Index i = 0; i < N; ++i) X.col(i) = xs[i];
  const Matrix MX = a.M * X;
  const Matrix PX = pinv * MX;

  long best_i = -1, best_j = -1;
  for (size_t j = 0; j < ys.size(); ++j) {
    const Vector c = a.b - ys[j];
    const Vector Pc = pinv * c;
    const bool consistent =
        (a.M * Pc - c).norm() <= kMembershipTol * (1.0 + c.norm());
    for (Eigen::Index i = 0; i < N; ++i) {
      const double d_img = (MX.col(i) + c).norm();
      double ratio;
      const double lhs = qpow(d_img, query.q);
      if (consistent) {
        const double d_pre = (PX.col(i) + Pc).norm();
        if (d_pre <= kExclusionBand) continue;
        if (query.residual_cap && !(lhs < *query.residual_cap)) continue;
        ratio = lhs / d_pre;
      } else {
        if (query.residual_cap && !(lhs < *query.residual_cap)) continue;
        ratio = 0.0;
      }
      ++best.admissible;
      if (ratio < best.value || best_i < 0) {
        best.value = ratio;
        best_i = static_cast<long>(i);
        best_j = static_cast<long>(j);
      }
    }
  }
  if (best_i >= 0) best.witness = std::make_pair(xs[best_i], ys[best_j]);
  return best;
}

LevelBest rg_level_generic(const SetValuedMap& F,
                           const std::vector<Vector>& xs,
                           const std::vector<Vector>& ys,
                           const ModulusQuery& query) {
  LevelBest best;
  best.value = kInf;
  EvalRegion region{query.xbar, query.ybar, query.delta, query.delta,
                    std::max(3, query.resolution)};
  bool have = false;
  for (const auto& y : ys) {
    const PreimageLocator locator(F, y, region);
    for (const auto& x : xs) {
      const PreimageResult pre = locator.query(x);
      if (pre.distance.is_finite() && pre.distance.value() <= kExclusionBand) {
        continue;
      }
      const ExtReal d_img = image_distance(F, x, y);
      auto ratio = rg_ratio(d_img, pre, query, best.limited);
      if (!ratio) continue;
      ++best.admissible;
      if (!have || *ratio < best.value) {
        have = true;
        best.value = *ratio;
        best.witness = std::make_pair(x, y);
      }
    }
  }
  return best;
}

}  // namespace

void ModulusQuery::validate(bool require_unit_order) const {
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw PreconditionError("modulus query: q must be positive");
  }
  if (require_unit_order && q > 1.0) {
    throw PreconditionError("modulus query: regularity order must lie in (0,1]");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw PreconditionError("modulus query: delta must be positive");
  }
  if (mu && (!(*mu > 0.0) || !std::isfinite(*mu))) {
    throw PreconditionError("modulus query: mu must be positive");
  }
  if (residual_cap && !(*residual_cap > 0.0)) {
    throw PreconditionError("modulus query: residual cap must be positive");
  }
  if (resolution < 5) throw PreconditionError("modulus query: resolution < 5");
  if (refinement_levels < 1) {
    throw PreconditionError("modulus query: refinement_levels < 1");
  }
  check_finite(xbar, "modulus query xbar");
  check_finite(ybar, "modulus query ybar");
}

ExtReal effective_value(const ModulusEstimate& e) {
  return e.capped ? ExtReal::infinity() : e.tau_hat;
}

ModulusEstimate estimate_rg_q(const SetValuedMap& F, const ModulusQuery& query) {
  query.validate(true);
  check_base_point(F, query);
  const auto affine = affine_single_valued(F);

  ModulusEstimate est;
  LevelBest last;
  last.value = kInf;
  for (int level = 0; level < query.refinement_levels; ++level) {
    const int r = refined_resolution(query.resolution, level);
    const auto xs = ball_grid(query.xbar, query.delta, r);
    const auto ys = ball_grid(query.ybar, query.delta, r);
    last = affine ? rg_level_affine(*affine, xs, ys, query)
                  : rg_level_generic(F, xs, ys, query);
    ModulusEstimate level_est;
    est.trace.push_back({r, finish(level_est, last)});
  }
  finish(est, last);
  return est;
}

ModulusEstimate estimate_lip_q(const SetValuedMap& Phi,
                               const ModulusQuery& query) {
  query.validate(false);
  check_base_point(Phi, query);
  const auto* sampled = std::get_if<SampledGraph>(&Phi.rep());

  ModulusEstimate est;
  for (int level = 0; level < query.refinement_levels; ++level) {
    const int r = refined_resolution(query.resolution, level);
    const EvalRegion region{query.xbar, query.ybar, query.delta, query.delta, r};

    // Domain points paired with their image sets; for sampled graphs the
    // images come straight from the stored pairs.
    std::vector<Vector> xs;
    std::vector<std::vector<Vector>> images;
    if (sampled) {
      for (const auto& [px, py] : sampled->pairs) {
        size_t k = 0;
        for (; k < xs.size(); ++k) {
          if ((xs[k] - px).norm() <= kMembershipTol) break;
        }
        if (k == xs.size()) {
          if (!in_open_ball(px, query.xbar, query.delta)) continue;
          xs.push_back(px);
          images.emplace_back();
        }
        images[k].push_back(py);
      }
    } else {
      xs = ball_grid(query.xbar, query.delta, r);
    }

    std::vector<std::pair<Vector, Vector>> pairs;
    for (auto& pr : graph_sample(Phi, region)) {
      if (in_open_ball(pr.first, query.xbar, query.delta) &&
          in_open_ball(pr.second, query.ybar, query.delta)) {
        pairs.push_back(std::move(pr));
      }
    }

    double best = 0.0;
    long admissible = 0;
    std::optional<std::pair<Vector, Vector>> witness;
    for (size_t i = 0; i < xs.size(); ++i) {
      const Vector& x = xs[i];
      for (const auto& [xp, y] : pairs) {
        const double d = (x - xp).norm();
        if (d < kExclusionBand) continue;
        double d_img;
        if (sampled) {
          d_img = kInf;
          for (const auto& v : images[i]) d_img = std::min(d_img, (v - y).norm());
        } else {
          d_img = image_distance(Phi, x, y).as_double();
        }
        const double ratio = qpow(d_img, query.q) / d;
        ++admissible;
        if (!witness || ratio > best) {
          best = ratio;
          witness = std::make_pair(x, y);
        }
      }
    }
    est.admissible_pairs = admissible;
    est.witness = witness;
    est.tau_hat = from_double(best);
    est.capped = false;
    est.trace.push_back({r, est.tau_hat});
  }
  return est;
}

ModulusEstimate estimate_lip_q_function(const Function& f, const Vector& xbar,
                                        double q, double delta, int resolution,
                                        int refinement_levels) {
  if (!(q > 0.0)) throw PreconditionError("lip estimate: q must be positive");
  if (!(delta > 0.0)) throw PreconditionError("lip estimate: delta <= 0");
  if (resolution < 3 || refinement_levels < 1) {
    throw PreconditionError("lip estimate: resolution < 3 or no levels");
  }
  if (xbar.size() != f.input_dim()) {
    throw DimensionError("lip estimate: base point dimension");
  }
  ModulusEstimate est;
  for (int level = 0; level < refinement_levels; ++level) {
    const int r = refined_resolution(resolution, level);
    const auto xs = ball_grid(xbar, delta, r);
    std::vector<Vector> fx;
    fx.reserve(xs.size());
    for (const auto& x : xs) fx.push_back(f(x));
    double best = 0.0;
    long admissible = 0;
    std::optional<std::pair<Vector, Vector>> witness;
    for (size_t i = 0; i < xs.size(); ++i) {
      for (size_t j = i + 1; j < xs.size(); ++j) {
        const double d = (xs[i] - xs[j]).norm();
        if (d < kExclusionBand) continue;
        const double ratio = qpow((fx[i] - fx[j]).norm(), q) / d;
        ++admissible;
        if (!witness || ratio > best) {
          best = ratio;
          witness = std::make_pair(xs[i], xs[j]);
        }
      }
    }
    est.admissible_pairs = admissible;
    est.witness = witness;
    est.tau_hat = from_double(best);
    est.trace.push_back({r, est.tau_hat});
  }
  return est;
}

DualityReport check_inverse_duality(const SetValuedMap& F,
                                    const ModulusQuery& query) {
  DualityReport report;
  report.rg = estimate_rg_q(F, query);

  std::optional<SetValuedMap> Finv;
  try {
    Finv = inverse(F);
  } catch (const NotInvertibleError&) {
    const int r = refined_resolution(query.resolution,
                                     query.refinement_levels - 1);
    auto pairs = graph_sample(
        F, EvalRegion{query.xbar, query.ybar, query.delta, query.delta, r});
    for (auto& pr : pairs) std::swap(pr.first, pr.second);
    Finv = SetValuedMap::sampled(std::move(pairs));
  }

  ModulusQuery inv_query = query;
  inv_query.q = 1.0 / query.q;
  inv_query.xbar = query.ybar;
  inv_query.ybar = query.xbar;
  inv_query.residual_cap.reset();
  report.lip_inverse = estimate_lip_q(*Finv, inv_query);

  const ExtReal lip = report.lip_inverse.tau_hat;
  ExtReal predicted;
  if (lip.is_infinite()) {
    predicted = ExtReal(0.0);
  } else if (lip.value() == 0.0) {
    predicted = ExtReal::infinity();
  } else {
    predicted = ExtReal(std::pow(lip.value(), -query.q));
  }
  const ExtReal rg = effective_value(report.rg);
  report.residual = from_double(std::abs(extended_difference(rg, predicted)));
  const double scale = std::max(1.0, rg.as_double());
  report.pass = report.residual.is_finite()
                    ? report.residual.value() <= 0.05 * scale
                    : false;
  if (rg.is_infinite() && predicted.is_infinite()) report.pass = true;
  return report;
}

}  // namespace regulab
