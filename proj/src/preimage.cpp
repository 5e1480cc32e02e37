#include <cmath>

#include "regulab/errors.hpp"
#include "regulab/grid.hpp"
#include "regulab/mappings.hpp"

namespace regulab {

namespace {

// F written as base(x) + s(x), with s collecting every single-valued part.
struct Structured {
  enum class Base { Point, Box, Polyhedral, Sampled };
  Base base = Base::Point;
  Function s;
  const NormalConeOfBox* box = nullptr;
  const PolyhedralGraph* poly = nullptr;
  const SampledGraph* sampled = nullptr;
};

Structured decompose(const SetValuedMap& F) {
  const int n = F.domain_dim();
  const int m = F.range_dim();
  Structured out;
  if (const auto* S = std::get_if<SumWithFunction>(&F.rep())) {
    out = decompose(*S->base);
    out.s = out.s + S->f;
    return out;
  }
  out.s = Function::zero(n, m);
  if (const auto* L = std::get_if<LinearMap>(&F.rep())) {
    out.s = Function::affine(L->A, Vector::Zero(m));
  } else if (const auto* Sm = std::get_if<SmoothMap>(&F.rep())) {
    out.s = Sm->f;
  } else if (const auto* B = std::get_if<NormalConeOfBox>(&F.rep())) {
    out.base = Structured::Base::Box;
    out.box = B;
  } else if (const auto* P = std::get_if<PolyhedralGraph>(&F.rep())) {
    out.base = Structured::Base::Polyhedral;
    out.poly = P;
  } else if (const auto* G = std::get_if<SampledGraph>(&F.rep())) {
    out.base = Structured::Base::Sampled;
    out.sampled = G;
  }
  return out;
}

double tol_for(double v) { return kMembershipTol * std::max(1.0, std::abs(v)); }

// Minimizes |g(w)| by damped Gauss-Newton. Keeps iterating while the
// residual strictly decreases, so slow linear convergence at singular roots
// still reaches machine-level residuals.
std::pair<Vector, double> gauss_newton(
    const std::function<Vector(const Vector&)>& g,
    const std::function<Matrix(const Vector&)>& jac, Vector w,
    int max_iter = 100) {
  Vector r = g(w);
  double rn = r.norm();
  for (int it = 0; it < max_iter && rn > 0.0; ++it) {
    const Matrix J = jac(w);
    if (!J.allFinite()) break;
    const Vector step = J.completeOrthogonalDecomposition().solve(-r);
    if (!step.allFinite() || step.norm() == 0.0) break;
    double t = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      const Vector trial = w + t * step;
      const Vector rt = g(trial);
      if (rt.allFinite() && rt.norm() < rn) {
        w = trial;
        r = rt;
        rn = rt.norm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return {w, rn};
}

std::vector<Vector> start_points(const EvalRegion& region, int dim,
                                 const Vector& center) {
  int per_axis = 3;
  while (std::pow(per_axis + 1, dim) <= 64.0) ++per_axis;
  return box_grid(center, 2.0 * region.delta_x, per_axis);
}

void add_root(std::vector<Vector>& roots, const Vector& u) {
  for (const auto& r : roots) {
    if ((r - u).norm() <= 1e-8) return;
  }
  roots.push_back(u);
}

}  // namespace

struct PreimageLocator::Impl {
  enum class Mode { Affine, Polyhedral, Box, Roots };
  Mode mode = Mode::Roots;
  bool empty = false;
  bool search_limited = false;

  // Affine: {u : M u = rhs}.
  Matrix pinv;
  Matrix M;
  Vector rhs;

  // Polyhedral: union of polyhedra (one per activity pattern when needed).
  std::vector<Polyhedron> pieces;

  // Box: per-coordinate admissible ranges [lo, hi].
  Vector lo, hi;

  std::vector<Vector> roots;
};

namespace {

using Impl = PreimageLocator::Impl;

void setup_affine(Impl& impl, const AffineForm& a, const Vector& y) {
  impl.mode = Impl::Mode::Affine;
  impl.M = a.M;
  impl.rhs = y - a.b;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a.M);
  impl.pinv = cod.pseudoInverse();
  const Vector u0 = impl.pinv * impl.rhs;
  const double scale = 1.0 + impl.rhs.norm();
  impl.empty = (a.M * u0 - impl.rhs).norm() > kMembershipTol * scale;
}

void setup_box_cone(Impl& impl, const NormalConeOfBox& N, const Vector& y) {
  impl.mode = Impl::Mode::Box;
  const auto n = N.lower.size();
  impl.lo.resize(n);
  impl.hi.resize(n);
  for (int i = 0; i < n; ++i) {
    if (std::abs(y(i)) <= kMembershipTol) {
      impl.lo(i) = N.lower(i);
      impl.hi(i) = N.upper(i);
    } else {
      const double bound = y(i) < 0 ? N.lower(i) : N.upper(i);
      if (!std::isfinite(bound)) {
        impl.empty = true;
        return;
      }
      impl.lo(i) = impl.hi(i) = bound;
    }
  }
}

void finish_pieces(Impl& impl) {
  impl.mode = Impl::Mode::Polyhedral;
  std::vector<Polyhedron> nonempty;
  for (auto& P : impl.pieces) {
    const Vector probe = Vector::Zero(P.dim());
    if (try_project_polyhedron(P, probe)) nonempty.push_back(std::move(P));
  }
  impl.pieces = std::move(nonempty);
  impl.empty = impl.pieces.empty();
}

// u in F^{-1}(y) for F = N_C + (M u + b): a union over activity patterns of
// polyhedra, each an exact description of one piece of the solution set.
void setup_box_affine(Impl& impl, const NormalConeOfBox& N, const AffineForm& a,
                      const Vector& y) {
  const int n = static_cast<int>(N.lower.size());
  if (n > 3) {
    throw SizeError("preimage_distance: affine box instances are exact only "
                    "up to dimension 3");
  }
  int patterns = 1;
  for (int i = 0; i < n; ++i) patterns *= 3;
  for (int p = 0; p < patterns; ++p) {
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    auto add = [&](Eigen::RowVectorXd r, double b) {
      rows.push_back(std::move(r));
      rhs.push_back(b);
    };
    bool valid = true;
    int code = p;
    for (int i = 0; i < n && valid; ++i, code /= 3) {
      const int state = code % 3;  // 0 lower, 1 free, 2 upper
      Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
      e(i) = 1.0;
      // w_i = y_i - (M u + b)_i is the normal-cone component.
      const Eigen::RowVectorXd Mi = a.M.row(i);
      const double wi0 = y(i) - a.b(i);
      if (state == 0 || state == 2) {
        const double bound = state == 0 ? N.lower(i) : N.upper(i);
        if (!std::isfinite(bound)) {
          valid = false;
          break;
        }
        add(e, bound);
        add(-e, -bound);
        // lower: w_i <= 0  <=>  -M_i u <= -wi0; upper: w_i >= 0.
        if (state == 0) {
          add(-Mi, -wi0);
        } else {
          add(Mi, wi0);
        }
      } else {
        add(Mi, wi0);
        add(-Mi, -wi0);
        if (std::isfinite(N.lower(i))) add(-e, -N.lower(i));
        if (std::isfinite(N.upper(i))) add(e, N.upper(i));
      }
    }
    if (!valid) continue;
    Matrix A(static_cast<int>(rows.size()), n);
    Vector b(static_cast<int>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      A.row(r) = rows[r];
      b(r) = rhs[r];
    }
    impl.pieces.emplace_back(std::move(A), std::move(b));
  }
  finish_pieces(impl);
}

void setup_smooth_roots(Impl& impl, const Function& s, const Vector& y,
                        const EvalRegion& region) {
  impl.mode = Impl::Mode::Roots;
  const double accept = 1e-10 * std::max(1.0, y.norm());
  auto g = [&](const Vector& u) -> Vector { return s(u) - y; };
  auto jac = [&](const Vector& u) -> Matrix { return s.jacobian(u); };
  auto starts = start_points(region, s.input_dim(), region.xbar);
  for (const auto& u0 : starts) {
    auto [u, rn] = gauss_newton(g, jac, u0);
    if (rn <= accept) add_root(impl.roots, u);
  }
  impl.search_limited = impl.roots.empty();
}

// y - s(u) in N_C(u) with nonlinear s: Newton on the free coordinates of each
// activity pattern, then primal bounds and multiplier signs are checked.
void setup_box_roots(Impl& impl, const NormalConeOfBox& N, const Function& s,
                     const Vector& y, const EvalRegion& region) {
  impl.mode = Impl::Mode::Roots;
  const int n = static_cast<int>(N.lower.size());
  if (n > 8) throw SizeError("preimage_distance: box dimension above 8");
  const double accept = 1e-10 * std::max(1.0, y.norm());
  int patterns = 1;
  for (int i = 0; i < n; ++i) patterns *= 3;
  const auto starts = start_points(region, n, region.xbar);

  for (int p = 0; p < patterns; ++p) {
    std::vector<int> state(n);
    std::vector<int> free_idx;
    Vector fixed = Vector::Zero(n);
    bool valid = true;
    int code = p;
    for (int i = 0; i < n; ++i, code /= 3) {
      state[i] = code % 3;
      if (state[i] == 1) {
        free_idx.push_back(i);
        continue;
      }
      const double bound = state[i] == 0 ? N.lower(i) : N.upper(i);
      if (!std::isfinite(bound)) valid = false;
      fixed(i) = bound;
    }
    if (!valid) continue;

    auto embed = [&](const Vector& w) {
      Vector u = fixed;
      for (size_t k = 0; k < free_idx.size(); ++k) u(free_idx[k]) = w(k);
      return u;
    };
    auto admissible = [&](const Vector& u) {
      const Vector w = y - s(u);
      for (int i = 0; i < n; ++i) {
        if (u(i) < N.lower(i) - tol_for(N.lower(i)) ||
            u(i) > N.upper(i) + tol_for(N.upper(i))) {
          return false;
        }
        if (state[i] == 0 && w(i) > kMembershipTol) return false;
        if (state[i] == 2 && w(i) < -kMembershipTol) return false;
      }
      return true;
    };

    if (free_idx.empty()) {
      const Vector u = fixed;
      if (admissible(u)) add_root(impl.roots, u);
      continue;
    }
    const int k = static_cast<int>(free_idx.size());
    auto g = [&](const Vector& w) -> Vector {
      const Vector r = s(embed(w)) - y;
      Vector out(k);
      for (int j = 0; j < k; ++j) out(j) = r(free_idx[j]);
      return out;
    };
    auto jac = [&](const Vector& w) -> Matrix {
      const Matrix J = s.jacobian(embed(w));
      Matrix out(k, k);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) out(a, b) = J(free_idx[a], free_idx[b]);
      }
      return out;
    };
    for (const auto& u0 : starts) {
      Vector w0(k);
      for (int j = 0; j < k; ++j) {
        const int i = free_idx[j];
        w0(j) = std::clamp(u0(i), N.lower(i), N.upper(i));
      }
      auto [w, rn] = gauss_newton(g, jac, w0);
      if (rn > accept) continue;
      const Vector u = embed(w);
      if (admissible(u)) add_root(impl.roots, u);
    }
  }
  impl.search_limited = impl.roots.empty();
}

void setup_sampled(Impl& impl, const SampledGraph& G, const Function& s,
                   const Vector& y) {
  impl.mode = Impl::Mode::Roots;
  for (const auto& [px, py] : G.pairs) {
    if ((py + s(px) - y).norm() <= kMembershipTol) add_root(impl.roots, px);
  }
  impl.empty = impl.roots.empty();
}

void setup_grid_fallback(Impl& impl, const SetValuedMap& F, const Vector& y,
                         const EvalRegion& region) {
  impl.mode = Impl::Mode::Roots;
  for (const auto& u : box_grid(region.xbar, 2.0 * region.delta_x,
                                region.resolution)) {
    if (image_distance(F, u, y).as_double() <= 1e-8) add_root(impl.roots, u);
  }
  impl.search_limited = impl.roots.empty();
}

}  // namespace

PreimageLocator::PreimageLocator(const SetValuedMap& F, const Vector& y,
                                 const EvalRegion& region)
    : impl_(std::make_unique<Impl>()) {
  if (y.size() != F.range_dim()) {
    throw DimensionError("preimage_distance: y has dimension " +
                         std::to_string(y.size()) + ", map range " +
                         std::to_string(F.range_dim()));
  }
  Impl& impl = *impl_;
  const Structured st = decompose(F);
  const auto& affine = st.s.affine_form();

  switch (st.base) {
    case Structured::Base::Point:
      if (affine) {
        setup_affine(impl, *affine, y);
      } else {
        setup_smooth_roots(impl, st.s, y, region);
      }
      break;
    case Structured::Base::Box:
      if (affine && affine->M.isZero(0.0)) {
        setup_box_cone(impl, *st.box, y - affine->b);
      } else if (affine) {
        setup_box_affine(impl, *st.box, *affine, y);
      } else {
        setup_box_roots(impl, *st.box, st.s, y, region);
      }
      break;
    case Structured::Base::Polyhedral:
      if (affine) {
        // (u, y - M u - b) in gph: (A - B M) u <= c - B (y - b).
        const auto& P = *st.poly;
        impl.pieces.emplace_back(P.A - P.B * affine->M,
                                 P.c - P.B * (y - affine->b));
        finish_pieces(impl);
      } else {
        setup_grid_fallback(impl, F, y, region);
      }
      break;
    case Structured::Base::Sampled:
      setup_sampled(impl, *st.sampled, st.s, y);
      break;
  }
}

PreimageLocator::~PreimageLocator() = default;
PreimageLocator::PreimageLocator(PreimageLocator&&) noexcept = default;
PreimageLocator& PreimageLocator::operator=(PreimageLocator&&) noexcept =
    default;

PreimageResult PreimageLocator::query(const Vector& x) const {
  const Impl& impl = *impl_;
  if (impl.empty) return {ExtReal::infinity(), false, std::nullopt};
  switch (impl.mode) {
    case Impl::Mode::Affine: {
      if (x.size() != impl.M.cols()) throw DimensionError("preimage_distance");
      const Vector shift = impl.pinv * (impl.M * x - impl.rhs);
      return {ExtReal(shift.norm()), false, Vector(x - shift)};
    }
    case Impl::Mode::Box: {
      if (x.size() != impl.lo.size()) throw DimensionError("preimage_distance");
      const Vector p = x.cwiseMax(impl.lo).cwiseMin(impl.hi);
      return {ExtReal((p - x).norm()), false, p};
    }
    case Impl::Mode::Polyhedral: {
      PreimageResult best{ExtReal::infinity(), false, std::nullopt};
      for (const auto& P : impl.pieces) {
        auto p = try_project_polyhedron(P, x);
        if (!p) continue;
        const ExtReal d((*p - x).norm());
        if (!best.nearest || d < best.distance) best = {d, false, *p};
      }
      return best;
    }
    case Impl::Mode::Roots: {
      PreimageResult best{ExtReal::infinity(), impl.search_limited,
                          std::nullopt};
      for (const auto& r : impl.roots) {
        if (r.size() != x.size()) throw DimensionError("preimage_distance");
        const ExtReal d((r - x).norm());
        if (!best.nearest || d < best.distance) best = {d, false, r};
      }
      return best;
    }
  }
  return {ExtReal::infinity(), true, std::nullopt};
}

PreimageResult preimage_distance(const SetValuedMap& F, const Vector& x,
                                 const Vector& y, const EvalRegion& region) {
  if (x.size() != F.domain_dim()) {
    throw DimensionError("preimage_distance: x has dimension " +
                         std::to_string(x.size()) + ", map domain " +
                         std::to_string(F.domain_dim()));
  }
  return PreimageLocator(F, y, region).query(x);
}

}  // namespace regulab
