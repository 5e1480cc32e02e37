#include "regulab/mappings.hpp"

#include <cmath>
#include <set>

#include "regulab/errors.hpp"
#include "regulab/grid.hpp"

namespace regulab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_matrix_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) {
    throw PreconditionError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

SetValuedMap SetValuedMap::linear(Matrix A) {
  if (A.rows() == 0 || A.cols() == 0) {
    throw DimensionError("linear map: empty matrix");
  }
  check_matrix_finite(A, "linear map");
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  return SetValuedMap(LinearMap{std::move(A)}, n, m);
}

SetValuedMap SetValuedMap::polyhedral(Matrix A, Matrix B, Vector c) {
  if (A.rows() != B.rows() || A.rows() != c.size()) {
    throw DimensionError("polyhedral graph: A, B and c need equal row counts");
  }
  if (A.cols() == 0 || B.cols() == 0) {
    throw DimensionError("polyhedral graph: zero-dimensional factor");
  }
  check_matrix_finite(A, "polyhedral graph A");
  check_matrix_finite(B, "polyhedral graph B");
  check_finite(c, "polyhedral graph c");
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(B.cols());
  return SetValuedMap(PolyhedralGraph{std::move(A), std::move(B), std::move(c)},
                      n, m);
}

SetValuedMap SetValuedMap::normal_cone_box(Vector lower, Vector upper) {
  check_same_dim(lower, upper, "normal cone of a box");
  if (lower.size() == 0) throw DimensionError("normal cone of a box: dim 0");
  for (int i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i))) {
      throw PreconditionError("normal cone of a box: NaN bound");
    }
    if (lower(i) > upper(i)) {
      throw PreconditionError("normal cone of a box: lower > upper at index " +
                              std::to_string(i));
    }
    if (lower(i) == std::numeric_limits<double>::infinity() ||
        upper(i) == -std::numeric_limits<double>::infinity()) {
      throw PreconditionError("normal cone of a box: empty coordinate range");
    }
  }
  const int n = static_cast<int>(lower.size());
  return SetValuedMap(NormalConeOfBox{std::move(lower), std::move(upper)}, n, n);
}

SetValuedMap SetValuedMap::smooth(Function f) {
  if (!f.valid()) throw PreconditionError("smooth map: empty oracle");
  const int n = f.input_dim();
  const int m = f.output_dim();
  return SetValuedMap(SmoothMap{std::move(f)}, n, m);
}

SetValuedMap SetValuedMap::sampled(
    std::vector<std::pair<Vector, Vector>> pairs) {
  if (pairs.empty()) throw PreconditionError("sampled graph: no pairs");
  const auto n = pairs.front().first.size();
  const auto m = pairs.front().second.size();
  if (n == 0 || m == 0) throw DimensionError("sampled graph: dim 0");
  for (const auto& [x, y] : pairs) {
    if (x.size() != n || y.size() != m) {
      throw DimensionError("sampled graph: inconsistent pair dimensions");
    }
    check_finite(x, "sampled graph");
    check_finite(y, "sampled graph");
  }
  return SetValuedMap(SampledGraph{std::move(pairs)}, static_cast<int>(n),
                      static_cast<int>(m));
}

SetValuedMap SetValuedMap::zero(int n, int m) {
  if (n <= 0 || m <= 0) throw DimensionError("zero map: dims must be positive");
  return SetValuedMap(ZeroMap{n, m}, n, m);
}

std::string SetValuedMap::kind() const {
  return std::visit(
      Overloaded{[](const LinearMap&) { return "linear"; },
                 [](const PolyhedralGraph&) { return "polyhedral_graph"; },
                 [](const NormalConeOfBox&) { return "normal_cone_box"; },
                 [](const SmoothMap&) { return "smooth"; },
                 [](const SampledGraph&) { return "sampled_graph"; },
                 [](const SumWithFunction&) { return "sum"; },
                 [](const ZeroMap&) { return "zero"; }},
      rep_);
}

SetValuedMap sum_with_function(const SetValuedMap& F, Function f) {
  if (!f.valid()) throw PreconditionError("sum_with_function: empty oracle");
  if (f.input_dim() != F.domain_dim() || f.output_dim() != F.range_dim()) {
    throw DimensionError("sum_with_function: function shape differs from map");
  }
  const int n = F.domain_dim();
  const int m = F.range_dim();
  return SetValuedMap(
      SumWithFunction{std::make_shared<const SetValuedMap>(F), std::move(f)}, n,
      m);
}

std::optional<AffineForm> affine_single_valued(const SetValuedMap& F) {
  return std::visit(
      Overloaded{
          [](const LinearMap& L) -> std::optional<AffineForm> {
            return AffineForm{L.A, Vector::Zero(L.A.rows())};
          },
          [](const ZeroMap& Z) -> std::optional<AffineForm> {
            return AffineForm{Matrix::Zero(Z.m, Z.n), Vector::Zero(Z.m)};
          },
          [](const SmoothMap& S) { return S.f.affine_form(); },
          [](const SumWithFunction& S) -> std::optional<AffineForm> {
            auto base = affine_single_valued(*S.base);
            const auto& f = S.f.affine_form();
            if (!base || !f) return std::nullopt;
            return AffineForm{base->M + f->M, base->b + f->b};
          },
          [](const auto&) -> std::optional<AffineForm> { return std::nullopt; }},
      F.rep());
}

SetValuedMap inverse(const SetValuedMap& F) {
  return std::visit(
      Overloaded{
          [](const LinearMap& L) {
            // gph F^{-1} = {(y, x) : A x - y = 0}, two inequality blocks.
            const auto m = L.A.rows();
            Matrix Ay(2 * m, m);
            Ay << -Matrix::Identity(m, m), Matrix::Identity(m, m);
            Matrix Bx(2 * m, L.A.cols());
            Bx << L.A, -L.A;
            return SetValuedMap::polyhedral(std::move(Ay), std::move(Bx),
                                            Vector::Zero(2 * m));
          },
          [](const PolyhedralGraph& P) {
            return SetValuedMap::polyhedral(P.B, P.A, P.c);
          },
          [](const SampledGraph& S) {
            std::vector<std::pair<Vector, Vector>> swapped;
            swapped.reserve(S.pairs.size());
            for (const auto& [x, y] : S.pairs) swapped.emplace_back(y, x);
            return SetValuedMap::sampled(std::move(swapped));
          },
          [&](const auto&) -> SetValuedMap {
            throw NotInvertibleError(
                "inverse: " + F.kind() +
                " is not invertible in closed form; use preimage_distance");
          }},
      F.rep());
}

void EvalRegion::validate() const {
  if (xbar.size() == 0 || ybar.size() == 0) {
    throw DimensionError("EvalRegion: empty base point");
  }
  check_finite(xbar, "EvalRegion xbar");
  check_finite(ybar, "EvalRegion ybar");
  if (!(delta_x > 0) || !(delta_y > 0) || !std::isfinite(delta_x) ||
      !std::isfinite(delta_y)) {
    throw PreconditionError("EvalRegion: radii must be positive and finite");
  }
  if (resolution < 3) throw PreconditionError("EvalRegion: resolution < 3");
}

namespace {

void check_dims(const SetValuedMap& F, const Vector& x, const Vector& y,
                const char* what) {
  if (x.size() != F.domain_dim() || y.size() != F.range_dim()) {
    throw DimensionError(std::string(what) + ": expected (" +
                         std::to_string(F.domain_dim()) + ", " +
                         std::to_string(F.range_dim()) + "), got (" +
                         std::to_string(x.size()) + ", " +
                         std::to_string(y.size()) + ")");
  }
}

ImageProjection point_image(const Vector& image, const Vector& y) {
  return {ExtReal((image - y).norm()), image};
}

ImageProjection box_cone_projection(const NormalConeOfBox& N, const Vector& x,
                                    const Vector& y) {
  Vector p(y.size());
  for (int i = 0; i < x.size(); ++i) {
    const double l = N.lower(i);
    const double u = N.upper(i);
    const double tl = kMembershipTol * std::max(1.0, std::abs(l));
    const double tu = kMembershipTol * std::max(1.0, std::abs(u));
    if ((std::isfinite(l) && x(i) < l - tl) ||
        (std::isfinite(u) && x(i) > u + tu)) {
      return {ExtReal::infinity(), std::nullopt};
    }
    const bool at_lower = std::isfinite(l) && std::abs(x(i) - l) <= tl;
    const bool at_upper = std::isfinite(u) && std::abs(x(i) - u) <= tu;
    if (at_lower && at_upper) {
      p(i) = y(i);
    } else if (at_lower) {
      p(i) = std::min(y(i), 0.0);
    } else if (at_upper) {
      p(i) = std::max(y(i), 0.0);
    } else {
      p(i) = 0.0;
    }
  }
  return {ExtReal((p - y).norm()), p};
}

}  // namespace

ImageProjection image_projection(const SetValuedMap& F, const Vector& x,
                                 const Vector& y) {
  check_dims(F, x, y, "image_distance");
  return std::visit(
      Overloaded{
          [&](const LinearMap& L) { return point_image(L.A * x, y); },
          [&](const PolyhedralGraph& P) -> ImageProjection {
            const Polyhedron slice(P.B, P.c - P.A * x);
            auto p = try_project_polyhedron(slice, y);
            if (!p) return {ExtReal::infinity(), std::nullopt};
            return {ExtReal((*p - y).norm()), std::move(p)};
          },
          [&](const NormalConeOfBox& N) { return box_cone_projection(N, x, y); },
          [&](const SmoothMap& S) { return point_image(S.f(x), y); },
          [&](const SampledGraph& S) -> ImageProjection {
            ImageProjection best{ExtReal::infinity(), std::nullopt};
            for (const auto& [px, py] : S.pairs) {
              if ((px - x).norm() > kMembershipTol) continue;
              const ExtReal d((py - y).norm());
              if (!best.nearest || d < best.distance) best = {d, py};
            }
            return best;
          },
          [&](const SumWithFunction& S) -> ImageProjection {
            const Vector fx = S.f(x);
            ImageProjection inner = image_projection(*S.base, x, y - fx);
            if (inner.nearest) *inner.nearest += fx;
            return inner;
          },
          [&](const ZeroMap& Z) {
            return point_image(Vector::Zero(Z.m), y);
          }},
      F.rep());
}

ExtReal image_distance(const SetValuedMap& F, const Vector& x,
                       const Vector& y) {
  return image_projection(F, x, y).distance;
}

namespace {

bool is_single_valued(const SetValuedMap& F) {
  return std::visit(
      Overloaded{[](const LinearMap&) { return true; },
                 [](const SmoothMap&) { return true; },
                 [](const ZeroMap&) { return true; },
                 [](const SumWithFunction& S) {
                   return is_single_valued(*S.base);
                 },
                 [](const auto&) { return false; }},
      F.rep());
}

bool in_closed_box(const Vector& p, const Vector& center, double half) {
  return ((p - center).cwiseAbs().array() <= half * (1.0 + 1e-12)).all();
}

struct PairLess {
  static bool less(const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(),
                                        b.data(), b.data() + b.size());
  }
  bool operator()(const std::pair<Vector, Vector>& a,
                  const std::pair<Vector, Vector>& b) const {
    if (less(a.first, b.first)) return true;
    if (less(b.first, a.first)) return false;
    return less(a.second, b.second);
  }
};

}  // namespace

std::vector<std::pair<Vector, Vector>> graph_sample(const SetValuedMap& F,
                                                    const EvalRegion& region) {
  region.validate();
  check_dims(F, region.xbar, region.ybar, "graph_sample");
  std::vector<std::pair<Vector, Vector>> out;

  if (const auto* S = std::get_if<SampledGraph>(&F.rep())) {
    for (const auto& pr : S->pairs) {
      if (in_closed_box(pr.first, region.xbar, region.delta_x) &&
          in_closed_box(pr.second, region.ybar, region.delta_y)) {
        out.push_back(pr);
      }
    }
    return out;
  }

  const auto xs = box_grid(region.xbar, region.delta_x, region.resolution);
  std::set<std::pair<Vector, Vector>, PairLess> seen;
  auto add = [&](const Vector& x, const Vector& y) {
    if (!in_closed_box(y, region.ybar, region.delta_y)) return;
    if (seen.emplace(x, y).second) out.emplace_back(x, y);
  };

  const bool base_on_graph =
      image_distance(F, region.xbar, region.ybar).as_double() <= 1e-8;

  if (is_single_valued(F)) {
    for (const auto& x : xs) {
      auto proj = image_projection(F, x, region.ybar);
      if (proj.nearest) add(x, *proj.nearest);
    }
  } else {
    // Project each y-grid point onto F(x): every result is on the graph and
    // set-valued images are covered at grid density.
    const auto ys = box_grid(region.ybar, region.delta_y, region.resolution);
    for (const auto& x : xs) {
      for (const auto& y : ys) {
        auto proj = image_projection(F, x, y);
        if (proj.nearest) add(x, *proj.nearest);
      }
    }
  }
  if (base_on_graph && !seen.count({region.xbar, region.ybar})) {
    out.emplace_back(region.xbar, region.ybar);
  }
  return out;
}

}  // namespace regulab
