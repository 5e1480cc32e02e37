#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "regulab/function.hpp"
#include "regulab/geometry.hpp"

namespace regulab {

class SetValuedMap;

/// F(x) = {A x}.
struct LinearMap {
  Matrix A;
};

/// gph F = {(x, y) : A x + B y <= c}.
struct PolyhedralGraph {
  Matrix A;
  Matrix B;
  Vector c;
};

/// F(x) = N_C(x) for the box C = [lower, upper]; infinite bounds allowed.
struct NormalConeOfBox {
  Vector lower;
  Vector upper;
};

/// F(x) = {f(x)}.
struct SmoothMap {
  Function f;
};

/// Finite graph.
struct SampledGraph {
  std::vector<std::pair<Vector, Vector>> pairs;
};

/// x -> base(x) + f(x).
struct SumWithFunction {
  std::shared_ptr<const SetValuedMap> base;
  Function f;
};

/// F(x) = {0} in R^m.
struct ZeroMap {
  int n = 0;
  int m = 0;
};

/// A set-valued mapping F: R^n => R^m. Immutable after construction.
class SetValuedMap {
 public:
  using Rep = std::variant<LinearMap, PolyhedralGraph, NormalConeOfBox,
                           SmoothMap, SampledGraph, SumWithFunction, ZeroMap>;

  static SetValuedMap linear(Matrix A);
  static SetValuedMap polyhedral(Matrix A, Matrix B, Vector c);
  static SetValuedMap normal_cone_box(Vector lower, Vector upper);
  static SetValuedMap smooth(Function f);
  static SetValuedMap sampled(std::vector<std::pair<Vector, Vector>> pairs);
  static SetValuedMap zero(int n, int m);

  const Rep& rep() const { return rep_; }
  int domain_dim() const { return n_; }
  int range_dim() const { return m_; }

  /// Short name of the representation ("linear", "sum", ...).
  std::string kind() const;

 private:
  SetValuedMap(Rep rep, int n, int m) : rep_(std::move(rep)), n_(n), m_(m) {}
  friend SetValuedMap sum_with_function(const SetValuedMap& F, Function f);

  Rep rep_;
  int n_ = 0;
  int m_ = 0;
};

/// x -> F(x) + f(x). An optional Jacobian travels inside the Function.
SetValuedMap sum_with_function(const SetValuedMap& F, Function f);

/// F(x) = {M x + b} when F is single-valued and affine (linear, zero, or a
/// sum of those with affine functions); nullopt otherwise.
std::optional<AffineForm> affine_single_valued(const SetValuedMap& F);

/// Closed-form inverse. Supported for linear, polyhedral and sampled graphs;
/// everything else throws NotInvertibleError.
SetValuedMap inverse(const SetValuedMap& F);

/// Tolerance used for graph membership decisions.
inline constexpr double kMembershipTol = 1e-9;

/// The balls around a base point used by searches and samplers.
struct EvalRegion {
  Vector xbar;
  Vector ybar;
  double delta_x = 0.5;
  double delta_y = 0.5;
  int resolution = 21;

  void validate() const;
};

struct ImageProjection {
  ExtReal distance;
  std::optional<Vector> nearest;  // empty when F(x) is empty
};

/// d(y, F(x)) together with the nearest point of F(x).
ImageProjection image_projection(const SetValuedMap& F, const Vector& x,
                                 const Vector& y);

/// d(y, F(x)); +INF when F(x) is empty.
ExtReal image_distance(const SetValuedMap& F, const Vector& x, const Vector& y);

struct PreimageResult {
  ExtReal distance;
  /// Set when +INF comes from an unsuccessful search rather than from a
  /// provably empty preimage.
  bool search_limited = false;
  std::optional<Vector> nearest;
};

/// Answers d(x, F^{-1}(y)) for a fixed y and many x. Construction does the
/// y-dependent work (root finding, slice set up) once.
class PreimageLocator {
 public:
  PreimageLocator(const SetValuedMap& F, const Vector& y,
                  const EvalRegion& region);
  ~PreimageLocator();
  PreimageLocator(PreimageLocator&&) noexcept;
  PreimageLocator& operator=(PreimageLocator&&) noexcept;

  PreimageResult query(const Vector& x) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// d(x, F^{-1}(y)). Exact for linear, polyhedral, box normal cone, sampled
/// and zero maps, and for sums whose smooth part is affine; otherwise found by
/// multistart Newton seeded on a grid over the search box of `region`.
PreimageResult preimage_distance(const SetValuedMap& F, const Vector& x,
                                 const Vector& y, const EvalRegion& region);

/// Graph points over the closed box region, in row-major grid order. Every
/// pair satisfies image_distance <= 1e-8. Contains (xbar, ybar) when that
/// point is on the graph.
std::vector<std::pair<Vector, Vector>> graph_sample(const SetValuedMap& F,
                                                    const EvalRegion& region);

}  // namespace regulab
