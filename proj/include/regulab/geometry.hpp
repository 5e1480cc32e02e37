#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace regulab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Nonnegative extended real: a finite value or the distinguished +INF.
///
/// Distances and moduli live here. Negative finite values are allowed so the
/// type can also carry signed margins, but -INF and NaN are rejected.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  ExtReal(double value);  // NOLINT(google-explicit-constructor)

  static ExtReal infinity() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }

  /// Finite value; throws when infinite.
  double value() const;

  /// Finite value, or +inf as a double. Only for internal arithmetic.
  double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  /// "inf" for +INF, otherwise the shortest round-trip decimal.
  std::string to_string() const;

  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend bool operator<(const ExtReal& a, const ExtReal& b) {
    return a.as_double() < b.as_double();
  }
  friend bool operator<=(const ExtReal& a, const ExtReal& b) {
    return a.as_double() <= b.as_double();
  }
  friend bool operator>(const ExtReal& a, const ExtReal& b) { return b < a; }
  friend bool operator>=(const ExtReal& a, const ExtReal& b) { return b <= a; }

  friend ExtReal operator+(const ExtReal& a, const ExtReal& b);
  friend ExtReal operator*(const ExtReal& a, double s);

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// a - b on the extended line, with (+INF) - (+INF) = 0.
/// The result may be -inf (as a double) when only b is infinite.
double extended_difference(const ExtReal& a, const ExtReal& b);

/// Wraps a double that may be +inf into an ExtReal. NaN and -inf throw.
ExtReal from_double(double v);

/// Strictly positive, finite weight on the second factor of a product space.
class ParametricGamma {
 public:
  explicit ParametricGamma(double gamma);
  double value() const { return gamma_; }

 private:
  double gamma_;
};

/// The polyhedron {x : A x <= b}.
struct Polyhedron {
  Matrix A;
  Vector b;

  Polyhedron() = default;
  Polyhedron(Matrix a, Vector rhs);

  int dim() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }
  bool contains(const Vector& x, double tol = 1e-9) const;
};

/// Row cap for exact active-set projection.
inline constexpr int kMaxPolyhedronRows = 12;

void check_finite(const Vector& v, const char* what);
void check_same_dim(const Vector& a, const Vector& b, const char* what);

/// max(|u1 - u2|, gamma |v1 - v2|) with Euclidean factor norms.
double product_distance(const Vector& u1, const Vector& v1, const Vector& u2,
                        const Vector& v2, const ParametricGamma& gamma);

/// |xs| + |ys| / gamma: the norm dual to the parametric product norm.
double dual_product_norm(const Vector& xs, const Vector& ys,
                         const ParametricGamma& gamma);

/// Euclidean projection onto a polyhedron by active-set enumeration.
/// Throws EmptySetError when the polyhedron is empty and SizeError when it
/// has more than kMaxPolyhedronRows rows.
Vector project_polyhedron(const Polyhedron& P, const Vector& x);

/// Same as project_polyhedron but reports emptiness as nullopt.
std::optional<Vector> try_project_polyhedron(const Polyhedron& P,
                                             const Vector& x);

/// Distance to a set, with emptiness tracked separately from +INF results so
/// that excess can apply its empty-set conventions.
struct SetDistance {
  std::function<ExtReal(const Vector&)> distance;
  bool empty = false;
};

/// e(A, B) = sup_{a in A} d(a, B), with e(empty, B) = 0 for nonempty B and
/// +INF otherwise.
ExtReal excess(std::span<const Vector> A, const SetDistance& B);

/// Nonnegative least squares, min |M lambda - t| over lambda >= 0
/// (Lawson-Hanson).
Vector nnls(const Matrix& M, const Vector& t, int max_iter = 500);

/// Distance from t to the cone generated by the columns of G.
double distance_to_cone(const Matrix& G, const Vector& t);

/// Solves A_S p = b_S for the point nearest x; nullopt when inconsistent.
std::optional<Vector> project_affine(const Matrix& A_S, const Vector& b_S,
                                     const Vector& x, double tol = 1e-9);

}  // namespace regulab
