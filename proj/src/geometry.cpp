#include "regulab/geometry.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>

#include "regulab/errors.hpp"

namespace regulab {

ExtReal::ExtReal(double value) : value_(value) {
  if (std::isnan(value) || std::isinf(value)) {
    throw PreconditionError(
        "ExtReal: finite value required (use ExtReal::infinity())");
  }
}

double ExtReal::value() const {
  if (infinite_) throw PreconditionError("ExtReal::value() on +INF");
  return value_;
}

std::string ExtReal::to_string() const {
  if (infinite_) return "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value_);
  return std::string(buf, res.ptr);
}

ExtReal operator+(const ExtReal& a, const ExtReal& b) {
  if (a.infinite_ || b.infinite_) return ExtReal::infinity();
  return ExtReal(a.value_ + b.value_);
}

ExtReal operator*(const ExtReal& a, double s) {
  if (s < 0) throw PreconditionError("ExtReal scaling by a negative number");
  if (a.infinite_) return s == 0.0 ? ExtReal(0.0) : ExtReal::infinity();
  return ExtReal(a.value_ * s);
}

double extended_difference(const ExtReal& a, const ExtReal& b) {
  if (a.is_infinite() && b.is_infinite()) return 0.0;
  return a.as_double() - b.as_double();
}

ExtReal from_double(double v) {
  if (std::isnan(v)) throw PreconditionError("from_double: NaN");
  if (std::isinf(v)) {
    if (v < 0) throw PreconditionError("from_double: -inf");
    return ExtReal::infinity();
  }
  return ExtReal(v);
}

ParametricGamma::ParametricGamma(double gamma) : gamma_(gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw PreconditionError("gamma must be positive and finite");
  }
}

Polyhedron::Polyhedron(Matrix a, Vector rhs) : A(std::move(a)), b(std::move(rhs)) {
  if (A.rows() != b.size()) {
    throw DimensionError("Polyhedron: row count of A differs from length of b");
  }
}

bool Polyhedron::contains(const Vector& x, double tol) const {
  if (x.size() != A.cols()) throw DimensionError("Polyhedron::contains");
  const Vector slack = A * x - b;
  for (int i = 0; i < slack.size(); ++i) {
    const double scale = 1.0 + std::abs(b(i)) + A.row(i).norm() * x.norm();
    if (slack(i) > tol * scale) return false;
  }
  return true;
}

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw PreconditionError(std::string(what) + ": non-finite entry");
  }
}

void check_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

double product_distance(const Vector& u1, const Vector& v1, const Vector& u2,
                        const Vector& v2, const ParametricGamma& gamma) {
  check_same_dim(u1, u2, "product_distance (first factor)");
  check_same_dim(v1, v2, "product_distance (second factor)");
  return std::max((u1 - u2).norm(), gamma.value() * (v1 - v2).norm());
}

double dual_product_norm(const Vector& xs, const Vector& ys,
                         const ParametricGamma& gamma) {
  return xs.norm() + ys.norm() / gamma.value();
}

std::optional<Vector> project_affine(const Matrix& A_S, const Vector& b_S,
                                     const Vector& x, double tol) {
  if (A_S.rows() == 0) return x;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A_S);
  const Vector r = A_S * x - b_S;
  const Vector p = x - cod.solve(r);
  const double scale = 1.0 + b_S.norm() + A_S.norm() * x.norm();
  if ((A_S * p - b_S).norm() > tol * scale) return std::nullopt;
  return p;
}

std::optional<Vector> try_project_polyhedron(const Polyhedron& P,
                                             const Vector& x) {
  if (x.size() != P.dim()) {
    throw DimensionError("project_polyhedron: point has dimension " +
                         std::to_string(x.size()) + ", polyhedron " +
                         std::to_string(P.dim()));
  }
  const int k = P.rows();
  if (k > kMaxPolyhedronRows) {
    throw SizeError("project_polyhedron: " + std::to_string(k) +
                    " rows exceeds the enumeration cap of " +
                    std::to_string(kMaxPolyhedronRows));
  }
  if (P.contains(x)) return x;

  // The projection lies in the relative interior of a face whose affine hull
  // is cut out by at most dim() independent active rows, so enumerating those
  // subsets and keeping the nearest feasible candidate is exact.
  const int max_size = std::min(k, P.dim());
  std::optional<Vector> best;
  double best_dist = std::numeric_limits<double>::infinity();
  const unsigned limit = 1u << k;
  for (unsigned mask = 1; mask < limit; ++mask) {
    if (std::popcount(mask) > max_size) continue;
    const int s = std::popcount(mask);
    Matrix A_S(s, P.dim());
    Vector b_S(s);
    int r = 0;
    for (int i = 0; i < k; ++i) {
      if (mask & (1u << i)) {
        A_S.row(r) = P.A.row(i);
        b_S(r) = P.b(i);
        ++r;
      }
    }
    auto p = project_affine(A_S, b_S, x);
    if (!p || !P.contains(*p)) continue;
    const double d = (*p - x).norm();
    if (d < best_dist) {
      best_dist = d;
      best = std::move(p);
    }
  }
  return best;
}

Vector project_polyhedron(const Polyhedron& P, const Vector& x) {
  auto p = try_project_polyhedron(P, x);
  if (!p) throw EmptySetError("project_polyhedron: empty set");
  return *p;
}

ExtReal excess(std::span<const Vector> A, const SetDistance& B) {
  if (A.empty()) return B.empty ? ExtReal::infinity() : ExtReal(0.0);
  if (B.empty) return ExtReal::infinity();
  ExtReal worst(0.0);
  for (const auto& a : A) {
    const ExtReal d = B.distance(a);
    if (d > worst) worst = d;
  }
  return worst;
}

Vector nnls(const Matrix& M, const Vector& t, int max_iter) {
  const int n = static_cast<int>(M.cols());
  Vector lambda = Vector::Zero(n);
  if (n == 0) return lambda;
  std::vector<bool> passive(n, false);
  const double tol = 1e-12 * (1.0 + M.norm() * (1.0 + t.norm()));

  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector w = M.transpose() * (t - M * lambda);
    int enter = -1;
    double wmax = tol;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && w(j) > wmax) {
        wmax = w(j);
        enter = j;
      }
    }
    if (enter < 0) break;
    passive[enter] = true;

    while (true) {
      std::vector<int> idx;
      for (int j = 0; j < n; ++j) {
        if (passive[j]) idx.push_back(j);
      }
      Matrix Mp(M.rows(), static_cast<int>(idx.size()));
      for (size_t c = 0; c < idx.size(); ++c) Mp.col(c) = M.col(idx[c]);
      const Vector zp = Mp.completeOrthogonalDecomposition().solve(t);
      Vector z = Vector::Zero(n);
      for (size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(c);

      bool all_positive = true;
      for (int j : idx) {
        if (z(j) <= 0) all_positive = false;
      }
      if (all_positive) {
        lambda = z;
        break;
      }
      double alpha = 1.0;
      for (int j : idx) {
        if (z(j) <= 0) {
          const double denom = lambda(j) - z(j);
          if (denom > 0) alpha = std::min(alpha, lambda(j) / denom);
        }
      }
      lambda += alpha * (z - lambda);
      for (int j : idx) {
        if (lambda(j) <= tol) {
          lambda(j) = 0.0;
          passive[j] = false;
        }
      }
    }
  }
  return lambda;
}

double distance_to_cone(const Matrix& G, const Vector& t) {
  if (G.cols() == 0) return t.norm();
  const Vector lambda = nnls(G, t);
  return (G * lambda - t).norm();
}

}  // namespace regulab
