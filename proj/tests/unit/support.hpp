#pragma once

#include <cmath>
#include <initializer_list>
#include <random>

#include "regulab/geometry.hpp"

namespace testing_support {

using regulab::Matrix;
using regulab::Vector;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix M(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double x : row) M(i, j++) = x;
    ++i;
  }
  return M;
}

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  Vector vector(int n, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }
  Matrix matrix(int r, int c, double lo = -1.0, double hi = 1.0) {
    Matrix M(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) M(i, j) = uniform(lo, hi);
    }
    return M;
  }
  /// Square matrix with singular values drawn from [smin, smax], built from
  /// random rotations so the answer is known by construction.
  Matrix conditioned(int n, double smin, double smax, Vector* sigma = nullptr) {
    const Matrix U = orthogonal(n);
    const Matrix V = orthogonal(n);
    Vector s(n);
    for (int i = 0; i < n; ++i) s(i) = uniform(smin, smax);
    if (sigma) *sigma = s;
    return U * s.asDiagonal() * V.transpose();
  }
  Matrix orthogonal(int n) {
    Eigen::HouseholderQR<Matrix> qr(matrix(n, n));
    return qr.householderQ();
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing_support
