#include "regulab/grid.hpp"

#include <cmath>
#include <numbers>

#include "regulab/errors.hpp"

namespace regulab {

std::vector<Vector> box_grid(const Vector& center, const Vector& half_widths,
                             int resolution) {
  if (resolution < 1) throw PreconditionError("box_grid: resolution < 1");
  check_same_dim(center, half_widths, "box_grid");
  const int n = static_cast<int>(center.size());
  std::vector<double> ticks(resolution);
  std::vector<Vector> out;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(resolution);
  out.reserve(total);

  std::vector<int> idx(n, 0);
  for (std::size_t count = 0; count < total; ++count) {
    Vector p(n);
    for (int i = 0; i < n; ++i) {
      if (resolution == 1) {
        p(i) = center(i);
      } else {
        const double t = -1.0 + 2.0 * idx[i] / (resolution - 1);
        p(i) = center(i) + t * half_widths(i);
      }
    }
    out.push_back(std::move(p));
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < resolution) break;
      idx[i] = 0;
    }
  }
  return out;
}

std::vector<Vector> box_grid(const Vector& center, double half_width,
                             int resolution) {
  return box_grid(center, Vector::Constant(center.size(), half_width),
                  resolution);
}

bool in_open_ball(const Vector& p, const Vector& center, double radius) {
  return (p - center).norm() < radius * (1.0 - 1e-12);
}

std::vector<Vector> ball_grid(const Vector& center, double radius,
                              int resolution) {
  std::vector<Vector> out;
  for (auto& p : box_grid(center, radius, resolution)) {
    if (in_open_ball(p, center, radius)) out.push_back(std::move(p));
  }
  return out;
}

int refined_resolution(int resolution, int level) {
  if (resolution < 2) return resolution;
  return (resolution - 1) * (1 << level) + 1;
}

namespace {

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                           37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79};

}  // namespace

std::vector<Vector> sphere_samples(int dim, int count, std::uint64_t offset) {
  if (dim < 1) throw DimensionError("sphere_samples: dim < 1");
  std::vector<Vector> out;
  if (dim == 1) {
    out.push_back(Vector::Constant(1, 1.0));
    out.push_back(Vector::Constant(1, -1.0));
    return out;
  }
  if (dim > static_cast<int>(std::size(kPrimes))) {
    throw SizeError("sphere_samples: dimension too large");
  }
  const std::uint64_t start = offset % 1000003u + 1;
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = radical_inverse(start + k, 2);
      const double angle = 2.0 * std::numbers::pi * t;
      Vector v(2);
      v << std::cos(angle), std::sin(angle);
      out.push_back(std::move(v));
    }
    return out;
  }
  // Halton points pushed through Box-Muller give Gaussian vectors; their
  // directions are spread evenly over the sphere.
  for (int k = 0; k < count; ++k) {
    Vector v(dim);
    for (int i = 0; i < dim; i += 2) {
      double u1 = radical_inverse(start + k, kPrimes[i]);
      double u2 = radical_inverse(
          start + k, kPrimes[(i + 1) % static_cast<int>(std::size(kPrimes))]);
      u1 = std::max(u1, 1e-12);
      const double r = std::sqrt(-2.0 * std::log(u1));
      v(i) = r * std::cos(2.0 * std::numbers::pi * u2);
      if (i + 1 < dim) v(i + 1) = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    const double norm = v.norm();
    if (norm > 1e-12) out.push_back(v / norm);
  }
  return out;
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace regulab
