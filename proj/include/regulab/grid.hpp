#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "regulab/geometry.hpp"

namespace regulab {

/// Regular axis-aligned grid on the closed box center +- half_width, with
/// `resolution` points per axis, in row-major order (first axis slowest).
std::vector<Vector> box_grid(const Vector& center, double half_width,
                             int resolution);

/// Same box grid with a separate half width per axis.
std::vector<Vector> box_grid(const Vector& center, const Vector& half_widths,
                             int resolution);

/// Points of box_grid lying in the open Euclidean ball B_radius(center).
std::vector<Vector> ball_grid(const Vector& center, double radius,
                              int resolution);

/// Resolution after `level` refinements. Each refinement inserts midpoints,
/// so grids at successive levels are nested.
int refined_resolution(int resolution, int level);

/// True when |p - center| < radius, up to a relative 1e-12 boundary band.
bool in_open_ball(const Vector& p, const Vector& center, double radius);

/// Deterministic low-discrepancy points on the unit sphere of R^dim.
/// `offset` shifts the underlying sequence, so distinct seeds give distinct
/// but reproducible samples.
std::vector<Vector> sphere_samples(int dim, int count, std::uint64_t offset);

/// FNV-1a hash, stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

}  // namespace regulab
