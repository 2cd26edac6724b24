#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace voxelskip {

// Error types used throughout the library.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec3i {
  int x = 0, y = 0, z = 0;

  constexpr int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr int& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr std::int64_t product() const {
    return std::int64_t(x) * std::int64_t(y) * std::int64_t(z);
  }

  friend constexpr bool operator==(const Vec3i&, const Vec3i&) = default;
  friend constexpr Vec3i operator+(Vec3i a, Vec3i b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3i operator-(Vec3i a, Vec3i b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3i operator*(Vec3i a, int s) { return {a.x * s, a.y * s, a.z * s}; }

  friend std::ostream& operator<<(std::ostream& os, const Vec3i& v) {
    return os << '(' << v.x << ',' << v.y << ',' << v.z << ')';
  }
};

constexpr Vec3i min(Vec3i a, Vec3i b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr Vec3i max(Vec3i a, Vec3i b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
// Component-wise ceil(a / b) for positive b.
constexpr Vec3i ceil_div(Vec3i a, int b) {
  return {(a.x + b - 1) / b, (a.y + b - 1) / b, (a.z + b - 1) / b};
}

struct Vec3d {
  double x = 0, y = 0, z = 0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend constexpr Vec3d operator+(Vec3d a, Vec3d b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3d operator-(Vec3d a, Vec3d b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3d operator*(Vec3d a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3d operator*(double s, Vec3d a) { return a * s; }
  friend constexpr bool operator==(const Vec3d&, const Vec3d&) = default;
};

constexpr double dot(Vec3d a, Vec3d b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3d cross(Vec3d a, Vec3d b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(Vec3d a) { return std::sqrt(dot(a, a)); }
inline Vec3d normalize(Vec3d a) { return a * (1.0 / length(a)); }
constexpr Vec3d to_vec3d(Vec3i v) { return {double(v.x), double(v.y), double(v.z)}; }

/// Half-open integer box [lo, hi) in voxel coordinates.
///
/// A box with lo == hi on some axis is degenerate (zero volume) but valid;
/// "no box" is always expressed as std::optional<Aabb>{} rather than with
/// inverted bounds.
struct Aabb {
  Vec3i lo;
  Vec3i hi;

  constexpr Vec3i extent() const { return hi - lo; }
  constexpr std::int64_t volume() const { return extent().product(); }
  constexpr bool degenerate() const { return lo.x >= hi.x || lo.y >= hi.y || lo.z >= hi.z; }

  constexpr bool contains(Vec3i p) const {
    return p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y && p.z >= lo.z && p.z < hi.z;
  }
  constexpr bool contains(const Aabb& b) const {
    return b.lo.x >= lo.x && b.lo.y >= lo.y && b.lo.z >= lo.z && b.hi.x <= hi.x &&
           b.hi.y <= hi.y && b.hi.z <= hi.z;
  }
  constexpr bool overlaps(const Aabb& b) const {
    return lo.x < b.hi.x && b.lo.x < hi.x && lo.y < b.hi.y && b.lo.y < hi.y && lo.z < b.hi.z &&
           b.lo.z < hi.z;
  }

  friend constexpr bool operator==(const Aabb&, const Aabb&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Aabb& b) {
    return os << '[' << b.lo << ',' << b.hi << ')';
  }
};

constexpr Aabb box_union(const Aabb& a, const Aabb& b) { return {min(a.lo, b.lo), max(a.hi, b.hi)}; }
constexpr Aabb box_intersection(const Aabb& a, const Aabb& b) {
  Aabb r{max(a.lo, b.lo), min(a.hi, b.hi)};
  r.hi = max(r.hi, r.lo);
  return r;
}

inline std::optional<Aabb> box_union(const std::optional<Aabb>& a, const std::optional<Aabb>& b) {
  if (!a) return b;
  if (!b) return a;
  return box_union(*a, *b);
}

/// Largest-extent axis, lowest axis index on ties.
constexpr int largest_axis(Vec3i extent) {
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;
  return axis;
}

}  // namespace voxelskip
