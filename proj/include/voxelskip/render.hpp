#pragma once

#include <voxelskip/hybrid.hpp>
#include <voxelskip/kdtree.hpp>
#include <voxelskip/lbvh.hpp>
#include <voxelskip/math.hpp>
#include <voxelskip/parallel.hpp>
#include <voxelskip/svt.hpp>
#include <voxelskip/volume.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

namespace voxelskip {

// World space is voxel index space: voxel (i,j,k) covers [i,i+1)x[j,j+1)x[k,k+1)
// and its sample value sits at the voxel center.

struct Ray {
  Vec3d origin;
  Vec3d dir;  // unit length
  Vec3d at(double t) const { return origin + dir * t; }
};

struct Segment {
  double t0 = 0;
  double t1 = 0;
  friend bool operator==(const Segment&, const Segment&) = default;
};

using SegmentList = std::vector<Segment>;

struct Interval {
  double t_near = 0;
  double t_far = 0;
};

/// Slab test against the world box [lo, hi], restricted to t >= 0.
inline std::optional<Interval> intersect_box(const Ray& ray, Vec3d lo, Vec3d hi) {
  double tn = 0.0, tf = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a], d = ray.dir[a];
    if (d == 0.0) {
      if (o < lo[a] || o > hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d;
    double t0 = (lo[a] - o) * inv, t1 = (hi[a] - o) * inv;
    if (t0 > t1) std::swap(t0, t1);
    tn = std::max(tn, t0);
    tf = std::min(tf, t1);
  }
  if (tn >= tf) return std::nullopt;
  return Interval{tn, tf};
}

inline std::optional<Interval> intersect_box(const Ray& ray, const Aabb& box) {
  return intersect_box(ray, to_vec3d(box.lo), to_vec3d(box.hi));
}

/// Sorts segments and merges overlapping or touching ones in place.
inline void merge_segments(SegmentList& segs) {
  std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.t0 < b.t0; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (out > 0 && segs[i].t0 <= segs[out - 1].t1 + 1e-9) {
      segs[out - 1].t1 = std::max(segs[out - 1].t1, segs[i].t1);
    } else {
      segs[out++] = segs[i];
    }
  }
  segs.resize(out);
}

// ---------------------------------------------------------------------------
// Traversal

inline void traverse_naive(const Ray& ray, Vec3i dims, SegmentList& out) {
  out.clear();
  if (auto hit = intersect_box(ray, Aabb{{0, 0, 0}, dims})) out.push_back({hit->t_near, hit->t_far});
}

namespace detail {

// 3-D DDA over the macro cells hit by the ray within [t_begin, t_end];
// appends occupied stretches to `out` (unmerged).
inline void grid_walk(const Ray& ray, const MacroGrid& grid, double t_begin, double t_end, SegmentList& out) {
  if (!(t_begin < t_end)) return;
  const int cs = grid.cell_size;
  const Vec3d p = ray.at(0.5 * (t_begin + std::min(t_end, t_begin + 1e-6)));
  Vec3i cell;
  int step[3];
  double t_max[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    cell[a] = std::clamp(int(std::floor(p[a] / cs)), 0, grid.cells_dims[a] - 1);
    const double d = ray.dir[a];
    if (d > 0) {
      step[a] = 1;
      t_max[a] = (double(cell[a] + 1) * cs - ray.origin[a]) / d;
      t_delta[a] = cs / d;
    } else if (d < 0) {
      step[a] = -1;
      t_max[a] = (double(cell[a]) * cs - ray.origin[a]) / d;
      t_delta[a] = -cs / d;
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }
  double t = t_begin;
  while (t < t_end) {
    const int a = t_max[0] < t_max[1] ? (t_max[0] < t_max[2] ? 0 : 2) : (t_max[1] < t_max[2] ? 1 : 2);
    const double t_next = std::min(t_max[a], t_end);
    if (t_next > t && grid.at(cell)) {
      if (!out.empty() && out.back().t1 >= t - 1e-9 && out.back().t1 <= t_next)
        out.back().t1 = t_next;
      else
        out.push_back({t, t_next});
    }
    t = std::max(t, t_next);
    cell[a] += step[a];
    if (cell[a] < 0 || cell[a] >= grid.cells_dims[a]) break;
    t_max[a] += t_delta[a];
  }
}

}  // namespace detail

inline void traverse_grid(const Ray& ray, const MacroGrid& grid, SegmentList& out) {
  out.clear();
  const auto hit = intersect_box(ray, Aabb{{0, 0, 0}, grid.dims});
  if (!hit) return;
  detail::grid_walk(ray, grid, hit->t_near, hit->t_far, out);
  merge_segments(out);
}

/// Depth-first BVH traversal, nearer child first; leaves clipped to their boxes.
inline void traverse_lbvh(const Ray& ray, const Lbvh& bvh, SegmentList& out) {
  out.clear();
  if (bvh.empty()) return;
  int stack[128];
  int top = 0;
  stack[top++] = bvh.root();
  while (top > 0) {
    const LbvhNode& node = bvh.nodes[std::size_t(stack[--top])];
    if (node.is_leaf()) {
      if (auto hit = intersect_box(ray, node.box)) out.push_back({hit->t_near, hit->t_far});
      continue;
    }
    const auto hl = intersect_box(ray, bvh.nodes[std::size_t(node.left)].box);
    const auto hr = intersect_box(ray, bvh.nodes[std::size_t(node.right)].box);
    if (hl && hr) {
      const bool left_first = hl->t_near <= hr->t_near;
      stack[top++] = left_first ? node.right : node.left;
      stack[top++] = left_first ? node.left : node.right;
    } else if (hl) {
      stack[top++] = node.left;
    } else if (hr) {
      stack[top++] = node.right;
    }
  }
  merge_segments(out);
}

/// k-d traversal: front child by the ray's direction sign on the split axis.
inline void traverse_kd(const Ray& ray, const KdTree& tree, SegmentList& out) {
  out.clear();
  if (tree.empty()) return;
  int stack[256];
  int top = 0;
  stack[top++] = tree.root();
  while (top > 0) {
    const KdNode& node = tree.nodes[std::size_t(stack[--top])];
    const auto hit = intersect_box(ray, node.box);
    if (!hit) continue;
    if (node.is_leaf()) {
      out.push_back({hit->t_near, hit->t_far});
      continue;
    }
    const int front = ray.dir[node.axis] >= 0 ? 0 : 1;
    if (node.child[1 - front] >= 0) stack[top++] = node.child[1 - front];
    if (node.child[front] >= 0) stack[top++] = node.child[front];
  }
  merge_segments(out);
}

/// k-d traversal down to leaves, then macro-cell DDA inside each leaf interval.
inline void traverse_hybrid(const Ray& ray, const HybridGrid& h, SegmentList& out, SegmentList& scratch) {
  traverse_kd(ray, h.tree, scratch);
  out.clear();
  for (const Segment& s : scratch) detail::grid_walk(ray, h.grid, s.t0, s.t1, out);
  merge_segments(out);
}

inline void traverse_hybrid(const Ray& ray, const HybridGrid& h, SegmentList& out) {
  SegmentList scratch;
  traverse_hybrid(ray, h, out, scratch);
}

// ---------------------------------------------------------------------------
// Integration

enum class Interpolation { trilinear, nearest };

inline float sample_volume(const Volume& v, Vec3d p, Interpolation interp) {
  const Vec3i d = v.dims();
  if (interp == Interpolation::nearest) {
    const int x = std::clamp(int(std::floor(p.x)), 0, d.x - 1);
    const int y = std::clamp(int(std::floor(p.y)), 0, d.y - 1);
    const int z = std::clamp(int(std::floor(p.z)), 0, d.z - 1);
    return v.at(x, y, z);
  }
  const double qx = p.x - 0.5, qy = p.y - 0.5, qz = p.z - 0.5;
  const double fx0 = std::floor(qx), fy0 = std::floor(qy), fz0 = std::floor(qz);
  const float fx = float(qx - fx0), fy = float(qy - fy0), fz = float(qz - fz0);
  const int x0 = std::clamp(int(fx0), 0, d.x - 1), x1 = std::clamp(int(fx0) + 1, 0, d.x - 1);
  const int y0 = std::clamp(int(fy0), 0, d.y - 1), y1 = std::clamp(int(fy0) + 1, 0, d.y - 1);
  const int z0 = std::clamp(int(fz0), 0, d.z - 1), z1 = std::clamp(int(fz0) + 1, 0, d.z - 1);
  auto lerp = [](float a, float b, float t) { return a + (b - a) * t; };
  const float c00 = lerp(v.at(x0, y0, z0), v.at(x1, y0, z0), fx);
  const float c10 = lerp(v.at(x0, y1, z0), v.at(x1, y1, z0), fx);
  const float c01 = lerp(v.at(x0, y0, z1), v.at(x1, y0, z1), fx);
  const float c11 = lerp(v.at(x0, y1, z1), v.at(x1, y1, z1), fx);
  return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
}

struct RenderOptions {
  double dt = 0.5;  // voxel units
  Interpolation interp = Interpolation::trilinear;
};

struct IntegrationResult {
  Rgba color;  // premultiplied, front-to-back accumulated
  std::int64_t samples = 0;
};

// Slack for segment ends so a lattice point sitting on a boundary is never lost
// to rounding; taking an extra zero-alpha sample is harmless.
inline constexpr double kLatticeSlack = 1e-6;

/// Front-to-back absorption+emission along `segments`.
///
/// Samples sit on the lattice t = entry.t_near + k*dt anchored at the ray's
/// entry into the whole volume, so every traversal samples exactly where the
/// naive marcher does. No early ray termination.
inline IntegrationResult integrate(const Ray& ray, const SegmentList& segments, const Interval& entry, const Volume& v,
                                   const TransferFunction& tf, const RenderOptions& opt) {
  IntegrationResult r;
  const double dt = opt.dt;
  const double slack = kLatticeSlack * dt;
  const float exponent = float(dt);
  float cr = 0, cg = 0, cb = 0, ca = 0;
  std::int64_t next_k = 0;  // segments closer than the slack must not repeat a sample
  for (const Segment& s : segments) {
    const double t0 = std::max(s.t0, entry.t_near);
    const double t1 = std::min(s.t1, entry.t_far);
    if (!(t0 < t1)) continue;
    const double k_first = std::max(0.0, std::ceil((t0 - entry.t_near) / dt - kLatticeSlack));
    for (auto k = std::max(next_k, std::int64_t(k_first));; ++k) {
      const double t = entry.t_near + double(k) * dt;
      if (t >= t1 + slack || t >= entry.t_far + slack) break;
      next_k = k + 1;
      const float scalar = sample_volume(v, ray.at(t), opt.interp);
      const Rgba& c = tf.lookup(scalar);
      ++r.samples;
      if (c.a <= 0.0f) continue;
      const float a = 1.0f - std::pow(1.0f - c.a, exponent);
      const float w = (1.0f - ca) * a;
      cr += w * c.r;
      cg += w * c.g;
      cb += w * c.b;
      ca += w;
    }
  }
  r.color = {cr, cg, cb, ca};
  return r;
}

/// Convenience overload: entry interval from the volume box.
inline IntegrationResult integrate(const Ray& ray, const SegmentList& segments, const Volume& v,
                                   const TransferFunction& tf, const RenderOptions& opt = {}) {
  const auto entry = intersect_box(ray, v.bounds());
  if (!entry) return {};
  return integrate(ray, segments, *entry, v, tf, opt);
}

// ---------------------------------------------------------------------------
// Camera and frame

struct OrthoCamera {
  Vec3d center;   // look-at point
  Vec3d dir;      // unit view direction
  Vec3d up;       // unit, orthogonal to dir
  double extent;  // world-space viewport width
  double distance;  // eye distance from center along -dir
  int width = 256;
  int height = 256;

  Vec3d right() const { return normalize(cross(dir, up)); }

  Ray ray(int px, int py) const {
    const double u = ((px + 0.5) / width - 0.5) * extent;
    const double v = (0.5 - (py + 0.5) / height) * extent * (double(height) / width);
    return {center - dir * distance + right() * u + up * v, dir};
  }

  /// Orbit around the volume's vertical (y) axis. With zoom 1 the viewport
  /// spans the volume's bounding-sphere diameter.
  static OrthoCamera orbit(Vec3i dims, double azimuth_deg, double elevation_deg, double zoom, int width, int height) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double az = azimuth_deg * deg, el = std::clamp(elevation_deg, -89.0, 89.0) * deg;
    const Vec3d c = to_vec3d(dims) * 0.5;
    const double radius = 0.5 * length(to_vec3d(dims));
    const Vec3d d = normalize(Vec3d{-std::cos(el) * std::sin(az), -std::sin(el), -std::cos(el) * std::cos(az)});
    const Vec3d world_up{0, 1, 0};
    const Vec3d up = normalize(world_up - d * dot(world_up, d));
    return {c, d, up, 2.0 * radius / std::max(zoom, 1e-6), 2.0 * radius + 1.0, width, height};
  }
};

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;  // row-major, top row first
  std::int64_t sample_count = 0;
};

inline std::uint8_t to_unorm8(float c) { return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0f, 1.0f) * 255.0f)); }

struct NaiveIndex {};

using SpatialIndex = std::variant<NaiveIndex, MacroGrid, Lbvh, KdTree, HybridGrid>;

struct Traverser {
  const SpatialIndex& index;
  Vec3i dims;
  SegmentList scratch;

  void operator()(const Ray& ray, SegmentList& out) {
    std::visit(
        [&](const auto& idx) {
          using T = std::decay_t<decltype(idx)>;
          if constexpr (std::is_same_v<T, NaiveIndex>)
            traverse_naive(ray, dims, out);
          else if constexpr (std::is_same_v<T, MacroGrid>)
            traverse_grid(ray, idx, out);
          else if constexpr (std::is_same_v<T, Lbvh>)
            traverse_lbvh(ray, idx, out);
          else if constexpr (std::is_same_v<T, KdTree>)
            traverse_kd(ray, idx, out);
          else
            traverse_hybrid(ray, idx, out, scratch);
        },
        index);
  }
};

/// Renders one frame; pixel rows run in parallel, output is deterministic.
inline Frame render_frame(const Volume& v, const TransferFunction& tf, const SpatialIndex& index,
                          const OrthoCamera& cam, const RenderOptions& opt = {}) {
  if (!(opt.dt > 0)) throw RangeError("dt must be > 0");
  Frame f;
  f.width = cam.width;
  f.height = cam.height;
  f.rgba.assign(std::size_t(cam.width) * std::size_t(cam.height) * 4, 0);
  std::atomic<std::int64_t> samples{0};

  parallel_for_chunks(cam.height, [&](std::int64_t y0, std::int64_t y1) {
    Traverser traverse{index, v.dims(), {}};
    SegmentList segs;
    std::int64_t local = 0;
    for (auto y = int(y0); y < int(y1); ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const Ray ray = cam.ray(x, y);
        const auto entry = intersect_box(ray, v.bounds());
        if (!entry) continue;
        traverse(ray, segs);
        const IntegrationResult r = integrate(ray, segs, *entry, v, tf, opt);
        local += r.samples;
        std::uint8_t* px = f.rgba.data() + (std::size_t(y) * std::size_t(cam.width) + std::size_t(x)) * 4;
        px[0] = to_unorm8(r.color.r);
        px[1] = to_unorm8(r.color.g);
        px[2] = to_unorm8(r.color.b);
        px[3] = to_unorm8(r.color.a);
      }
    }
    samples += local;
  }, 4);
  f.sample_count = samples.load();
  return f;
}

}  // namespace voxelskip
