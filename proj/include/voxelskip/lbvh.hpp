#pragma once

#include <voxelskip/math.hpp>
#include <voxelskip/morton.hpp>
#include <voxelskip/volume.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace voxelskip {

struct BrickEntry {
  Vec3i coord;  // brick grid coordinate
  std::uint32_t morton = 0;
  friend bool operator==(const BrickEntry&, const BrickEntry&) = default;
};

/// Non-empty bricks of a classification, in volume scan order until sorted.
struct BrickSet {
  int brick_size = 8;
  Vec3i dims;  // voxel dims of the source volume
  std::vector<BrickEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  Aabb brick_box(Vec3i coord) const {
    const Vec3i lo = coord * brick_size;
    return {lo, min(lo + Vec3i{brick_size, brick_size, brick_size}, dims)};
  }
};

/// Keeps the bricks that contain at least one set flag (an OR vote over the
/// brick), compacted in x-fastest brick order.
inline BrickSet flag_bricks(const BinaryVolume& b, int brick_size = 8) {
  if (brick_size < 1) throw RangeError("brick size must be >= 1");
  const Vec3i bd = ceil_div(b.dims, brick_size);
  if (bd.x > kMortonAxisLimit || bd.y > kMortonAxisLimit || bd.z > kMortonAxisLimit)
    throw RangeError("brick grid exceeds 1024 bricks per axis");

  std::vector<std::uint8_t> vote(std::size_t(bd.product()), 0);
  for (int z = 0; z < b.dims.z; ++z) {
    const std::size_t bz = std::size_t(z / brick_size) * std::size_t(bd.y);
    for (int y = 0; y < b.dims.y; ++y) {
      const std::size_t row = (bz + std::size_t(y / brick_size)) * std::size_t(bd.x);
      const std::uint8_t* flags = b.bits.data() + b.index(0, y, z);
      for (int x0 = 0; x0 < b.dims.x; x0 += brick_size) {
        std::uint8_t& v = vote[row + std::size_t(x0 / brick_size)];
        if (v) continue;
        const int x1 = std::min(x0 + brick_size, b.dims.x);
        v = std::any_of(flags + x0, flags + x1, [](std::uint8_t f) { return f != 0; });
      }
    }
  }

  BrickSet set;
  set.brick_size = brick_size;
  set.dims = b.dims;
  for (int z = 0; z < bd.z; ++z)
    for (int y = 0; y < bd.y; ++y)
      for (int x = 0; x < bd.x; ++x)
        if (vote[(std::size_t(z) * std::size_t(bd.y) + std::size_t(y)) * std::size_t(bd.x) + std::size_t(x)])
          set.entries.push_back({{x, y, z}, morton_encode(x, y, z)});
  return set;
}

struct LbvhNode {
  Aabb box;
  int left = -1;
  int right = -1;
  int brick = -1;  // index into Lbvh::bricks for leaves, -1 for inner nodes

  bool is_leaf() const { return brick >= 0; }
  friend bool operator==(const LbvhNode&, const LbvhNode&) = default;
};

/// Linear BVH with one brick per leaf.
///
/// Inner nodes occupy [0, n-1) and leaves [n-1, 2n-1), so the root is always
/// node 0. An empty hierarchy has no nodes.
struct Lbvh {
  int brick_size = 8;
  Vec3i dims;
  std::vector<BrickEntry> bricks;  // Morton-sorted
  std::vector<LbvhNode> nodes;

  bool empty() const { return nodes.empty(); }
  int root() const { return nodes.empty() ? -1 : 0; }
  int leaf_count() const { return int(bricks.size()); }
  int first_leaf() const { return int(bricks.size()) - 1; }
};

namespace detail {

// Karras 2012: leaf keys are (morton << 32 | original index), which makes
// every key unique so delta() is always well defined.
class KarrasBuilder {
 public:
  explicit KarrasBuilder(std::span<const std::uint64_t> keys) : keys_(keys) {}

  int delta(int i, int j) const {
    if (j < 0 || j >= int(keys_.size())) return -1;
    return std::countl_zero(keys_[std::size_t(i)] ^ keys_[std::size_t(j)]);
  }

  std::pair<int, int> range(int i) const {
    const int d = delta(i, i + 1) - delta(i, i - 1) >= 0 ? 1 : -1;
    const int delta_min = delta(i, i - d);
    int lmax = 2;
    while (delta(i, i + lmax * d) > delta_min) lmax *= 2;
    int l = 0;
    for (int t = lmax / 2; t >= 1; t /= 2)
      if (delta(i, i + (l + t) * d) > delta_min) l += t;
    const int j = i + l * d;
    return {std::min(i, j), std::max(i, j)};
  }

  int split(int first, int last) const {
    const int common = delta(first, last);
    int split = first;
    int step = last - first;
    do {
      step = (step + 1) >> 1;
      const int candidate = split + step;
      if (candidate < last && delta(first, candidate) > common) split = candidate;
    } while (step > 1);
    return split;
  }

 private:
  std::span<const std::uint64_t> keys_;
};

}  // namespace detail

inline Lbvh build_lbvh(const BrickSet& set) {
  Lbvh bvh;
  bvh.brick_size = set.brick_size;
  bvh.dims = set.dims;
  const int n = int(set.entries.size());
  if (n == 0) return bvh;

  std::vector<std::uint64_t> keys(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) keys[std::size_t(i)] = (std::uint64_t(set.entries[std::size_t(i)].morton) << 32) | std::uint32_t(i);
  std::sort(keys.begin(), keys.end());
  bvh.bricks.reserve(std::size_t(n));
  for (std::uint64_t k : keys) bvh.bricks.push_back(set.entries[std::size_t(k & 0xffffffffu)]);

  bvh.nodes.resize(std::size_t(2 * n - 1));
  const int first_leaf = n - 1;
  for (int i = 0; i < n; ++i) {
    LbvhNode& leaf = bvh.nodes[std::size_t(first_leaf + i)];
    leaf.brick = i;
    leaf.box = set.brick_box(bvh.bricks[std::size_t(i)].coord);
  }

  const detail::KarrasBuilder karras(keys);
  for (int i = 0; i < n - 1; ++i) {
    const auto [first, last] = karras.range(i);
    const int s = karras.split(first, last);
    LbvhNode& node = bvh.nodes[std::size_t(i)];
    node.left = s == first ? first_leaf + s : s;
    node.right = s + 1 == last ? first_leaf + s + 1 : s + 1;
  }

  // Post-order refit.
  if (n > 1) {
    std::vector<std::pair<int, bool>> stack{{0, false}};
    while (!stack.empty()) {
      auto [id, expanded] = stack.back();
      stack.pop_back();
      LbvhNode& node = bvh.nodes[std::size_t(id)];
      if (node.is_leaf()) continue;
      if (expanded) {
        node.box = box_union(bvh.nodes[std::size_t(node.left)].box, bvh.nodes[std::size_t(node.right)].box);
      } else {
        stack.push_back({id, true});
        stack.push_back({node.left, false});
        stack.push_back({node.right, false});
      }
    }
  }
  return bvh;
}

}  // namespace voxelskip
