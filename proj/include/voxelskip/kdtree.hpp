#pragma once

#include <voxelskip/math.hpp>
#include <voxelskip/morton.hpp>
#include <voxelskip/svt.hpp>
#include <voxelskip/volume.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace voxelskip {

struct KdNode {
  Aabb box;        // tight box of the node's visible voxels
  int axis = -1;   // split axis, -1 for leaves
  int split = 0;   // split plane position (voxel boundary) for inner nodes
  int child[2] = {-1, -1};  // -1 where a side held no visible voxels

  bool is_leaf() const { return axis < 0; }
  friend bool operator==(const KdNode& a, const KdNode& b) {
    return a.box == b.box && a.axis == b.axis && a.split == b.split && a.child[0] == b.child[0] &&
           a.child[1] == b.child[1];
  }
};

struct TreeStats {
  std::int64_t node_count = 0;
  int height = 0;  // nodes on the longest root-to-leaf path
  friend bool operator==(const TreeStats&, const TreeStats&) = default;
};

struct KdTree {
  Vec3i dims;
  std::vector<KdNode> nodes;  // pre-order, root at 0

  bool empty() const { return nodes.empty(); }
  int root() const { return nodes.empty() ? -1 : 0; }
  TreeStats stats() const {
    TreeStats s;
    s.node_count = std::int64_t(nodes.size());
    if (nodes.empty()) return s;
    std::vector<std::pair<int, int>> stack{{0, 1}};
    while (!stack.empty()) {
      auto [id, depth] = stack.back();
      stack.pop_back();
      s.height = std::max(s.height, depth);
      for (int c : nodes[std::size_t(id)].child)
        if (c >= 0) stack.push_back({c, depth + 1});
    }
    return s;
  }
};

enum class KdMode { shallow, deep };
enum class KdBuilder { sweep, binned };

struct BuildParams {
  KdMode mode = KdMode::deep;
  int max_leaf_size = 0;  // voxels per axis; 0 disables, deep mode only
  KdBuilder builder = KdBuilder::sweep;
  int bins = 4;
  int cell_size = 8;
  double shallow_fraction = 0.10;        // shallow: split only above this share of the root volume
  std::int64_t deep_leaf_volume = 512;   // deep: split only above this volume (8^3)
};

struct SplitPlane {
  int axis = 0;
  int position = 0;
  std::int64_t cost = 0;
  std::optional<Aabb> left;   // tight boxes of both sides
  std::optional<Aabb> right;
};

inline std::int64_t volume_of(const std::optional<Aabb>& b) { return b ? b->volume() : 0; }

/// Best split of `box` over every interior voxel boundary on all three axes.
///
/// cost = volume(tight left) + volume(tight right). Ties keep the first
/// candidate in (x, y, z; ascending position) order. Returns nullopt unless
/// the best cost is strictly below the volume of the box's own tight box.
inline std::optional<SplitPlane> sweep_best_plane(const SvtGrid& g, const Aabb& box) {
  const auto tight = shrink_to_occupied(g, box);
  if (!tight) return std::nullopt;
  const std::int64_t threshold = tight->volume();

  std::optional<SplitPlane> best;
  std::vector<std::optional<Aabb>> slabs, prefix, suffix;
  for (int axis = 0; axis < 3; ++axis) {
    const int n = box.hi[axis] - box.lo[axis];
    if (n < 2) continue;
    slabs.assign(std::size_t(n), std::nullopt);
    for (int s = 0; s < n; ++s) {
      Aabb slab = box;
      slab.lo[axis] = box.lo[axis] + s;
      slab.hi[axis] = box.lo[axis] + s + 1;
      slabs[std::size_t(s)] = shrink_to_occupied(g, slab);
    }
    prefix.assign(std::size_t(n) + 1, std::nullopt);
    suffix.assign(std::size_t(n) + 1, std::nullopt);
    for (int s = 0; s < n; ++s) prefix[std::size_t(s) + 1] = box_union(prefix[std::size_t(s)], slabs[std::size_t(s)]);
    for (int s = n - 1; s >= 0; --s) suffix[std::size_t(s)] = box_union(suffix[std::size_t(s) + 1], slabs[std::size_t(s)]);

    for (int s = 1; s < n; ++s) {
      const std::int64_t cost = volume_of(prefix[std::size_t(s)]) + volume_of(suffix[std::size_t(s)]);
      if (!best || cost < best->cost)
        best = SplitPlane{axis, box.lo[axis] + s, cost, prefix[std::size_t(s)], suffix[std::size_t(s)]};
    }
  }
  if (best && best->cost < threshold) return best;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Macro-cell boxes for the binned builder

struct CellBox {
  std::uint32_t morton = 0;
  Vec3i cell;
  std::optional<Aabb> box;  // tight box of the cell's visible voxels
};

/// Per-cell tight boxes in Morton order of the cell coordinate.
struct CellBoxList {
  int cell_size = 8;
  Vec3i dims;
  Vec3i cells_dims;
  std::vector<CellBox> cells;

  /// Tight box of the visible voxels in `region`, reduced over the cells in
  /// the Morton range spanned by the region's corner cells. Exact when the
  /// region does not cut through an occupied cell's visible voxels, which is
  /// always the case for regions produced by the binned builder.
  std::optional<Aabb> region_box(const Aabb& region) const {
    const Aabb r = box_intersection(region, {{0, 0, 0}, dims});
    if (r.degenerate()) return std::nullopt;
    const Vec3i c0{r.lo.x / cell_size, r.lo.y / cell_size, r.lo.z / cell_size};
    const Vec3i c1{(r.hi.x - 1) / cell_size, (r.hi.y - 1) / cell_size, (r.hi.z - 1) / cell_size};
    const std::uint32_t first = morton_encode(c0), last = morton_encode(c1);
    auto it = std::lower_bound(cells.begin(), cells.end(), first,
                               [](const CellBox& c, std::uint32_t m) { return c.morton < m; });
    std::optional<Aabb> out;
    for (; it != cells.end() && it->morton <= last; ++it) {
      if (!it->box) continue;
      const Vec3i c = it->cell;
      if (c.x < c0.x || c.y < c0.y || c.z < c0.z || c.x > c1.x || c.y > c1.y || c.z > c1.z) continue;
      const Aabb clipped = box_intersection(*it->box, r);
      if (!clipped.degenerate()) out = box_union(out, clipped);
    }
    return out;
  }
};

namespace detail {
inline CellBoxList make_cell_list(Vec3i dims, int cell_size) {
  if (cell_size < 2) throw RangeError("cell size must be >= 2");
  CellBoxList list;
  list.cell_size = cell_size;
  list.dims = dims;
  list.cells_dims = ceil_div(dims, cell_size);
  const Vec3i cd = list.cells_dims;
  if (cd.x > kMortonAxisLimit || cd.y > kMortonAxisLimit || cd.z > kMortonAxisLimit)
    throw RangeError("cell grid exceeds 1024 cells per axis");
  list.cells.reserve(std::size_t(cd.product()));
  for (int z = 0; z < cd.z; ++z)
    for (int y = 0; y < cd.y; ++y)
      for (int x = 0; x < cd.x; ++x) list.cells.push_back({morton_encode(x, y, z), {x, y, z}, std::nullopt});
  return list;
}
inline void sort_cells(CellBoxList& list) {
  std::sort(list.cells.begin(), list.cells.end(), [](const CellBox& a, const CellBox& b) { return a.morton < b.morton; });
}
}  // namespace detail

/// Tight box per macro cell. Each non-empty cell gets a transient
/// summed volume table that is dropped once its box is known.
inline CellBoxList precompute_cell_boxes(const BinaryVolume& b, int cell_size = 8) {
  CellBoxList list = detail::make_cell_list(b.dims, cell_size);
  BinaryVolume local({cell_size, cell_size, cell_size});
  for (CellBox& c : list.cells) {
    const Vec3i lo = c.cell * cell_size;
    const Vec3i hi = min(lo + Vec3i{cell_size, cell_size, cell_size}, b.dims);
    bool any = false;
    std::fill(local.bits.begin(), local.bits.end(), 0);
    for (int z = lo.z; z < hi.z; ++z)
      for (int y = lo.y; y < hi.y; ++y)
        for (int x = lo.x; x < hi.x; ++x)
          if (b.at(x, y, z)) {
            local.set(x - lo.x, y - lo.y, z - lo.z);
            any = true;
          }
    if (!any) continue;
    const SvtGrid svt(local, cell_size);
    const auto box = shrink_to_occupied(svt, {{0, 0, 0}, hi - lo});
    if (box) c.box = Aabb{box->lo + lo, box->hi + lo};
  }
  detail::sort_cells(list);
  return list;
}

/// Same cell boxes, answered by an existing SVT grid.
inline CellBoxList precompute_cell_boxes(const SvtGrid& g, int cell_size = 8) {
  CellBoxList list = detail::make_cell_list(g.dims(), cell_size);
  for (CellBox& c : list.cells) {
    const Vec3i lo = c.cell * cell_size;
    c.box = shrink_to_occupied(g, {lo, min(lo + Vec3i{cell_size, cell_size, cell_size}, g.dims())});
  }
  detail::sort_cells(list);
  return list;
}

/// Bin boundaries of `box` on one axis, snapped to the cell raster, strictly
/// inside the box, ascending and unique.
inline std::vector<int> binned_candidates(const Aabb& box, int axis, int bins, int cell_size) {
  std::vector<int> out;
  const int lo = box.lo[axis], hi = box.hi[axis];
  for (int k = 1; k < bins; ++k) {
    const double raw = lo + double(hi - lo) * k / bins;
    const int p = int(std::lround(raw / cell_size)) * cell_size;
    if (p > lo && p < hi && (out.empty() || out.back() != p)) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Binned counterpart of sweep_best_plane: same cost and acceptance rule,
/// but only bin boundaries on the macro-cell raster are considered.
inline std::optional<SplitPlane> binned_best_plane(const CellBoxList& cells, const Aabb& box, int bins) {
  if (bins < 2) throw RangeError("bins must be >= 2");
  const auto tight = cells.region_box(box);
  if (!tight) return std::nullopt;
  const std::int64_t threshold = tight->volume();

  std::optional<SplitPlane> best;
  for (int axis = 0; axis < 3; ++axis) {
    for (int p : binned_candidates(box, axis, bins, cells.cell_size)) {
      Aabb l = box, r = box;
      l.hi[axis] = p;
      r.lo[axis] = p;
      auto lb = cells.region_box(l);
      auto rb = cells.region_box(r);
      const std::int64_t cost = volume_of(lb) + volume_of(rb);
      if (!best || cost < best->cost) best = SplitPlane{axis, p, cost, lb, rb};
    }
  }
  if (best && best->cost < threshold) return best;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Top-down builder

namespace detail {

template <typename Oracle>
class KdBuild {
 public:
  KdBuild(const Oracle& oracle, const BuildParams& params, KdTree& tree)
      : oracle_(oracle), params_(params), tree_(tree) {}

  void run(const Aabb& root) {
    root_volume_ = root.volume();
    build(root);
  }

 private:
  bool halts(const Aabb& box) const {
    if (params_.mode == KdMode::shallow) return double(box.volume()) <= params_.shallow_fraction * double(root_volume_);
    return box.volume() <= params_.deep_leaf_volume;
  }

  bool too_large(const Aabb& box) const {
    if (params_.mode != KdMode::deep || params_.max_leaf_size <= 0) return false;
    const Vec3i e = box.extent();
    return e.x > params_.max_leaf_size || e.y > params_.max_leaf_size || e.z > params_.max_leaf_size;
  }

  int build(const Aabb& box) {
    const int id = int(tree_.nodes.size());
    tree_.nodes.push_back({box});

    std::optional<SplitPlane> plane;
    if (!halts(box)) plane = oracle_.best_plane(box);
    if (!plane && too_large(box)) plane = oracle_.middle_split(box);
    if (!plane) return id;

    tree_.nodes[std::size_t(id)].axis = plane->axis;
    tree_.nodes[std::size_t(id)].split = plane->position;
    const int left = plane->left ? build(*plane->left) : -1;
    const int right = plane->right ? build(*plane->right) : -1;
    tree_.nodes[std::size_t(id)].child[0] = left;
    tree_.nodes[std::size_t(id)].child[1] = right;
    return id;
  }

  const Oracle& oracle_;
  const BuildParams& params_;
  KdTree& tree_;
  std::int64_t root_volume_ = 0;
};

struct SweepOracle {
  const SvtGrid& g;

  std::optional<SplitPlane> best_plane(const Aabb& box) const { return sweep_best_plane(g, box); }

  std::optional<SplitPlane> middle_split(const Aabb& box) const {
    const int axis = largest_axis(box.extent());
    const int p = box.lo[axis] + box.extent()[axis] / 2;
    return split_at(box, axis, p);
  }

  std::optional<SplitPlane> split_at(const Aabb& box, int axis, int p) const {
    if (p <= box.lo[axis] || p >= box.hi[axis]) return std::nullopt;
    Aabb l = box, r = box;
    l.hi[axis] = p;
    r.lo[axis] = p;
    SplitPlane s{axis, p, 0, shrink_to_occupied(g, l), shrink_to_occupied(g, r)};
    s.cost = volume_of(s.left) + volume_of(s.right);
    return s;
  }
};

struct BinnedOracle {
  const CellBoxList& cells;
  int bins;

  std::optional<SplitPlane> best_plane(const Aabb& box) const { return binned_best_plane(cells, box, bins); }

  std::optional<SplitPlane> middle_split(const Aabb& box) const {
    const int axis = largest_axis(box.extent());
    const int cs = cells.cell_size;
    const int lo = box.lo[axis], hi = box.hi[axis];
    const int mid = (lo + hi) / 2;
    int p = int(std::lround(double(mid) / cs)) * cs;
    if (p <= lo) p += cs;
    if (p >= hi) p -= cs;
    if (p <= lo || p >= hi) return std::nullopt;
    Aabb l = box, r = box;
    l.hi[axis] = p;
    r.lo[axis] = p;
    SplitPlane s{axis, p, 0, cells.region_box(l), cells.region_box(r)};
    s.cost = volume_of(s.left) + volume_of(s.right);
    return s;
  }
};

}  // namespace detail

/// Top-down k-d tree over the visible voxels, sweep builder.
///
/// Nodes hold tight boxes. A node becomes a leaf when it meets the halting
/// criterion of its mode or when no plane strictly lowers the cost; in deep
/// mode with a maximum leaf size, an oversized leaf is instead split at the
/// middle of its largest axis.
inline KdTree build_kdtree(const SvtGrid& g, const BuildParams& params) {
  if (params.builder == KdBuilder::binned) {
    const CellBoxList cells = precompute_cell_boxes(g, params.cell_size);
    KdTree tree;
    tree.dims = g.dims();
    if (params.bins < 2) throw RangeError("bins must be >= 2");
    const auto root = cells.region_box(g.bounds());
    if (!root) return tree;
    detail::BinnedOracle oracle{cells, params.bins};
    detail::KdBuild<detail::BinnedOracle>(oracle, params, tree).run(*root);
    return tree;
  }
  KdTree tree;
  tree.dims = g.dims();
  const auto root = shrink_to_occupied(g, g.bounds());
  if (!root) return tree;
  detail::SweepOracle oracle{g};
  detail::KdBuild<detail::SweepOracle>(oracle, params, tree).run(*root);
  return tree;
}

/// Binned builder over precomputed macro-cell boxes.
inline KdTree build_kdtree(const CellBoxList& cells, const BuildParams& params) {
  if (params.bins < 2) throw RangeError("bins must be >= 2");
  KdTree tree;
  tree.dims = cells.dims;
  const auto root = cells.region_box({{0, 0, 0}, cells.dims});
  if (!root) return tree;
  detail::BinnedOracle oracle{cells, params.bins};
  detail::KdBuild<detail::BinnedOracle>(oracle, params, tree).run(*root);
  return tree;
}

}  // namespace voxelskip
