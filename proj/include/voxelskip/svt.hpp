#pragma once

#include <voxelskip/math.hpp>
#include <voxelskip/parallel.hpp>
#include <voxelskip/volume.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace voxelskip {

/// Per-brick summed volume tables over a binary classification.
///
/// Each brick owns a (brick_size+1)^3 table of 32-bit prefix counts with a
/// zero border at index 0 on every axis, so entry (i,j,k) is the number of set
/// flags in the brick-local box [0,i)x[0,j)x[0,k). Partial bricks at the
/// volume border are padded with unset flags. Bricks without set flags store
/// no table and read as zero.
class SvtGrid {
 public:
  SvtGrid() = default;

  SvtGrid(const BinaryVolume& b, int brick_size) : brick_size_(brick_size), dims_(b.dims) {
    if (brick_size < 2) throw RangeError("brick size must be >= 2");
    bricks_dims_ = ceil_div(dims_, brick_size);
    const int side = brick_size + 1;
    table_stride_ = std::size_t(side) * std::size_t(side) * std::size_t(side);

    // Only bricks holding at least one set flag get a table.
    slots_.assign(std::size_t(bricks_dims_.product()), kEmpty);
    for (int z = 0; z < dims_.z; ++z) {
      const std::size_t bz = std::size_t(z / brick_size) * std::size_t(bricks_dims_.y);
      for (int y = 0; y < dims_.y; ++y) {
        const std::size_t row = (bz + std::size_t(y / brick_size)) * std::size_t(bricks_dims_.x);
        const std::uint8_t* flags = b.bits.data() + b.index(0, y, z);
        for (int x0 = 0; x0 < dims_.x; x0 += brick_size) {
          std::int64_t& slot = slots_[row + std::size_t(x0 / brick_size)];
          if (slot != kEmpty) continue;
          const int x1 = std::min(x0 + brick_size, dims_.x);
          if (std::any_of(flags + x0, flags + x1, [](std::uint8_t f) { return f != 0; })) slot = 0;
        }
      }
    }
    std::vector<std::int64_t> occupied;
    for (std::size_t i = 0; i < slots_.size(); ++i)
      if (slots_[i] != kEmpty) {
        slots_[i] = std::int64_t(occupied.size());
        occupied.push_back(std::int64_t(i));
      }
    tables_.assign(table_stride_ * occupied.size(), 0u);

    parallel_for_chunks(std::int64_t(occupied.size()), [&](std::int64_t first, std::int64_t last) {
      for (std::int64_t n = first; n < last; ++n) build_brick(b, occupied[std::size_t(n)]);
    });
  }

  int brick_size() const { return brick_size_; }
  Vec3i dims() const { return dims_; }
  Vec3i bricks_dims() const { return bricks_dims_; }
  Aabb bounds() const { return {{0, 0, 0}, dims_}; }

  /// Table entry of brick `brick` at corner (i,j,k), each in [0, brick_size].
  std::uint32_t table(Vec3i brick, int i, int j, int k) const {
    const std::int64_t slot = slots_[brick_index(brick)];
    return slot == kEmpty ? 0u : tables_[std::size_t(slot) * table_stride_ + corner(i, j, k)];
  }

  /// Number of bricks that hold a table; the others are empty.
  std::size_t stored_bricks() const { return table_stride_ ? tables_.size() / table_stride_ : 0; }

  /// Exact number of set flags inside `box` (clipped to the volume).
  std::int64_t box_count(const Aabb& query) const {
    const Aabb box = box_intersection(query, bounds());
    if (box.degenerate()) return 0;
    const int bs = brick_size_;
    const Vec3i b0{box.lo.x / bs, box.lo.y / bs, box.lo.z / bs};
    const Vec3i b1{(box.hi.x - 1) / bs, (box.hi.y - 1) / bs, (box.hi.z - 1) / bs};
    std::int64_t total = 0;
    for (int bz = b0.z; bz <= b1.z; ++bz) {
      const int oz = bz * bs;
      const int z0 = std::max(box.lo.z - oz, 0), z1 = std::min(box.hi.z - oz, bs);
      for (int by = b0.y; by <= b1.y; ++by) {
        const int oy = by * bs;
        const int y0 = std::max(box.lo.y - oy, 0), y1 = std::min(box.hi.y - oy, bs);
        for (int bx = b0.x; bx <= b1.x; ++bx) {
          const std::int64_t slot = slots_[brick_index({bx, by, bz})];
          if (slot == kEmpty) continue;
          const int ox = bx * bs;
          const int x0 = std::max(box.lo.x - ox, 0), x1 = std::min(box.hi.x - ox, bs);
          const std::uint32_t* t = tables_.data() + std::size_t(slot) * table_stride_;
          const std::int64_t v = std::int64_t(t[corner(x1, y1, z1)]) - t[corner(x0, y1, z1)] -
                                 t[corner(x1, y0, z1)] - t[corner(x1, y1, z0)] + t[corner(x0, y0, z1)] +
                                 t[corner(x0, y1, z0)] + t[corner(x1, y0, z0)] - t[corner(x0, y0, z0)];
          total += v;
        }
      }
    }
    return total;
  }

 private:
  std::size_t corner(int i, int j, int k) const {
    const std::size_t side = std::size_t(brick_size_) + 1;
    return (std::size_t(k) * side + std::size_t(j)) * side + std::size_t(i);
  }
  std::size_t brick_index(Vec3i b) const {
    return (std::size_t(b.z) * std::size_t(bricks_dims_.y) + std::size_t(b.y)) * std::size_t(bricks_dims_.x) + std::size_t(b.x);
  }

  // Separable prefix sums: rows along x, then accumulate along y and z.
  void build_brick(const BinaryVolume& b, std::int64_t linear) {
    const int bs = brick_size_;
    const Vec3i brick{int(linear % bricks_dims_.x), int((linear / bricks_dims_.x) % bricks_dims_.y),
                      int(linear / (std::int64_t(bricks_dims_.x) * bricks_dims_.y))};
    const Vec3i origin = brick * bs;
    const Vec3i hi = min(origin + Vec3i{bs, bs, bs}, dims_);
    const int nx = hi.x - origin.x;
    std::uint32_t* t = tables_.data() + std::size_t(slots_[std::size_t(linear)]) * table_stride_;

    for (int z = origin.z; z < hi.z; ++z)
      for (int y = origin.y; y < hi.y; ++y) {
        const std::uint8_t* flags = b.bits.data() + b.index(origin.x, y, z);
        std::uint32_t* row = t + corner(0, y - origin.y + 1, z - origin.z + 1);
        std::uint32_t run = 0;
        for (int i = 0; i < nx; ++i) {
          run += flags[i];
          row[i + 1] = run;
        }
        for (int i = nx; i < bs; ++i) row[i + 1] = run;
      }

    const std::size_t side = std::size_t(bs) + 1;
    for (int k = 1; k <= bs; ++k)
      for (int j = 2; j <= bs; ++j) {
        std::uint32_t* row = t + corner(0, j, k);
        const std::uint32_t* prev = row - side;
        for (std::size_t i = 1; i < side; ++i) row[i] += prev[i];
      }
    for (int k = 2; k <= bs; ++k)
      for (int j = 1; j <= bs; ++j) {
        std::uint32_t* row = t + corner(0, j, k);
        const std::uint32_t* prev = row - side * side;
        for (std::size_t i = 1; i < side; ++i) row[i] += prev[i];
      }
  }

  int brick_size_ = 32;
  Vec3i dims_{};
  Vec3i bricks_dims_{};
  std::size_t table_stride_ = 0;
  static constexpr std::int64_t kEmpty = -1;
  std::vector<std::int64_t> slots_;  // per brick: table slot, or kEmpty
  std::vector<std::uint32_t> tables_;
};

inline SvtGrid build_svt_grid(const BinaryVolume& b, int brick_size = 32) { return SvtGrid(b, brick_size); }

inline std::int64_t box_count(const SvtGrid& g, const Aabb& box) { return g.box_count(box); }

/// Minimal box around all set flags inside `box`, or nullopt when there are none.
///
/// Each side moves inward by binary search over plane positions; a candidate
/// position is accepted when the shrunk box keeps the parent's count.
inline std::optional<Aabb> shrink_to_occupied(const SvtGrid& g, const Aabb& query) {
  Aabb box = box_intersection(query, g.bounds());
  const std::int64_t total = g.box_count(box);
  if (total == 0) return std::nullopt;

  for (int axis = 0; axis < 3; ++axis) {
    // Largest lo such that [lo, hi) still holds everything.
    int a = box.lo[axis], b = box.hi[axis] - 1;
    while (a < b) {
      const int mid = a + (b - a + 1) / 2;
      Aabb t = box;
      t.lo[axis] = mid;
      if (g.box_count(t) == total)
        a = mid;
      else
        b = mid - 1;
    }
    box.lo[axis] = a;

    // Smallest hi such that [lo, hi) still holds everything.
    a = box.lo[axis] + 1;
    b = box.hi[axis];
    while (a < b) {
      const int mid = a + (b - a) / 2;
      Aabb t = box;
      t.hi[axis] = mid;
      if (g.box_count(t) == total)
        b = mid;
      else
        a = mid + 1;
    }
    box.hi[axis] = a;
  }
  return box;
}

/// Coarse occupancy grid: one flag per cell_size^3 block of voxels.
struct MacroGrid {
  int cell_size = 16;
  Vec3i dims;        // voxel dims covered
  Vec3i cells_dims;  // ceil(dims / cell_size)
  std::vector<std::uint8_t> occupied;

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * std::size_t(cells_dims.y) + std::size_t(y)) * std::size_t(cells_dims.x) + std::size_t(x);
  }
  bool at(int x, int y, int z) const { return occupied[index(x, y, z)] != 0; }
  bool at(Vec3i c) const { return at(c.x, c.y, c.z); }

  /// Voxel box of cell c, clipped to the volume.
  Aabb cell_box(Vec3i c) const {
    const Vec3i lo = c * cell_size;
    return {lo, min(lo + Vec3i{cell_size, cell_size, cell_size}, dims)};
  }
  std::size_t storage_bytes() const { return occupied.size() * sizeof(std::uint8_t); }
};

inline MacroGrid derive_macro_grid(const SvtGrid& g, int cell_size) {
  if (cell_size < 2) throw RangeError("cell size must be >= 2");
  MacroGrid m;
  m.cell_size = cell_size;
  m.dims = g.dims();
  m.cells_dims = ceil_div(g.dims(), cell_size);
  m.occupied.assign(std::size_t(m.cells_dims.product()), 0);
  for (int z = 0; z < m.cells_dims.z; ++z)
    for (int y = 0; y < m.cells_dims.y; ++y)
      for (int x = 0; x < m.cells_dims.x; ++x)
        m.occupied[m.index(x, y, z)] = g.box_count(m.cell_box({x, y, z})) > 0 ? 1 : 0;
  return m;
}

inline MacroGrid derive_macro_grid(const BinaryVolume& b, int cell_size) {
  if (cell_size < 2) throw RangeError("cell size must be >= 2");
  MacroGrid m;
  m.cell_size = cell_size;
  m.dims = b.dims;
  m.cells_dims = ceil_div(b.dims, cell_size);
  m.occupied.assign(std::size_t(m.cells_dims.product()), 0);
  for (int z = 0; z < b.dims.z; ++z)
    for (int y = 0; y < b.dims.y; ++y)
      for (int x = 0; x < b.dims.x; ++x)
        if (b.at(x, y, z)) m.occupied[m.index(x / cell_size, y / cell_size, z / cell_size)] = 1;
  return m;
}

}  // namespace voxelskip
