#pragma once

#include <voxelskip/kdtree.hpp>
#include <voxelskip/svt.hpp>

namespace voxelskip {

/// Shallow k-d tree plus a global occupancy grid of 16^3 macro cells.
struct HybridGrid {
  KdTree tree;
  MacroGrid grid;
};

inline constexpr int kHybridCellSize = 16;

inline HybridGrid build_hybrid(const SvtGrid& g, int cell_size = kHybridCellSize) {
  BuildParams params;
  params.mode = KdMode::shallow;
  return {build_kdtree(g, params), derive_macro_grid(g, cell_size)};
}

}  // namespace voxelskip
