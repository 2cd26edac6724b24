#include "test_support.hpp"

#include <voxelskip/hybrid.hpp>

#include <gtest/gtest.h>

using namespace voxelskip;
using namespace voxelskip::testing;

TEST(Hybrid, ShallowTreePlusGrid) {
  const BinaryVolume b = random_clustered({64, 64, 64}, 17, 5, 0.0001);
  const SvtGrid g(b, 32);
  const HybridGrid h = build_hybrid(g);
  BuildParams shallow;
  shallow.mode = KdMode::shallow;
  EXPECT_EQ(h.tree.nodes, build_kdtree(g, shallow).nodes);
  EXPECT_EQ(h.grid.cell_size, 16);
  EXPECT_EQ(h.grid.cells_dims, (Vec3i{4, 4, 4}));
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) ASSERT_EQ(h.grid.at(x, y, z), brute_count(b, h.grid.cell_box({x, y, z})) > 0);
  EXPECT_LE(h.tree.stats().node_count, build_kdtree(g, BuildParams{}).stats().node_count);
}

TEST(Hybrid, EmptyVolume) {
  const HybridGrid h = build_hybrid(SvtGrid(BinaryVolume({40, 40, 40}), 32));
  EXPECT_TRUE(h.tree.empty());
  EXPECT_EQ(h.grid.cells_dims, (Vec3i{3, 3, 3}));
  for (auto f : h.grid.occupied) EXPECT_EQ(f, 0);
}

TEST(Hybrid, GridCellsUnderEveryVisibleVoxel) {
  const BinaryVolume b = random_binary({50, 37, 45}, 0.0008, 4);
  const HybridGrid h = build_hybrid(SvtGrid(b, 16), 8);
  for (int z = 0; z < b.dims.z; ++z)
    for (int y = 0; y < b.dims.y; ++y)
      for (int x = 0; x < b.dims.x; ++x)
        if (b.at(x, y, z)) {
          ASSERT_TRUE(h.grid.at(x / 8, y / 8, z / 8));
        }
}
