#include "test_support.hpp"

#include <voxelskip/lbvh.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <tuple>

using namespace voxelskip;
using namespace voxelskip::testing;

namespace {

// Reference bit-interleave: one bit at a time, no magic masks.
std::uint32_t morton_reference(int x, int y, int z) {
  std::uint32_t code = 0;
  for (int i = 0; i < 10; ++i) {
    code |= std::uint32_t((x >> i) & 1) << (3 * i);
    code |= std::uint32_t((y >> i) & 1) << (3 * i + 1);
    code |= std::uint32_t((z >> i) & 1) << (3 * i + 2);
  }
  return code;
}

using Range = std::tuple<int, int, int>;  // first leaf, last leaf, split

// Top-down middle split on the sorted keys: split where the highest
// differing bit of the range flips.
void reference_ranges(const std::vector<std::uint64_t>& keys, int first, int last, std::set<Range>& out) {
  if (first == last) return;
  int bit = 63;
  while (((keys[std::size_t(first)] >> bit) & 1) == ((keys[std::size_t(last)] >> bit) & 1)) --bit;
  int split = first;
  while (((keys[std::size_t(split + 1)] >> bit) & 1) == 0) ++split;
  out.insert({first, last, split});
  reference_ranges(keys, first, split, out);
  reference_ranges(keys, split + 1, last, out);
}

struct Walk {
  std::set<Range> ranges;
  std::vector<int> visits;
  int leaves = 0;
};

// Returns the leaf range of `id`, checking box unions on the way.
std::pair<int, int> walk(const Lbvh& bvh, int id, Walk& w) {
  w.visits[std::size_t(id)]++;
  const LbvhNode& n = bvh.nodes[std::size_t(id)];
  if (n.is_leaf()) {
    ++w.leaves;
    const BrickSet geometry{bvh.brick_size, bvh.dims, {}};
    EXPECT_EQ(n.box, geometry.brick_box(bvh.bricks[std::size_t(n.brick)].coord));
    return {n.brick, n.brick};
  }
  const auto l = walk(bvh, n.left, w);
  const auto r = walk(bvh, n.right, w);
  EXPECT_EQ(l.second + 1, r.first);
  EXPECT_EQ(n.box, box_union(bvh.nodes[std::size_t(n.left)].box, bvh.nodes[std::size_t(n.right)].box));
  w.ranges.insert({l.first, r.second, l.second});
  return {l.first, r.second};
}

}  // namespace

TEST(Morton, KnownCodes) {
  EXPECT_EQ(morton_encode(0, 0, 0), 0u);
  EXPECT_EQ(morton_encode(1, 1, 1), 7u);
  EXPECT_EQ(morton_encode(3, 0, 0), 9u);
  EXPECT_EQ(morton_encode(0, 1, 0), 2u);
  EXPECT_EQ(morton_encode(1023, 1023, 1023), (1u << 30) - 1);
  EXPECT_THROW(morton_encode(1024, 0, 0), RangeError);
  EXPECT_THROW(morton_encode(0, -1, 0), RangeError);
}

TEST(Morton, MatchesReferenceAndRoundTrips) {
  std::mt19937 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const int x = int(rng() % 1024), y = int(rng() % 1024), z = int(rng() % 1024);
    const std::uint32_t code = morton_encode(x, y, z);
    ASSERT_EQ(code, morton_reference(x, y, z));
    ASSERT_EQ(morton_decode(code), (Vec3i{x, y, z}));
  }
}

TEST(FlagBricks, Basics) {
  EXPECT_TRUE(flag_bricks(BinaryVolume({16, 16, 16}), 8).empty());
  const BrickSet all = flag_bricks(BinaryVolume({16, 16, 16}, true), 8);
  EXPECT_EQ(all.size(), 8u);
  EXPECT_THROW(flag_bricks(BinaryVolume({8200, 1, 1}), 8), RangeError);
}

TEST(FlagBricks, MatchesPerBrickScan) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BinaryVolume b = random_binary({64, 60, 70}, 0.0003, seed);
    const BrickSet set = flag_bricks(b, 8);
    std::set<std::tuple<int, int, int>> got, want;
    for (const auto& e : set.entries) {
      got.insert({e.coord.x, e.coord.y, e.coord.z});
      EXPECT_EQ(e.morton, morton_reference(e.coord.x, e.coord.y, e.coord.z));
    }
    for (int z = 0; z < 9; ++z)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          if (brute_count(b, {{x * 8, y * 8, z * 8}, {x * 8 + 8, y * 8 + 8, z * 8 + 8}}) > 0) want.insert({x, y, z});
    EXPECT_EQ(got, want);
  }
}

TEST(BuildLbvh, EmptyAndSingle) {
  EXPECT_TRUE(build_lbvh(flag_bricks(BinaryVolume({16, 16, 16}), 8)).empty());

  BinaryVolume b({20, 20, 20});
  b.set(17, 3, 9);
  const Lbvh one = build_lbvh(flag_bricks(b, 8));
  ASSERT_EQ(one.nodes.size(), 1u);
  EXPECT_TRUE(one.nodes[0].is_leaf());
  EXPECT_EQ(one.nodes[0].box, (Aabb{{16, 0, 8}, {20, 8, 16}}));  // clipped to dims
}

TEST(BuildLbvh, FourBricksPerfectTree) {
  BrickSet set;
  set.brick_size = 8;
  set.dims = {16, 16, 8};
  // Deliberately unsorted input; codes 3, 0, 2, 1.
  for (Vec3i c : {Vec3i{1, 1, 0}, Vec3i{0, 0, 0}, Vec3i{0, 1, 0}, Vec3i{1, 0, 0}}) set.entries.push_back({c, morton_encode(c)});
  const Lbvh bvh = build_lbvh(set);
  ASSERT_EQ(bvh.nodes.size(), 7u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(bvh.bricks[std::size_t(i)].morton, std::uint32_t(i));

  Walk w;
  w.visits.assign(bvh.nodes.size(), 0);
  walk(bvh, bvh.root(), w);
  const std::set<Range> want{{0, 3, 1}, {0, 1, 0}, {2, 3, 2}};
  EXPECT_EQ(w.ranges, want);
  EXPECT_EQ(bvh.nodes[0].box, (Aabb{{0, 0, 0}, {16, 16, 8}}));
}

TEST(BuildLbvh, RandomSetsMatchReferenceHierarchy) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BinaryVolume b = random_clustered({64 + int(seed), 48, 80}, seed, 3, 0.0002);
    const BrickSet set = flag_bricks(b, 8);
    const Lbvh bvh = build_lbvh(set);
    const int n = int(set.size());
    ASSERT_GT(n, 0);
    ASSERT_EQ(int(bvh.nodes.size()), 2 * n - 1);

    Walk w;
    w.visits.assign(bvh.nodes.size(), 0);
    walk(bvh, bvh.root(), w);
    EXPECT_EQ(w.leaves, n);
    for (int v : w.visits) ASSERT_EQ(v, 1);

    std::vector<std::uint64_t> keys;
    for (const auto& e : bvh.bricks) keys.push_back(std::uint64_t(e.morton) << 32);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i > 0) {
        ASSERT_LE(bvh.bricks[i - 1].morton, bvh.bricks[i].morton);
      }
      keys[i] |= i;  // unique codes here, the low word only mirrors the tie-break
    }
    std::set<Range> want;
    reference_ranges(keys, 0, n - 1, want);
    EXPECT_EQ(w.ranges, want);

    // Root box equals the union of all flagged brick boxes.
    std::optional<Aabb> all;
    for (const auto& e : set.entries) all = box_union(all, set.brick_box(e.coord));
    EXPECT_EQ(bvh.nodes[0].box, *all);

    const Lbvh again = build_lbvh(set);
    EXPECT_EQ(again.nodes, bvh.nodes);
  }
}

TEST(BuildLbvh, DuplicateCodesAreTieBroken) {
  BrickSet set;
  set.brick_size = 8;
  set.dims = {32, 32, 32};
  for (Vec3i c : {Vec3i{1, 0, 0}, Vec3i{1, 0, 0}, Vec3i{0, 0, 0}, Vec3i{1, 0, 0}}) set.entries.push_back({c, morton_encode(c)});
  const Lbvh bvh = build_lbvh(set);
  ASSERT_EQ(bvh.nodes.size(), 7u);
  Walk w;
  w.visits.assign(bvh.nodes.size(), 0);
  walk(bvh, 0, w);
  EXPECT_EQ(w.leaves, 4);
  EXPECT_EQ(bvh.nodes[0].box, (Aabb{{0, 0, 0}, {16, 8, 8}}));
}
