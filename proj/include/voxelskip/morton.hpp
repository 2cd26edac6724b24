#pragma once

#include <voxelskip/math.hpp>

#include <cstdint>

namespace voxelskip {

namespace detail {
// Spreads the low 10 bits of v so that bit i lands at bit 3i.
constexpr std::uint32_t spread_bits(std::uint32_t v) {
  v &= 0x3ffu;
  v = (v | (v << 16)) & 0x030000ffu;
  v = (v | (v << 8)) & 0x0300f00fu;
  v = (v | (v << 4)) & 0x030c30c3u;
  v = (v | (v << 2)) & 0x09249249u;
  return v;
}
constexpr std::uint32_t compact_bits(std::uint32_t v) {
  v &= 0x09249249u;
  v = (v | (v >> 2)) & 0x030c30c3u;
  v = (v | (v >> 4)) & 0x0300f00fu;
  v = (v | (v >> 8)) & 0x030000ffu;
  v = (v | (v >> 16)) & 0x000003ffu;
  return v;
}
}  // namespace detail

inline constexpr int kMortonAxisLimit = 1024;

/// 30-bit Morton code: bit i of x goes to bit 3i, y to 3i+1, z to 3i+2.
inline std::uint32_t morton_encode(int x, int y, int z) {
  if (x < 0 || y < 0 || z < 0 || x >= kMortonAxisLimit || y >= kMortonAxisLimit || z >= kMortonAxisLimit)
    throw RangeError("morton coordinates must be in [0,1024)");
  return detail::spread_bits(std::uint32_t(x)) | (detail::spread_bits(std::uint32_t(y)) << 1) |
         (detail::spread_bits(std::uint32_t(z)) << 2);
}
inline std::uint32_t morton_encode(Vec3i p) { return morton_encode(p.x, p.y, p.z); }

constexpr Vec3i morton_decode(std::uint32_t code) {
  return {int(detail::compact_bits(code)), int(detail::compact_bits(code >> 1)), int(detail::compact_bits(code >> 2))};
}

}  // namespace voxelskip
