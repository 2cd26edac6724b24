#pragma once

#include <voxelskip/math.hpp>
#include <voxelskip/parallel.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace voxelskip {

/// Dense scalar field, x-fastest, values normalized to [0,1].
class Volume {
 public:
  Volume() = default;

  explicit Volume(Vec3i dims, float fill = 0.0f) : dims_(dims) {
    check_dims(dims);
    voxels_.assign(static_cast<std::size_t>(dims.product()), fill);
  }

  Volume(Vec3i dims, std::vector<float> voxels) : dims_(dims), voxels_(std::move(voxels)) {
    check_dims(dims);
    if (std::int64_t(voxels_.size()) != dims.product())
      throw FormatError("voxel count does not match dims");
    for (float& v : voxels_) v = std::clamp(v, 0.0f, 1.0f);
  }

  Vec3i dims() const { return dims_; }
  std::size_t size() const { return voxels_.size(); }
  std::span<const float> voxels() const { return voxels_; }
  std::span<float> voxels() { return voxels_; }

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * std::size_t(dims_.y) + std::size_t(y)) * std::size_t(dims_.x) + std::size_t(x);
  }
  float at(int x, int y, int z) const { return voxels_[index(x, y, z)]; }
  float& at(int x, int y, int z) { return voxels_[index(x, y, z)]; }
  Aabb bounds() const { return {{0, 0, 0}, dims_}; }

 private:
  static void check_dims(Vec3i d) {
    if (d.x < 1 || d.y < 1 || d.z < 1) throw FormatError("volume dims must be >= 1 on every axis");
  }

  Vec3i dims_{};
  std::vector<float> voxels_;
};

struct Rgba {
  float r = 0, g = 0, b = 0, a = 0;
  friend constexpr bool operator==(const Rgba&, const Rgba&) = default;
};

/// Scalar to LUT index: floor(value * 255 + 0.5), clamped to [0,255].
inline int quantize(float value) {
  const int i = static_cast<int>(std::floor(value * 255.0f + 0.5f));
  return std::clamp(i, 0, 255);
}

/// 256-entry RGBA lookup table.
class TransferFunction {
 public:
  static constexpr int kSize = 256;
  using Lut = std::array<Rgba, kSize>;

  TransferFunction() = default;
  explicit TransferFunction(const Lut& lut) : lut_(lut) {
    for (Rgba& e : lut_) {
      e.r = std::clamp(e.r, 0.0f, 1.0f);
      e.g = std::clamp(e.g, 0.0f, 1.0f);
      e.b = std::clamp(e.b, 0.0f, 1.0f);
      e.a = std::clamp(e.a, 0.0f, 1.0f);
    }
  }

  static TransferFunction constant(Rgba c) {
    Lut lut;
    lut.fill(c);
    return TransferFunction(lut);
  }

  /// White, fully opaque for every nonzero scalar; entry 0 is transparent so
  /// that empty space in the data stays empty.
  static TransferFunction opaque() {
    Lut lut;
    lut.fill({1, 1, 1, 1});
    lut[0] = {0, 0, 0, 0};
    return TransferFunction(lut);
  }

  /// Transparent below `threshold`, then a linear alpha ramp up to
  /// `max_alpha` with a blue-to-orange color gradient.
  static TransferFunction ramp(float threshold, float max_alpha = 0.5f) {
    Lut lut;
    const int first = std::clamp(quantize(threshold), 1, 255);
    for (int i = 0; i < kSize; ++i) {
      const float t = float(i) / 255.0f;
      if (i < first) {
        lut[i] = {t, t, t, 0};
        continue;
      }
      const float u = first == 255 ? 1.0f : float(i - first) / float(255 - first);
      lut[i] = {0.2f + 0.8f * u, 0.4f + 0.2f * u, 1.0f - 0.8f * u, max_alpha * (0.1f + 0.9f * u)};
    }
    return TransferFunction(lut);
  }

  const Rgba& operator[](int i) const { return lut_[std::size_t(i)]; }
  const Rgba& lookup(float value) const { return lut_[std::size_t(quantize(value))]; }
  const Lut& lut() const { return lut_; }

  friend bool operator==(const TransferFunction&, const TransferFunction&) = default;

 private:
  Lut lut_{};
};

/// One visibility flag per voxel.
struct BinaryVolume {
  Vec3i dims;
  std::vector<std::uint8_t> bits;

  BinaryVolume() = default;
  explicit BinaryVolume(Vec3i d, bool fill = false)
      : dims(d), bits(static_cast<std::size_t>(d.product()), fill ? 1 : 0) {}

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * std::size_t(dims.y) + std::size_t(y)) * std::size_t(dims.x) + std::size_t(x);
  }
  bool at(int x, int y, int z) const { return bits[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool v = true) { bits[index(x, y, z)] = v ? 1 : 0; }
  Aabb bounds() const { return {{0, 0, 0}, dims}; }
};

// ---------------------------------------------------------------------------
// Raw files

enum class Endian { little, big };

struct RawMeta {
  Vec3i dims;
  int bits_per_voxel = 8;
  Endian endian = Endian::little;
};

inline nlohmann::json to_json(const RawMeta& m) {
  return {{"dims", {m.dims.x, m.dims.y, m.dims.z}},
          {"bits", m.bits_per_voxel},
          {"endian", m.endian == Endian::little ? "little" : "big"}};
}

inline RawMeta raw_meta_from_json(const nlohmann::json& j) {
  try {
    RawMeta m;
    const auto& d = j.at("dims");
    if (!d.is_array() || d.size() != 3) throw FormatError("sidecar 'dims' must have 3 entries");
    m.dims = {d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
    m.bits_per_voxel = j.at("bits").get<int>();
    const std::string e = j.value("endian", std::string("little"));
    if (e == "little")
      m.endian = Endian::little;
    else if (e == "big")
      m.endian = Endian::big;
    else
      throw FormatError("sidecar 'endian' must be \"little\" or \"big\"");
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed raw sidecar: ") + ex.what());
  }
}

/// Sidecar path convention: volume.raw -> volume.json
inline std::filesystem::path sidecar_path(const std::filesystem::path& raw) {
  auto p = raw;
  p.replace_extension(".json");
  return p;
}

inline RawMeta read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open sidecar " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("cannot parse sidecar " + path.string() + ": " + ex.what());
  }
  return raw_meta_from_json(j);
}

inline void write_sidecar(const std::filesystem::path& path, const RawMeta& meta) {
  std::ofstream out(path);
  out << to_json(meta).dump(2) << '\n';
}

inline Volume load_raw(const std::filesystem::path& path, const RawMeta& meta) {
  if (meta.bits_per_voxel != 8 && meta.bits_per_voxel != 16)
    throw UnsupportedError("unsupported bit depth " + std::to_string(meta.bits_per_voxel));
  if (meta.dims.x < 1 || meta.dims.y < 1 || meta.dims.z < 1) throw FormatError("invalid dims");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const std::size_t bytes_per_voxel = std::size_t(meta.bits_per_voxel / 8);
  const std::size_t count = std::size_t(meta.dims.product());
  if (bytes.size() != count * bytes_per_voxel)
    throw FormatError("file size " + std::to_string(bytes.size()) + " does not match dims (expected " +
                      std::to_string(count * bytes_per_voxel) + ")");

  std::vector<float> voxels(count);
  if (bytes_per_voxel == 1) {
    for (std::size_t i = 0; i < count; ++i) voxels[i] = float(bytes[i]) / 255.0f;
  } else {
    const bool little = meta.endian == Endian::little;
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned b0 = bytes[2 * i], b1 = bytes[2 * i + 1];
      const unsigned v = little ? (b0 | (b1 << 8)) : ((b0 << 8) | b1);
      voxels[i] = float(v) / 65535.0f;
    }
  }
  return Volume(meta.dims, std::move(voxels));
}

/// Loads `path` using the JSON sidecar next to it.
inline Volume load_raw(const std::filesystem::path& path) { return load_raw(path, read_sidecar(sidecar_path(path))); }

inline void save_raw(const std::filesystem::path& path, const Volume& v, int bits_per_voxel = 8,
                     Endian endian = Endian::little, bool with_sidecar = true) {
  if (bits_per_voxel != 8 && bits_per_voxel != 16)
    throw UnsupportedError("unsupported bit depth " + std::to_string(bits_per_voxel));
  const float scale = bits_per_voxel == 8 ? 255.0f : 65535.0f;
  std::vector<unsigned char> bytes;
  bytes.reserve(v.size() * std::size_t(bits_per_voxel / 8));
  for (float f : v.voxels()) {
    const auto q = static_cast<unsigned>(std::lround(double(f) * scale));
    if (bits_per_voxel == 8) {
      bytes.push_back(static_cast<unsigned char>(q));
    } else if (endian == Endian::little) {
      bytes.push_back(static_cast<unsigned char>(q & 0xff));
      bytes.push_back(static_cast<unsigned char>(q >> 8));
    } else {
      bytes.push_back(static_cast<unsigned char>(q >> 8));
      bytes.push_back(static_cast<unsigned char>(q & 0xff));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (with_sidecar) write_sidecar(sidecar_path(path), {v.dims(), bits_per_voxel, endian});
}

// ---------------------------------------------------------------------------
// Transfer function files: {"rgba": [[r,g,b,a] x 256]}

inline TransferFunction tf_from_json(const nlohmann::json& j) {
  const auto it = j.find("rgba");
  if (it == j.end() || !it->is_array()) throw FormatError("transfer function needs an 'rgba' array");
  if (it->size() != TransferFunction::kSize)
    throw FormatError("transfer function must have exactly 256 entries, got " + std::to_string(it->size()));
  TransferFunction::Lut lut;
  for (std::size_t i = 0; i < lut.size(); ++i) {
    const auto& e = (*it)[i];
    if (!e.is_array() || e.size() != 4) throw FormatError("rgba entry " + std::to_string(i) + " must have 4 numbers");
    float c[4];
    for (std::size_t k = 0; k < 4; ++k) {
      if (!e[k].is_number()) throw FormatError("rgba entry " + std::to_string(i) + " is not numeric");
      c[k] = e[k].get<float>();
      if (!(c[k] >= 0.0f && c[k] <= 1.0f)) throw FormatError("rgba channel outside [0,1] at entry " + std::to_string(i));
    }
    lut[i] = {c[0], c[1], c[2], c[3]};
  }
  return TransferFunction(lut);
}

inline nlohmann::json to_json(const TransferFunction& tf) {
  nlohmann::json rgba = nlohmann::json::array();
  for (const Rgba& e : tf.lut()) rgba.push_back({e.r, e.g, e.b, e.a});
  return {{"rgba", std::move(rgba)}};
}

inline TransferFunction load_tf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open transfer function " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError("cannot parse transfer function " + path.string() + ": " + ex.what());
  }
  return tf_from_json(j);
}

// ---------------------------------------------------------------------------
// Procedural datasets

inline Volume gen_menger(int level) {
  if (level < 0 || level > 6) throw RangeError("menger level must be in [0,6]");
  int n = 1;
  for (int i = 0; i < level; ++i) n *= 3;
  Volume v({n, n, n});
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        bool solid = true;
        for (int a = x, b = y, c = z; a > 0 || b > 0 || c > 0; a /= 3, b /= 3, c /= 3) {
          if ((a % 3 == 1) + (b % 3 == 1) + (c % 3 == 1) >= 2) {
            solid = false;
            break;
          }
        }
        v.at(x, y, z) = solid ? 1.0f : 0.0f;
      }
  return v;
}

/// Spherical shell around `center` (voxel index coordinates).
inline Volume gen_shell(Vec3i dims, Vec3d center, double radius, double thickness) {
  if (!(thickness > 0)) throw RangeError("shell thickness must be > 0");
  Volume v(dims);
  const double half = thickness / 2;
  for (int z = 0; z < dims.z; ++z)
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x) {
        const double d = length(Vec3d{double(x), double(y), double(z)} - center);
        v.at(x, y, z) = std::abs(d - radius) <= half ? 1.0f : 0.0f;
      }
  return v;
}

/// Sum of isotropic Gaussian splats of unit peak, truncated at 3 sigma and
/// clamped to [0,1].
inline Volume splat_gaussians(Vec3i dims, std::span<const Vec3d> centers, double sigma) {
  std::vector<float> acc(static_cast<std::size_t>(dims.product()), 0.0f);
  const double radius = 3.0 * sigma;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  auto idx = [&](int x, int y, int z) {
    return (std::size_t(z) * std::size_t(dims.y) + std::size_t(y)) * std::size_t(dims.x) + std::size_t(x);
  };
  for (const Vec3d& c : centers) {
    const int x0 = std::max(0, int(std::ceil(c.x - radius))), x1 = std::min(dims.x - 1, int(std::floor(c.x + radius)));
    const int y0 = std::max(0, int(std::ceil(c.y - radius))), y1 = std::min(dims.y - 1, int(std::floor(c.y + radius)));
    const int z0 = std::max(0, int(std::ceil(c.z - radius))), z1 = std::min(dims.z - 1, int(std::floor(c.z + radius)));
    for (int z = z0; z <= z1; ++z)
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const Vec3d d = Vec3d{double(x), double(y), double(z)} - c;
          const double r2 = dot(d, d);
          if (r2 > radius * radius) continue;
          acc[idx(x, y, z)] += float(std::exp(-r2 * inv));
        }
  }
  return Volume(dims, std::move(acc));
}

/// Seeded Gaussian point clusters; identical output for identical arguments.
inline Volume gen_blobs(Vec3i dims, int n, std::uint64_t seed, double sigma = 1.5) {
  if (n < 1) throw RangeError("blob count must be >= 1");
  std::mt19937_64 rng(seed);
  // Explicit mapping instead of uniform_real_distribution keeps the output
  // identical across standard library implementations.
  auto unit = [&rng] { return double(rng() >> 11) * (1.0 / 9007199254740992.0); };
  std::vector<Vec3d> centers(static_cast<std::size_t>(n));
  for (Vec3d& c : centers) c = {unit() * (dims.x - 1), unit() * (dims.y - 1), unit() * (dims.z - 1)};
  return splat_gaussians(dims, centers, sigma);
}

// ---------------------------------------------------------------------------
// Classification

/// Visibility classification against a transfer function.
///
/// Without dilation a voxel is visible iff lut[quantize(value)].a > 0. With
/// dilation a voxel is visible iff some LUT entry between the minimum and the
/// maximum quantized scalar of its clamped 3x3x3 neighborhood has alpha > 0.
/// That is a superset of "some neighbor is visible" and bounds every value a
/// trilinear sample can take near the voxel, so skipping unflagged voxels
/// never removes a contributing sample.
inline BinaryVolume classify(const Volume& v, const TransferFunction& tf, bool dilate) {
  const Vec3i d = v.dims();
  BinaryVolume out(d);
  const auto src = v.voxels();

  std::array<int, TransferFunction::kSize + 1> visible_prefix{};
  for (int i = 0; i < TransferFunction::kSize; ++i) visible_prefix[i + 1] = visible_prefix[i] + (tf[i].a > 0.0f ? 1 : 0);

  if (!dilate) {
    parallel_for_chunks(std::int64_t(src.size()), [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i) out.bits[std::size_t(i)] = tf[quantize(src[std::size_t(i)])].a > 0.0f ? 1 : 0;
    }, 1 << 16);
    return out;
  }

  std::vector<std::uint8_t> lo(src.size()), hi(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) lo[i] = hi[i] = static_cast<std::uint8_t>(quantize(src[i]));

  // Separable 3-tap min/max filters along x, y, z with clamped borders.
  const std::size_t stride[3] = {1, std::size_t(d.x), std::size_t(d.x) * std::size_t(d.y)};
  std::vector<std::uint8_t> tlo(src.size()), thi(src.size());
  for (int axis = 0; axis < 3; ++axis) {
    const int n = d[axis];
    const std::size_t s = stride[axis];
    for (int z = 0; z < d.z; ++z)
      for (int y = 0; y < d.y; ++y)
        for (int x = 0; x < d.x; ++x) {
          const std::size_t i = v.index(x, y, z);
          const int c = axis == 0 ? x : (axis == 1 ? y : z);
          std::uint8_t mn = lo[i], mx = hi[i];
          if (c > 0) mn = std::min(mn, lo[i - s]), mx = std::max(mx, hi[i - s]);
          if (c + 1 < n) mn = std::min(mn, lo[i + s]), mx = std::max(mx, hi[i + s]);
          tlo[i] = mn;
          thi[i] = mx;
        }
    lo.swap(tlo);
    hi.swap(thi);
  }
  for (std::size_t i = 0; i < src.size(); ++i)
    out.bits[i] = visible_prefix[std::size_t(hi[i]) + 1] - visible_prefix[lo[i]] > 0 ? 1 : 0;
  return out;
}

inline std::int64_t count_set(const BinaryVolume& b) {
  std::int64_t n = 0;
  for (std::uint8_t f : b.bits) n += f;
  return n;
}

/// Fraction of visible voxels.
inline double occupancy(const BinaryVolume& b) {
  return b.bits.empty() ? 0.0 : double(count_set(b)) / double(b.bits.size());
}

}  // namespace voxelskip
