#pragma once

#include <voxelskip/hybrid.hpp>
#include <voxelskip/kdtree.hpp>
#include <voxelskip/lbvh.hpp>
#include <voxelskip/render.hpp>
#include <voxelskip/svt.hpp>
#include <voxelskip/volume.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace voxelskip {

enum class IndexKind { naive, grid, lbvh, kd_shallow, kd_deep, kd_deep_mls32, kd_deep_mls128, kd_binned_mls32, hybrid };

inline constexpr std::pair<IndexKind, std::string_view> kIndexKindNames[] = {
    {IndexKind::naive, "naive"},
    {IndexKind::grid, "grid"},
    {IndexKind::lbvh, "lbvh"},
    {IndexKind::kd_shallow, "kd-shallow"},
    {IndexKind::kd_deep, "kd-deep"},
    {IndexKind::kd_deep_mls32, "kd-deep-mls32"},
    {IndexKind::kd_deep_mls128, "kd-deep-mls128"},
    {IndexKind::kd_binned_mls32, "kd-binned-mls32"},
    {IndexKind::hybrid, "hybrid"},
};

inline std::string to_string(IndexKind k) {
  for (const auto& [kind, name] : kIndexKindNames)
    if (kind == k) return std::string(name);
  return "unknown";
}

inline IndexKind parse_index_kind(std::string_view s) {
  for (const auto& [kind, name] : kIndexKindNames)
    if (name == s) return kind;
  throw ConfigError("unknown index kind '" + std::string(s) + "'");
}

inline std::vector<IndexKind> parse_index_kinds(std::string_view list) {
  std::vector<IndexKind> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = list.find(',', pos);
    const auto item = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!item.empty()) out.push_back(parse_index_kind(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("no index kinds given");
  return out;
}

inline constexpr int kGridCellSize = 16;

/// Node count and height; grids and the naive marcher report 0/0, a hybrid
/// reports its tree.
inline TreeStats report_stats(const SpatialIndex& index) {
  return std::visit(
      [](const auto& idx) -> TreeStats {
        using T = std::decay_t<decltype(idx)>;
        if constexpr (std::is_same_v<T, KdTree>) {
          return idx.stats();
        } else if constexpr (std::is_same_v<T, HybridGrid>) {
          return idx.tree.stats();
        } else if constexpr (std::is_same_v<T, Lbvh>) {
          TreeStats s;
          s.node_count = std::int64_t(idx.nodes.size());
          if (idx.empty()) return s;
          std::vector<std::pair<int, int>> stack{{idx.root(), 1}};
          while (!stack.empty()) {
            auto [id, depth] = stack.back();
            stack.pop_back();
            s.height = std::max(s.height, depth);
            const LbvhNode& n = idx.nodes[std::size_t(id)];
            if (!n.is_leaf()) {
              stack.push_back({n.left, depth + 1});
              stack.push_back({n.right, depth + 1});
            }
          }
          return s;
        } else {
          return {};
        }
      },
      index);
}

struct BuiltIndex {
  SpatialIndex index;
  double build_seconds = 0;  // includes SVT construction for SVT-based kinds
  double svt_seconds = 0;    // SVT share of build_seconds
};

namespace detail {
using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }
}  // namespace detail

/// Builds one index from a classification and times it.
inline BuiltIndex build_index(IndexKind kind, const BinaryVolume& b) {
  BuiltIndex out;
  const auto start = detail::Clock::now();
  auto with_svt = [&](auto&& fn) {
    const SvtGrid g(b, 32);
    out.svt_seconds = detail::seconds_since(start);
    out.index = fn(g);
  };
  auto kd = [&](KdMode mode, int mls) {
    with_svt([&](const SvtGrid& g) {
      BuildParams p;
      p.mode = mode;
      p.max_leaf_size = mls;
      return build_kdtree(g, p);
    });
  };
  switch (kind) {
    case IndexKind::naive:
      out.index = NaiveIndex{};
      break;
    case IndexKind::grid:
      out.index = derive_macro_grid(b, kGridCellSize);
      break;
    case IndexKind::lbvh:
      out.index = build_lbvh(flag_bricks(b, 8));
      break;
    case IndexKind::kd_shallow:
      kd(KdMode::shallow, 0);
      break;
    case IndexKind::kd_deep:
      kd(KdMode::deep, 0);
      break;
    case IndexKind::kd_deep_mls32:
      kd(KdMode::deep, 32);
      break;
    case IndexKind::kd_deep_mls128:
      kd(KdMode::deep, 128);
      break;
    case IndexKind::kd_binned_mls32: {
      BuildParams p;
      p.mode = KdMode::deep;
      p.max_leaf_size = 32;
      p.builder = KdBuilder::binned;
      out.index = build_kdtree(precompute_cell_boxes(b, p.cell_size), p);
      break;
    }
    case IndexKind::hybrid:
      with_svt([](const SvtGrid& g) { return build_hybrid(g); });
      break;
  }
  out.build_seconds = detail::seconds_since(start);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset and transfer-function specs

struct Dataset {
  std::string name;
  Volume volume;
};

namespace detail {

inline std::map<std::string, std::string> parse_kv(std::string_view s) {
  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string_view::npos) comma = s.size();
    const auto item = s.substr(pos, comma - pos);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("expected key=value, got '" + std::string(item) + "'");
    kv[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    pos = comma + 1;
  }
  return kv;
}

template <typename T>
T kv_get(const std::map<std::string, std::string>& kv, const std::string& key, T fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::istringstream in(it->second);
  T v{};
  if (!(in >> v) || !in.eof()) throw ConfigError("bad value for '" + key + "': " + it->second);
  return v;
}

inline void check_keys(const std::map<std::string, std::string>& kv, std::initializer_list<std::string_view> allowed,
                       std::string_view what) {
  for (const auto& [k, v] : kv)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("unknown " + std::string(what) + " parameter '" + k + "'");
}

}  // namespace detail

/// Generator spec ("menger:level=3", "shell:dims=128,radius=48,thickness=2",
/// "blobs:dims=128,n=100,seed=7"), optionally prefixed with "gen:", or a path
/// to a .raw file with a JSON sidecar.
inline Dataset load_dataset(const std::string& spec) {
  std::string_view s = spec;
  const bool forced_gen = s.starts_with("gen:");
  if (forced_gen) s.remove_prefix(4);
  const auto colon = s.find(':');
  const std::string_view gen = s.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);

  if (gen == "menger") {
    const auto kv = detail::parse_kv(args);
    detail::check_keys(kv, {"level"}, "menger");
    return {spec, gen_menger(detail::kv_get(kv, "level", 3))};
  }
  if (gen == "shell") {
    const auto kv = detail::parse_kv(args);
    detail::check_keys(kv, {"dims", "radius", "thickness"}, "shell");
    const int n = detail::kv_get(kv, "dims", 128);
    const double c = (n - 1) / 2.0;
    return {spec, gen_shell({n, n, n}, {c, c, c}, detail::kv_get(kv, "radius", 0.375 * n),
                            detail::kv_get(kv, "thickness", 2.0))};
  }
  if (gen == "blobs") {
    const auto kv = detail::parse_kv(args);
    detail::check_keys(kv, {"dims", "n", "seed", "sigma"}, "blobs");
    const int n = detail::kv_get(kv, "dims", 128);
    return {spec, gen_blobs({n, n, n}, detail::kv_get(kv, "n", 100), detail::kv_get<std::uint64_t>(kv, "seed", 7),
                            detail::kv_get(kv, "sigma", 1.5))};
  }
  if (forced_gen) throw ConfigError("unknown generator '" + std::string(gen) + "'");
  const std::filesystem::path path(spec);
  if (!std::filesystem::exists(path)) throw ConfigError("dataset not found: " + spec);
  return {path.stem().string(), load_raw(path)};
}

/// Builtin transfer functions ("opaque", "ramp", "ramp:threshold=0.3,alpha=0.5")
/// or a path to a JSON file.
inline TransferFunction load_tf_spec(const std::string& spec) {
  std::string_view s = spec;
  const auto colon = s.find(':');
  const std::string_view name = s.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);
  if (name == "opaque" && args.empty()) return TransferFunction::opaque();
  if (name == "ramp") {
    const auto kv = detail::parse_kv(args);
    detail::check_keys(kv, {"threshold", "alpha"}, "ramp");
    return TransferFunction::ramp(detail::kv_get(kv, "threshold", 0.1f), detail::kv_get(kv, "alpha", 0.5f));
  }
  if (!std::filesystem::exists(spec)) throw ConfigError("transfer function not found: " + spec);
  return load_tf(spec);
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchConfig {
  std::vector<std::string> datasets;
  std::string tf = "opaque";
  std::vector<IndexKind> kinds;
  int frames = 36;
  int viewport = 1024;
  double dt = 0.5;
  int repetitions = 3;
  std::string csv_path;  // empty: no file
  bool dilate = true;

  void validate() const {
    if (datasets.empty()) throw ConfigError("no dataset given");
    if (kinds.empty()) throw ConfigError("no index kind given");
    if (frames < 1) throw ConfigError("frames must be >= 1");
    if (viewport < 16) throw ConfigError("viewport must be >= 16");
    if (!(dt > 0)) throw ConfigError("dt must be > 0");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  }
};

struct BenchRecord {
  std::string dataset;
  std::string index;
  double occupancy_pct = 0;
  double build_seconds = 0;
  double svt_seconds = 0;
  double classify_seconds = 0;
  double fps = 0;
  std::int64_t nodes = 0;
  int height = 0;
  std::int64_t samples = 0;
};

inline constexpr std::string_view kCsvHeader = "dataset,index,occupancy_pct,build_s,fps,nodes,height,samples";

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}
inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kCsvHeader << '\n';
  for (const BenchRecord& r : records) {
    out << detail::csv_field(r.dataset) << ',' << detail::csv_field(r.index) << ',' << detail::fixed(r.occupancy_pct, 4)
        << ',' << detail::fixed(r.build_seconds, 6) << ',' << detail::fixed(r.fps, 3) << ',' << r.nodes << ','
        << r.height << ',' << r.samples << '\n';
  }
}

/// Median wall-clock of `reps` builds; returns the last build.
inline BuiltIndex timed_build(IndexKind kind, const BinaryVolume& b, int reps) {
  std::vector<double> build, svt;
  BuiltIndex last;
  for (int i = 0; i < reps; ++i) {
    last = build_index(kind, b);
    build.push_back(last.build_seconds);
    svt.push_back(last.svt_seconds);
  }
  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  last.build_seconds = median(build);
  last.svt_seconds = median(svt);
  return last;
}

/// Orthographic views rotating 360 degrees around the vertical axis.
inline std::vector<OrthoCamera> rotation_cameras(Vec3i dims, int frames, int viewport) {
  std::vector<OrthoCamera> cams;
  for (int f = 0; f < frames; ++f)
    cams.push_back(OrthoCamera::orbit(dims, 360.0 * f / frames, 0.0, 1.0, viewport, viewport));
  return cams;
}

/// Classify, build (timed), render the rotation, one record per index kind.
/// Index kinds run one after another so their timings do not interfere.
inline std::vector<BenchRecord> run_benchmark(const BenchConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  const TransferFunction tf = load_tf_spec(cfg.tf);
  std::vector<BenchRecord> records;
  for (const std::string& spec : cfg.datasets) {
    const Dataset ds = load_dataset(spec);
    const auto t_classify = detail::Clock::now();
    const BinaryVolume b = classify(ds.volume, tf, cfg.dilate);
    const double classify_s = detail::seconds_since(t_classify);
    // Occupancy is reported for the transfer function itself, before dilation.
    const double occ = 100.0 * (cfg.dilate ? occupancy(classify(ds.volume, tf, false)) : occupancy(b));
    const auto cams = rotation_cameras(ds.volume.dims(), cfg.frames, cfg.viewport);
    RenderOptions opt;
    opt.dt = cfg.dt;

    for (IndexKind kind : cfg.kinds) {
      const BuiltIndex built = timed_build(kind, b, cfg.repetitions);
      const TreeStats stats = report_stats(built.index);
      std::int64_t samples = 0;
      const auto t_render = detail::Clock::now();
      for (const OrthoCamera& cam : cams) samples += render_frame(ds.volume, tf, built.index, cam, opt).sample_count;
      const double render_s = std::max(detail::seconds_since(t_render), 1e-9);

      BenchRecord r;
      r.dataset = ds.name;
      r.index = to_string(kind);
      r.occupancy_pct = occ;
      r.build_seconds = built.build_seconds;
      r.svt_seconds = built.svt_seconds;
      r.classify_seconds = classify_s;
      r.fps = double(cfg.frames) / render_s;
      r.nodes = stats.node_count;
      r.height = stats.height;
      r.samples = samples;
      if (log)
        *log << r.dataset << "  " << r.index << "  occ=" << detail::fixed(r.occupancy_pct, 2)
             << "%  build=" << detail::fixed(r.build_seconds * 1e3, 2) << "ms (svt " << detail::fixed(r.svt_seconds * 1e3, 2)
             << "ms, classify " << detail::fixed(r.classify_seconds * 1e3, 2) << "ms)  fps=" << detail::fixed(r.fps, 2)
             << "  nodes=" << r.nodes << "  height=" << r.height << "  samples=" << r.samples << '\n';
      records.push_back(std::move(r));
    }
  }
  if (!cfg.csv_path.empty()) {
    std::ofstream out(cfg.csv_path);
    if (!out) throw ConfigError("cannot write " + cfg.csv_path);
    write_csv(out, records);
  }
  return records;
}

}  // namespace voxelskip
