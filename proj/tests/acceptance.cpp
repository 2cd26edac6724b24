// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "test_support.hpp"

#include <voxelskip/bench.hpp>
#include <voxelskip/voxelskip.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

using namespace voxelskip;
using namespace voxelskip::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto t = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d. %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds_since(t));
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// The sparse hollow shell used by criteria 5, 7, 8 and 9: about 1 % of the
// voxels before dilation.
Volume sparse_shell() { return gen_shell({256, 256, 256}, {127.5, 127.5, 127.5}, 96, 1.5); }

double median_build(IndexKind kind, const BinaryVolume& b, int reps) { return timed_build(kind, b, reps).build_seconds; }

Outcome occupancy_reproduction() {
  const auto t = Clock::now();
  const BinaryVolume b = classify(gen_menger(3), TransferFunction::opaque(), false);
  const double pct = 100.0 * occupancy(b);
  const double secs = seconds_since(t);
  const bool exact = count_set(b) == 8000 && b.dims == Vec3i{27, 27, 27};
  return {exact && std::abs(pct - 40.7) <= 0.5 && secs < 1.0,
          fmt("occupancy %.4f%% (%lld/19683), |d| vs 40.7 = %.3f, %.3fs", pct, (long long)count_set(b),
              std::abs(pct - 40.7), secs)};
}

Outcome degenerate_tree() {
  const SvtGrid g(BinaryVolume({64, 64, 64}, true), 32);
  BuildParams p;
  p.mode = KdMode::shallow;
  const TreeStats s = build_kdtree(g, p).stats();
  return {s.node_count == 1 && s.height == 1, fmt("dense 64^3 shallow: %lld node(s), height %d", (long long)s.node_count, s.height)};
}

Outcome svt_oracle() {
  const auto t = Clock::now();
  int mismatches = 0, queries = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const BinaryVolume b = seed % 2 ? random_binary({64, 64, 64}, 0.002 * double(seed + 1), seed)
                                    : random_clustered({64, 64, 64}, seed, 4, 0.001);
    const SvtGrid g(b, 32);
    std::mt19937_64 rng(seed * 7919 + 1);
    for (int q = 0; q < 100; ++q) {
      const Aabb box = random_box(b.dims, rng);
      mismatches += g.box_count(box) != brute_count(b, box);
      mismatches += shrink_to_occupied(g, box) != brute_tight(b, box);
      queries += 2;
    }
  }
  const double secs = seconds_since(t);
  return {mismatches == 0 && secs < 10.0, fmt("%d/%d queries match brute force, %.2fs", queries - mismatches, queries, secs)};
}

Outcome lbvh_validity() {
  int bad_leaves = 0, bad_boxes = 0, bad_morton = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BinaryVolume b = random_clustered({64 + 3 * int(seed), 72, 56}, seed + 1000, 4, 0.0003);
    const Lbvh bvh = build_lbvh(flag_bricks(b, 8));
    std::int64_t bricks = 0;
    const Vec3i bd = ceil_div(b.dims, 8);
    for (int z = 0; z < bd.z; ++z)
      for (int y = 0; y < bd.y; ++y)
        for (int x = 0; x < bd.x; ++x) {
          const Vec3i lo{x * 8, y * 8, z * 8};
          bricks += brute_count(b, {lo, lo + Vec3i{8, 8, 8}}) > 0;
        }
    bad_leaves += bvh.leaf_count() != bricks;
    for (const LbvhNode& n : bvh.nodes)
      if (!n.is_leaf())
        bad_boxes += n.box != box_union(bvh.nodes[std::size_t(n.left)].box, bvh.nodes[std::size_t(n.right)].box);
  }
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coord(0, 1023);
  for (int i = 0; i < 1000; ++i) {
    const Vec3i c{coord(rng), coord(rng), coord(rng)};
    bad_morton += morton_decode(morton_encode(c)) != c;
  }
  return {bad_leaves + bad_boxes + bad_morton == 0,
          fmt("leaf-count mismatches %d/20, internal box mismatches %d, Morton round-trip failures %d/1000", bad_leaves,
              bad_boxes, bad_morton)};
}

Outcome max_leaf_size(const BinaryVolume& shell) {
  const SvtGrid g(shell, 32);
  BuildParams deep;
  BuildParams mls = deep;
  mls.max_leaf_size = 32;
  const KdTree plain = build_kdtree(g, deep);
  const KdTree capped = build_kdtree(g, mls);
  int widest = 0;
  for (const KdNode& n : capped.nodes)
    if (n.is_leaf()) widest = std::max({widest, n.box.extent().x, n.box.extent().y, n.box.extent().z});
  int widest_plain = 0;
  for (const KdNode& n : plain.nodes)
    if (n.is_leaf()) widest_plain = std::max({widest_plain, n.box.extent().x, n.box.extent().y, n.box.extent().z});
  return {widest <= 32 && capped.nodes.size() > plain.nodes.size(),
          fmt("mls32: %zu nodes, widest leaf %d; kd-deep: %zu nodes, widest leaf %d", capped.nodes.size(), widest,
              plain.nodes.size(), widest_plain)};
}

Outcome image_equivalence() {
  const auto t = Clock::now();
  struct Case {
    std::string name;
    Volume volume;
  };
  std::vector<Case> cases;
  cases.push_back({"menger3", gen_menger(3)});
  cases.push_back({"shell128", gen_shell({128, 128, 128}, {63.5, 63.5, 63.5}, 48, 2)});
  cases.push_back({"blobs128", gen_blobs({128, 128, 128}, 100, 7)});
  const std::vector<std::pair<std::string, TransferFunction>> tfs{{"opaque", TransferFunction::opaque()},
                                                                  {"ramp", TransferFunction::ramp(0.3f, 0.6f)}};
  const IndexKind kinds[] = {IndexKind::grid,           IndexKind::lbvh,          IndexKind::kd_shallow,
                             IndexKind::kd_deep_mls32,  IndexKind::kd_deep_mls128, IndexKind::kd_binned_mls32,
                             IndexKind::hybrid};
  int worst = 0, frames = 0, identical = 0;
  std::string worst_case = "-";
  for (const Case& c : cases)
    for (const auto& [tf_name, tf] : tfs) {
      const BinaryVolume b = classify(c.volume, tf, true);
      for (double az : {30.0, 135.0}) {
        const OrthoCamera cam = OrthoCamera::orbit(c.volume.dims(), az, 20, 1, 256, 256);
        const Frame naive = render_frame(c.volume, tf, NaiveIndex{}, cam);
        for (IndexKind kind : kinds) {
          const Frame f = render_frame(c.volume, tf, build_index(kind, b).index, cam);
          int diff = 0;
          for (std::size_t i = 0; i < f.rgba.size(); ++i) diff = std::max(diff, std::abs(int(f.rgba[i]) - int(naive.rgba[i])));
          ++frames;
          identical += diff == 0;
          if (diff > worst) {
            worst = diff;
            worst_case = c.name + "/" + tf_name + "/" + to_string(kind);
          }
        }
      }
    }
  const double secs = seconds_since(t);
  return {worst <= 1 && secs < 300.0,
          fmt("%d frames at 256^2, max channel diff %d (%s), %d bit-identical, %.1fs", frames, worst, worst_case.c_str(),
              identical, secs)};
}

Outcome skipping_effectiveness(const Volume& shell, const BinaryVolume& shell_b) {
  const TransferFunction tf = TransferFunction::opaque();
  const auto samples = [&](const Volume& v, const SpatialIndex& idx) {
    std::int64_t n = 0;
    for (const OrthoCamera& cam : rotation_cameras(v.dims(), 4, 256)) n += render_frame(v, tf, idx, cam).sample_count;
    return n;
  };
  const double occ = 100.0 * occupancy(classify(shell, tf, false));
  const std::int64_t naive = samples(shell, NaiveIndex{});
  const std::int64_t kd = samples(shell, build_index(IndexKind::kd_deep_mls32, shell_b).index);
  const double ratio = double(kd) / double(naive);

  const Volume menger = gen_menger(3);
  const BinaryVolume mb = classify(menger, tf, true);
  const std::int64_t m_naive = samples(menger, NaiveIndex{});
  const std::int64_t m_kd = samples(menger, build_index(IndexKind::kd_deep_mls32, mb).index);
  return {ratio <= 0.20, fmt("shell (%.2f%% occupied) kd-deep-mls32/naive samples = %.2f%%; menger3 (record only) = %.2f%%", occ,
                             100 * ratio, 100.0 * double(m_kd) / double(m_naive))};
}

Outcome build_ordering(const BinaryVolume& shell_b) {
  const double lbvh = median_build(IndexKind::lbvh, shell_b, 3);
  const double shallow = median_build(IndexKind::kd_shallow, shell_b, 3);
  const double mls = median_build(IndexKind::kd_deep_mls32, shell_b, 3);
  return {2 * lbvh < shallow && 2 * shallow < mls,
          fmt("median of 3: lbvh %.4fs, kd-shallow %.4fs, kd-deep-mls32 %.4fs (ratios %.1fx, %.1fx, need > 2x)", lbvh,
              shallow, mls, shallow / lbvh, mls / shallow)};
}

Outcome hybrid_parity(const BinaryVolume& shell_b) {
  const double shallow = median_build(IndexKind::kd_shallow, shell_b, 5);
  const double hybrid = median_build(IndexKind::hybrid, shell_b, 5);
  return {hybrid <= 1.5 * shallow, fmt("median of 5: hybrid %.4fs, kd-shallow %.4fs, ratio %.2f (limit 1.5)", hybrid, shallow,
                                       hybrid / shallow)};
}

// One CSV line into fields; handles quoted fields with doubled quotes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

Outcome benchmark_csv() {
  const auto dir = std::filesystem::temp_directory_path() / "voxelskip_acceptance";
  std::filesystem::create_directories(dir);
  BenchConfig cfg;
  cfg.datasets = {"shell:dims=64,radius=24,thickness=2", "blobs:dims=64,n=40,seed=3"};
  cfg.kinds = {IndexKind::lbvh, IndexKind::kd_shallow, IndexKind::kd_deep_mls32};
  cfg.frames = 4;
  cfg.viewport = 64;
  cfg.repetitions = 1;

  const auto read_rows = [&](const std::string& name) {
    cfg.csv_path = (dir / name).string();
    run_benchmark(cfg);
    std::ifstream in(cfg.csv_path);
    std::vector<std::vector<std::string>> rows;
    for (std::string line; std::getline(in, line);) {
      rows.push_back(split_csv(line));
    }
    return rows;
  };
  const auto a = read_rows("a.csv");
  const auto b = read_rows("b.csv");
  std::filesystem::remove_all(dir);

  const std::vector<std::string> header{"dataset", "index", "occupancy_pct", "build_s", "fps", "nodes", "height", "samples"};
  bool ok = a.size() == 7 && b.size() == 7 && a[0] == header;
  int differing = 0;
  for (std::size_t r = 1; ok && r < a.size(); ++r) {
    ok = a[r].size() == 8 && b[r].size() == 8;
    // Structural columns: everything except build_s and fps.
    for (std::size_t c : {0u, 1u, 2u, 5u, 6u, 7u})
      if (ok) differing += a[r][c] != b[r][c];
  }
  return {ok && differing == 0, fmt("%zu data rows, header %s, %d structural cells differ between runs",
                                    a.empty() ? 0 : a.size() - 1, !a.empty() && a[0] == header ? "ok" : "wrong", differing)};
}

}  // namespace

int main() {
  std::printf("voxelskip acceptance (%u worker thread(s))\n", worker_count());
  std::fflush(stdout);
  const Volume shell = sparse_shell();
  const BinaryVolume shell_b = classify(shell, TransferFunction::opaque(), true);

  report(1, "Occupancy reproduction", occupancy_reproduction);
  report(2, "Degenerate tree", degenerate_tree);
  report(3, "SVT oracle equivalence", svt_oracle);
  report(4, "LBVH validity", lbvh_validity);
  report(5, "Max leaf size", [&] { return max_leaf_size(shell_b); });
  report(6, "Image equivalence", image_equivalence);
  report(7, "Skipping effectiveness", [&] { return skipping_effectiveness(shell, shell_b); });
  report(8, "Construction-cost ordering", [&] { return build_ordering(shell_b); });
  report(9, "Hybrid build-cost parity", [&] { return hybrid_parity(shell_b); });
  report(10, "Benchmark CSV", benchmark_csv);

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
