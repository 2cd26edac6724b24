// voxelskip command-line tool: bench, render, generate, serve.

#include <voxelskip/bench.hpp>
#include <voxelskip/image_io.hpp>
#include <voxelskip/service_server.hpp>
#include <voxelskip/voxelskip.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

using namespace voxelskip;

namespace {

std::string kind_list() {
  std::string s;
  for (const auto& [kind, name] : kIndexKindNames) s += (s.empty() ? "" : ", ") + std::string(name);
  return s;
}

int run_bench(const BenchConfig& cfg, bool quiet) {
  const auto records = run_benchmark(cfg, quiet ? nullptr : &std::cerr);
  write_csv(std::cout, records);
  return 0;
}

struct RenderArgs {
  std::string dataset;
  std::string tf = "opaque";
  std::string index = "lbvh";
  double azimuth = 30, elevation = 20, zoom = 1;
  int viewport = 512;
  double dt = 0.5;
  std::string out = "frame.png";
};

int run_render(const RenderArgs& a) {
  const Dataset ds = load_dataset(a.dataset);
  const TransferFunction tf = load_tf_spec(a.tf);
  const IndexKind kind = parse_index_kind(a.index);
  const BuiltIndex built = build_index(kind, classify(ds.volume, tf, true));
  RenderOptions opt;
  opt.dt = a.dt;
  const OrthoCamera cam = OrthoCamera::orbit(ds.volume.dims(), a.azimuth, a.elevation, a.zoom, a.viewport, a.viewport);
  const Frame f = render_frame(ds.volume, tf, built.index, cam, opt);
  const std::filesystem::path out(a.out);
  if (out.extension() == ".png")
    write_png(out, f);
  else
    write_raw_rgba(out, f);
  std::cerr << ds.name << "  " << to_string(kind) << "  build=" << built.build_seconds * 1e3
            << "ms  samples=" << f.sample_count << "  -> " << out.string() << '\n';
  return 0;
}

int run_generate(const std::string& spec, const std::string& out, int bits) {
  const Dataset ds = load_dataset(spec);
  save_raw(out, ds.volume, bits);
  std::cerr << "wrote " << out << " and " << sidecar_path(out).string() << '\n';
  return 0;
}

struct ServeArgs {
  std::string dataset;
  std::string tf = "ramp";
  std::string index = "lbvh";
  std::string address = "127.0.0.1";
  unsigned short port = 9000;
  int viewport = 512;
  double dt = 0.5;
};

int run_serve(const ServeArgs& a) {
  Dataset ds = load_dataset(a.dataset);
  SessionConfig cfg;
  cfg.viewport = a.viewport;
  cfg.kind = parse_index_kind(a.index);
  cfg.tf = load_tf_spec(a.tf);
  cfg.render.dt = a.dt;
  Server server(std::move(ds.volume), cfg, a.port, a.address);
  std::cerr << "serving " << ds.name << " on ws://" << a.address << ':' << server.port() << '\n';
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empty-space-skipping indices for volume rendering"};
  app.require_subcommand(1);

  BenchConfig bench;
  bool quiet = false;
  std::string kinds = "lbvh,kd-shallow,kd-deep-mls32";
  auto* b = app.add_subcommand("bench", "Build indices, render a rotation and write one CSV row per dataset and kind");
  b->add_option("--dataset", bench.datasets, "Dataset: .raw path or generator spec (repeatable)")->required();
  b->add_option("--tf", bench.tf, "Transfer function: opaque, ramp[:threshold=T,alpha=A] or JSON file")
      ->capture_default_str();
  b->add_option("--index", kinds, "Comma-separated index kinds: " + kind_list())->capture_default_str();
  b->add_option("--frames", bench.frames, "Frames in the rotation")->capture_default_str();
  b->add_option("--viewport", bench.viewport, "Viewport edge in pixels")->capture_default_str();
  b->add_option("--dt", bench.dt, "Sample spacing in voxels")->capture_default_str();
  b->add_option("--reps", bench.repetitions, "Build repetitions; the median is reported")->capture_default_str();
  b->add_option("--csv", bench.csv_path, "Also write the CSV to this file");
  b->add_flag("--no-dilate", [&](std::int64_t) { bench.dilate = false; }, "Build from the undilated classification");
  b->add_flag("-q,--quiet", quiet, "No per-row log on stderr");

  RenderArgs render;
  auto* r = app.add_subcommand("render", "Render one frame to PNG (or raw RGBA for other extensions)");
  r->add_option("--dataset", render.dataset, "Dataset: .raw path or generator spec")->required();
  r->add_option("--tf", render.tf, "Transfer function")->capture_default_str();
  r->add_option("--index", render.index, "Index kind: " + kind_list())->capture_default_str();
  r->add_option("--azimuth", render.azimuth, "Azimuth in degrees")->capture_default_str();
  r->add_option("--elevation", render.elevation, "Elevation in degrees")->capture_default_str();
  r->add_option("--zoom", render.zoom, "Zoom factor")->capture_default_str();
  r->add_option("--viewport", render.viewport, "Viewport edge in pixels")->capture_default_str();
  r->add_option("--dt", render.dt, "Sample spacing in voxels")->capture_default_str();
  r->add_option("-o,--out", render.out, "Output file")->capture_default_str();

  std::string gen_spec, gen_out;
  int gen_bits = 8;
  auto* g = app.add_subcommand("generate", "Write a procedural dataset as .raw plus JSON sidecar");
  g->add_option("spec", gen_spec, "Generator spec, e.g. menger:level=3")->required();
  g->add_option("-o,--out", gen_out, "Output .raw path")->required();
  g->add_option("--bits", gen_bits, "Bits per voxel")->check(CLI::IsMember({8, 16}))->capture_default_str();

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Serve the explore protocol over WebSocket");
  s->add_option("--dataset", serve.dataset, "Dataset: .raw path or generator spec")->required();
  s->add_option("--tf", serve.tf, "Initial transfer function")->capture_default_str();
  s->add_option("--index", serve.index, "Initial index kind")->capture_default_str();
  s->add_option("--address", serve.address, "Listen address")->capture_default_str();
  s->add_option("--port", serve.port, "Listen port")->capture_default_str();
  s->add_option("--viewport", serve.viewport, "Frame edge in pixels")->capture_default_str();
  s->add_option("--dt", serve.dt, "Sample spacing in voxels")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*b) {
      bench.kinds = parse_index_kinds(kinds);
      return run_bench(bench, quiet);
    }
    if (*r) return run_render(render);
    if (*g) return run_generate(gen_spec, gen_out, gen_bits);
    if (*s) return run_serve(serve);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
