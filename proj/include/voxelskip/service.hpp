#pragma once

#include <voxelskip/bench.hpp>
#include <voxelskip/render.hpp>
#include <voxelskip/volume.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace voxelskip {

// ---------------------------------------------------------------------------
// Binary frame messages: "FRME", width, height, sequence (u32 LE each), RGBA8.

inline constexpr std::size_t kFrameHeaderSize = 16;

struct FrameMessage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t sequence = 0;
  std::vector<std::uint8_t> rgba;
};

inline std::vector<std::uint8_t> encode_frame(const Frame& f, std::uint32_t sequence) {
  std::vector<std::uint8_t> out(kFrameHeaderSize + f.rgba.size());
  std::memcpy(out.data(), "FRME", 4);
  auto put = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + std::size_t(i)] = std::uint8_t(v >> (8 * i));
  };
  put(4, std::uint32_t(f.width));
  put(8, std::uint32_t(f.height));
  put(12, sequence);
  std::memcpy(out.data() + kFrameHeaderSize, f.rgba.data(), f.rgba.size());
  return out;
}

inline FrameMessage decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize || std::memcmp(bytes.data(), "FRME", 4) != 0)
    throw FormatError("binary message does not start with FRME");
  auto get = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[at + std::size_t(i)]) << (8 * i);
    return v;
  };
  FrameMessage m{get(4), get(8), get(12), {}};
  const std::size_t expected = std::size_t(m.width) * m.height * 4;
  if (bytes.size() - kFrameHeaderSize != expected) throw FormatError("frame payload size does not match header");
  m.rgba.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  return m;
}

// ---------------------------------------------------------------------------

struct SessionConfig {
  int viewport = 512;
  IndexKind kind = IndexKind::lbvh;
  TransferFunction tf = TransferFunction::ramp(0.1f);
  RenderOptions render;
};

struct CameraState {
  double azimuth_deg = 30.0;
  double elevation_deg = 20.0;
  double zoom = 1.0;
};

/// One client's explore loop. Not thread-safe: the transport serializes
/// messages per session.
class Session {
 public:
  struct Reply {
    bool binary = false;
    std::string text;                 // JSON when !binary
    std::vector<std::uint8_t> bytes;  // FRME message when binary
  };

  Session(Volume volume, SessionConfig cfg) : volume_(std::move(volume)), cfg_(std::move(cfg)), tf_(cfg_.tf), kind_(cfg_.kind) {
    reclassify();
    rebuild();
  }

  std::vector<Reply> handle_message(std::string_view text) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      return {error(std::string("malformed JSON: ") + e.what())};
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) return {error("message needs a string 'type'")};
    const std::string type = msg["type"].get<std::string>();
    try {
      if (type == "ping") return {text_reply({{"type", "pong"}})};
      if (type == "set_tf") {
        tf_ = tf_from_json(msg);
        reclassify();
        rebuild();
        return stats_and_frame();
      }
      if (type == "set_index") {
        if (!msg.contains("kind") || !msg["kind"].is_string()) return {error("set_index needs a string 'kind'")};
        kind_ = parse_index_kind(msg["kind"].get<std::string>());
        rebuild();
        return stats_and_frame();
      }
      if (type == "set_camera") {
        CameraState next = camera_;
        if (msg.contains("azimuth_deg")) next.azimuth_deg = number(msg, "azimuth_deg");
        if (msg.contains("elevation_deg")) next.elevation_deg = number(msg, "elevation_deg");
        if (msg.contains("zoom")) next.zoom = number(msg, "zoom");
        if (!(next.zoom > 0)) return {error("zoom must be > 0")};
        camera_ = next;
        Frame f = render();
        return {frame_reply(f)};
      }
      return {error("unknown message type '" + type + "'")};
    } catch (const std::exception& e) {
      return {error(e.what())};
    }
  }

  const Volume& volume() const { return volume_; }
  const TransferFunction& tf() const { return tf_; }
  IndexKind kind() const { return kind_; }
  const CameraState& camera_state() const { return camera_; }
  OrthoCamera camera() const {
    return OrthoCamera::orbit(volume_.dims(), camera_.azimuth_deg, camera_.elevation_deg, camera_.zoom, cfg_.viewport,
                              cfg_.viewport);
  }
  const RenderOptions& render_options() const { return cfg_.render; }
  std::uint32_t frames_sent() const { return sequence_; }

 private:
  static double number(const nlohmann::json& msg, const char* key) {
    if (!msg[key].is_number()) throw FormatError(std::string("'") + key + "' must be a number");
    return msg[key].get<double>();
  }

  static Reply text_reply(const nlohmann::json& j) { return {false, j.dump(), {}}; }
  static Reply error(const std::string& reason) { return text_reply({{"type", "error"}, {"reason", reason}}); }

  void reclassify() {
    const auto t = detail::Clock::now();
    classification_ = classify(volume_, tf_, true);
    classify_ms_ = 1e3 * detail::seconds_since(t);
    occupancy_pct_ = 100.0 * occupancy(classify(volume_, tf_, false));
  }

  void rebuild() {
    built_ = build_index(kind_, classification_);
    stats_ = report_stats(built_.index);
  }

  Frame render() { return render_frame(volume_, tf_, built_.index, camera(), cfg_.render); }

  Reply frame_reply(const Frame& f) { return {true, {}, encode_frame(f, ++sequence_)}; }

  std::vector<Reply> stats_and_frame() {
    const auto t = detail::Clock::now();
    const Frame f = render();
    const double render_ms = 1e3 * detail::seconds_since(t);
    nlohmann::json stats = {{"type", "stats"},
                            {"index", to_string(kind_)},
                            {"occupancy_pct", occupancy_pct_},
                            {"build_ms", 1e3 * built_.build_seconds},
                            {"classify_ms", classify_ms_},
                            {"nodes", stats_.node_count},
                            {"height", stats_.height},
                            {"render_ms", render_ms},
                            {"samples", f.sample_count}};
    return {text_reply(stats), frame_reply(f)};
  }

  Volume volume_;
  SessionConfig cfg_;
  TransferFunction tf_;
  IndexKind kind_;
  CameraState camera_;
  BinaryVolume classification_;
  BuiltIndex built_;
  TreeStats stats_;
  double classify_ms_ = 0;
  double occupancy_pct_ = 0;
  std::uint32_t sequence_ = 0;
};

}  // namespace voxelskip
