#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kenburns/effect.hpp"
#include "kenburns/io.hpp"

namespace kb::service {

// ---------------------------------------------------------------------------
// Dataset scenes: scene/view{0..3}/{color.png, depth.pfm, normal.pfm}, optional camera.json

inline constexpr int kDatasetViews = 4;
inline constexpr int kDatasetResolution = 512;

struct DatasetView {
  ImageBuffer color;
  DepthMap depth;
  Raster<double> normal;  // 3 channels
};

struct DatasetScene {
  std::array<DatasetView, kDatasetViews> views;
  std::string camera_json;  // empty when the scene has no camera.json
};

struct ViewSummary {
  int view = 0;
  Size size;
  std::size_t valid_depth = 0;
  double depth_min = 0.0;
  double depth_max = 0.0;
  double depth_mean = 0.0;
  double mean_color[3] = {0.0, 0.0, 0.0};
  double mean_normal_length = 0.0;
};

/// Loads and checks a scene. Every missing file or wrong resolution is reported in
/// one ValidationError with fields such as "view3" or "view1/depth.pfm".
DatasetScene load_dataset_scene(const std::filesystem::path& dir, int resolution = kDatasetResolution);
ViewSummary summarize_view(const DatasetView& v, int index);

/// Training-style augmentation: each view loses a random number of rows at the top and
/// bottom, or of columns at the left and right (at most a quarter of the side each).
struct AugmentCrop {
  int view = 0;
  bool rows = false;  // true: top and bottom were cropped
  int x = 0, y = 0, w = 0, h = 0;
};
std::vector<AugmentCrop> augmentation_crops(Size size, int views, std::uint32_t seed);

// ---------------------------------------------------------------------------
// ZIP (stored entries)

class ZipWriter {
 public:
  void add(const std::string& name, const io::Bytes& data);
  io::Bytes finish();

 private:
  struct Entry {
    std::string name;
    std::uint32_t crc = 0;
    std::uint32_t size = 0;
    std::uint32_t offset = 0;
  };
  io::Bytes out_;
  std::vector<Entry> entries_;
};

/// Entries of a stored-only archive in order; checks CRCs. Throws ParseError.
std::vector<std::pair<std::string, io::Bytes>> read_zip(const io::Bytes& archive);

// ---------------------------------------------------------------------------
// Sessions

struct ServiceConfig {
  int coarse_max_dim = 512;
  int cloud_max_dim = 1024;
  int out_max_dim = 512;
  InteractiveRange range;
  bool jpeg_preview = false;
  int jpeg_quality = 90;
  SceneConfig scene;
  InpaintConfig inpaint;
};

/// Same stages for CLI and service so their frames agree bit for bit.
struct Toolchain {
  explicit Toolchain(const ServiceConfig& cfg);
  DefaultRefiner refiner;
  DefaultContextExtractor context;
  LaplaceInpainter inpainter;
};

/// Prepares a scene exactly as the CLI does. Without depth the synthetic provider is used.
PreparedScene prepare_from_inputs(const ImageBuffer& image, const std::optional<DepthMap>& depth,
                                  const std::optional<SegMaskSet>& masks, const ServiceConfig& cfg);

/// Output size implied by the config for an image.
Size output_size(Size image, const ServiceConfig& cfg);

/// PNG-encoded frames of a spec, as written by the CLI and the export endpoint.
std::vector<io::Bytes> render_spec_png(const PreparedScene& scene, const EffectSpec& spec, const ServiceConfig& cfg);

/// Inverse depth mapped through a fixed colour ramp (near = bright).
ImageBuffer colorize_depth(const DepthMap& depth);

/// The session's background pipeline has not finished (or failed).
class NotReady : public Error {
 public:
  using Error::Error;
};

enum class SessionStatus { pending, running, ready, failed };
std::string to_string(SessionStatus s);

struct SessionUpload {
  ImageBuffer image;
  std::optional<DepthMap> depth;
  std::optional<SegMaskSet> masks;
};

struct SessionSnapshot {
  SessionStatus status = SessionStatus::pending;
  std::string stage;
  double progress = 0.0;
  std::string error;
  std::uint32_t revision = 0;
};

class Session {
 public:
  Session(std::string id, SessionUpload upload, ServiceConfig cfg);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  Size image_size() const { return image_size_; }
  SessionSnapshot snapshot() const;
  bool wait_ready(std::chrono::milliseconds timeout) const;

  /// Validated spec update; returns the new revision.
  std::uint32_t set_spec(const EffectSpec& spec);
  std::pair<EffectSpec, std::uint32_t> spec() const;

  /// Encoded preview frame `k` of the current spec and the revision it belongs to.
  /// Requires a ready session; frames are cached per revision.
  struct Frame {
    std::uint32_t revision = 0;
    std::uint32_t index = 0;
    std::uint32_t count = 0;
    std::shared_ptr<const io::Bytes> data;
  };
  Frame preview_frame(std::uint32_t k);

  io::Bytes depth_png() const;
  io::Bytes export_zip(int frames) const;
  EffectSpec automatic() const;
  const ServiceConfig& config() const { return cfg_; }

 private:
  void run(SessionUpload upload);
  void set_stage(const std::string& stage, double progress);

  std::string id_;
  ServiceConfig cfg_;
  Size image_size_;

  mutable std::mutex mu_;
  mutable std::condition_variable ready_cv_;
  SessionSnapshot state_;
  EffectSpec spec_;
  std::unique_ptr<PreparedScene> scene_;
  std::unique_ptr<PointCloud> interactive_;

  std::mutex render_mu_;
  std::uint32_t cache_revision_ = 0;
  std::map<std::uint32_t, std::shared_ptr<const io::Bytes>> cache_;

  std::thread worker_;
};

class SessionManager {
 public:
  explicit SessionManager(ServiceConfig cfg = {}) : cfg_(cfg) {}
  std::shared_ptr<Session> create(SessionUpload upload);
  std::shared_ptr<Session> find(const std::string& id) const;
  const ServiceConfig& config() const { return cfg_; }

 private:
  ServiceConfig cfg_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

// ---------------------------------------------------------------------------
// HTTP + WebSocket server

inline constexpr std::uint16_t kDefaultPort = 8571;

/// KENBURNS_PORT if set and valid, else 8571.
std::uint16_t port_from_env();

/// Header of a binary preview message: revision and frame index, big-endian u32 each.
std::array<std::uint8_t, 8> preview_header(std::uint32_t revision, std::uint32_t frame);

class Server {
 public:
  /// Port 0 binds an ephemeral port; see port().
  Server(SessionManager& sessions, std::uint16_t port, const std::string& address = "127.0.0.1");
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

}  // namespace kb::service
