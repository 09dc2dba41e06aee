#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kenburns/core.hpp"

namespace kb {

enum class PointOrigin : std::uint8_t { original, inpainted };

/// Read-only view of one point in a PointCloud.
struct ScenePoint {
  Vec3 position;
  Vec3 color;
  std::span<const double> context;
  PointOrigin origin;
  std::uint32_t source_index;
};

/// Structure-of-arrays point storage. Points are append-only; source indices are
/// unique and increase with insertion order.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(Intrinsics source_intrinsics, Size source_size, int context_channels);

  std::size_t size() const { return positions_.size(); }
  int context_channels() const { return context_channels_; }
  const Intrinsics& source_intrinsics() const { return source_intrinsics_; }
  Size source_size() const { return source_size_; }
  std::size_t original_count() const { return original_count_; }
  /// Pixels skipped at construction because their depth was invalid.
  std::size_t omitted_count() const { return omitted_count_; }

  ScenePoint point(std::size_t i) const;
  std::span<const Vec3> positions() const { return positions_; }
  std::span<const Vec3> colors() const { return colors_; }
  std::span<const double> contexts() const { return contexts_; }
  std::span<const PointOrigin> origins() const { return origins_; }
  std::span<const std::uint32_t> source_indices() const { return source_indices_; }

  /// Appends a point with the next free source index and returns that index.
  std::uint32_t append(const Vec3& position, const Vec3& color, std::span<const double> context, PointOrigin origin);

 private:
  friend PointCloud build_point_cloud(const ImageBuffer&, const DepthMap&, const Intrinsics&, const Raster<double>&);

  Intrinsics source_intrinsics_;
  Size source_size_;
  int context_channels_ = 0;
  std::size_t original_count_ = 0;
  std::size_t omitted_count_ = 0;
  std::uint32_t next_index_ = 0;
  std::vector<Vec3> positions_;
  std::vector<Vec3> colors_;
  std::vector<double> contexts_;
  std::vector<PointOrigin> origins_;
  std::vector<std::uint32_t> source_indices_;
};

/// One point per valid pixel at d * K^-1 (x + 0.5, y + 0.5, 1). Source index = y * width + x.
/// `context` may be empty (zero channels) or must match the image size.
PointCloud build_point_cloud(const ImageBuffer& img, const DepthMap& depth, const Intrinsics& K,
                             const Raster<double>& context);

struct RenderConfig {
  double crack_ratio = 0.03;  // neighbours closer than (1 - ratio) * z mark a crack
  double cull_ratio = 0.01;   // points farther than (1 + ratio) * filtered z are dropped
  bool filter = true;         // disable to observe raw shine-through
  bool diagonal_pairs = true; // test NW/SE and NE/SW in addition to W/E and N/S
};

inline constexpr std::int64_t kNoPoint = -1;

struct RenderFrame {
  ImageBuffer color;
  DepthMap depth;            // camera-space z of the visible point
  Raster<double> context;    // C channels per pixel, 0 in holes
  Mask holes;                // 1 where no point survived and no crack fill applied
  Mask filled;               // 1 where a crack shows a neighbour's point
  Raster<std::int64_t> winner;  // source index of the visible point or kNoPoint

  std::size_t hole_count() const;
};

/// Crack filling on a z-buffer where +inf marks empty pixels.
/// A pixel is a crack when, for some opposing neighbour pair, both neighbours are
/// valid and closer than (1 - ratio) * z. Cracks take the mean depth of all such
/// closer neighbours; other pixels are copied unchanged.
Raster<double> zfilter(const Raster<double>& zbuf, const RenderConfig& cfg = {});

/// Repeats zfilter on a depth map until nothing changes (at most `max_passes`), so
/// one point per pixel rendered from the source view keeps every pixel.
DepthMap seal_recesses(const DepthMap& depth, const RenderConfig& cfg = {}, int max_passes = 32);

/// Two-pass splatting: nearest-depth z-buffer, crack filter, then the nearest
/// surviving point per pixel (ties: smaller source index) writes its attributes.
/// A crack whose points were all culled shows the nearest visible point among the
/// closer neighbours that defined it, so foreground magnified past one point per
/// pixel stays closed.
/// Output is identical for every OpenMP thread count.
RenderFrame render(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& K, Size out,
                   const RenderConfig& cfg = {});

std::vector<RenderFrame> render_path(const PointCloud& cloud, const CameraPath& path, const Intrinsics& K, Size out,
                                     const RenderConfig& cfg = {});

}  // namespace kb

namespace kb::serial {

/// Straightforward single-threaded versions of the render kernels, used as
/// references by the tests and the benchmark.
Raster<double> zfilter(const Raster<double>& zbuf, const RenderConfig& cfg = {});
RenderFrame render(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& K, Size out,
                   const RenderConfig& cfg = {});

}  // namespace kb::serial
