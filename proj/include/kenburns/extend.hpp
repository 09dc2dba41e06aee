#pragma once

#include <filesystem>
#include <vector>

#include "kenburns/render.hpp"

namespace kb {

// ---------------------------------------------------------------------------
// Context

/// Maps an image to a per-pixel feature raster with a fixed channel count.
class ContextExtractor {
 public:
  virtual ~ContextExtractor() = default;
  virtual int channels() const = 0;
  virtual Raster<double> extract(const ImageBuffer& img) const = 0;
};

inline constexpr int kDefaultContextChannels = 8;
inline constexpr double kContextEdgeThreshold = 0.1;

/// Channels: R, G, B, |dx luma|, |dy luma|, 3x3 mean luma, 3x3 std luma, edge flag.
/// Derivatives are central differences with clamped borders; the 3x3 window only
/// uses in-bounds pixels; the edge flag is 1 where the gradient norm exceeds 0.1.
Raster<double> extract_context_default(const ImageBuffer& img);

class DefaultContextExtractor final : public ContextExtractor {
 public:
  int channels() const override { return kDefaultContextChannels; }
  Raster<double> extract(const ImageBuffer& img) const override { return extract_context_default(img); }
};

// ---------------------------------------------------------------------------
// Inpainting

struct InpaintConfig {
  double single_cluster_spread = 0.05;  // (max - min) / max below this: whole boundary is background
  double tolerance = 1e-6;              // Gauss-Seidel stop, relative to the boundary value range
  int max_iterations = 10000;
};

struct HoleDiagnostics {
  std::size_t pixels = 0;
  std::size_t background_boundary = 0;
  std::size_t foreground_boundary = 0;
  bool enclosed = false;  // no background boundary; filled from the whole boundary instead
  int iterations = 0;
  bool converged = true;
};

struct InpaintResult {
  ImageBuffer color;
  DepthMap depth;  // dense
  std::vector<HoleDiagnostics> holes;  // one per 4-connected hole, in row-major order of first pixel

  std::size_t enclosed_count() const;
};

class Inpainter {
 public:
  virtual ~Inpainter() = default;
  /// Fills the frame's holes. Non-hole pixels are returned bit-exact.
  virtual InpaintResult inpaint(const RenderFrame& frame) const = 0;
};

/// Per connected hole: boundary pixels are split into background and foreground by
/// 1D 2-means on depth (farther cluster is background), then depth and color are
/// diffused over the hole by Gauss-Seidel with the background boundary as the only
/// fixed values. Throws DegenerateInput for a hole without any boundary pixel.
InpaintResult inpaint_default(const RenderFrame& frame, const InpaintConfig& cfg = {});

class LaplaceInpainter final : public Inpainter {
 public:
  explicit LaplaceInpainter(InpaintConfig cfg = {}) : cfg_(cfg) {}
  InpaintResult inpaint(const RenderFrame& frame) const override { return inpaint_default(frame, cfg_); }

 private:
  InpaintConfig cfg_;
};

/// Takes hole values from a precomputed color PNG and depth PFM of the frame's size.
class FileInpainter final : public Inpainter {
 public:
  FileInpainter(std::filesystem::path color_png, std::filesystem::path depth_pfm)
      : color_path_(std::move(color_png)), depth_path_(std::move(depth_pfm)) {}
  InpaintResult inpaint(const RenderFrame& frame) const override;

 private:
  std::filesystem::path color_path_;
  std::filesystem::path depth_path_;
};

// ---------------------------------------------------------------------------
// Extension

struct ExtendOptions {
  RenderConfig render;
  int sweeps = 1;  // passes over the extreme views; stops early once a pass adds nothing
};

struct ExtendStep {
  CameraPose pose;
  std::size_t added = 0;
  std::size_t enclosed_holes = 0;
};

struct ExtendReport {
  std::vector<ExtendStep> steps;
  std::size_t total_added() const;
};

/// Renders at `pose`, inpaints, and appends one inpainted point per hole pixel.
PointCloud extend_cloud(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& K, Size out,
                        const Inpainter& inpainter, const ContextExtractor& context, const ExtendOptions& opt = {},
                        ExtendReport* report = nullptr);

/// Extends at the path start, then at its end.
PointCloud extend_for_path(const PointCloud& cloud, const CameraPath& path, const Intrinsics& K, Size out,
                           const Inpainter& inpainter, const ContextExtractor& context, const ExtendOptions& opt = {},
                           ExtendReport* report = nullptr);

/// The four extreme poses of the interactive crop range.
struct InteractiveBounds {
  CameraPose left, right, top, bottom;
};

/// Extends at left, right, top, bottom in that order.
PointCloud extend_for_interactive(const PointCloud& cloud, const InteractiveBounds& bounds, const Intrinsics& K,
                                  Size out, const Inpainter& inpainter, const ContextExtractor& context,
                                  const ExtendOptions& opt = {}, ExtendReport* report = nullptr);

}  // namespace kb
