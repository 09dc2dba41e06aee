#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kenburns/core.hpp"

namespace kb {

/// Produces a coarse depth estimate for an image, at max dimension 512.
class DepthProvider {
 public:
  virtual ~DepthProvider() = default;
  virtual DepthMap estimate(const ImageBuffer& img) const = 0;
};

/// Reads an externally computed depth map and resizes it to the working resolution.
class FileDepthProvider final : public DepthProvider {
 public:
  explicit FileDepthProvider(std::filesystem::path path, int max_dim = 512)
      : path_(std::move(path)), max_dim_(max_dim) {}
  DepthMap estimate(const ImageBuffer& img) const override;

 private:
  std::filesystem::path path_;
  int max_dim_;
};

/// Wraps a depth map that is already in memory (e.g. an upload).
class StaticDepthProvider final : public DepthProvider {
 public:
  explicit StaticDepthProvider(DepthMap depth, int max_dim = 512) : depth_(std::move(depth)), max_dim_(max_dim) {}
  DepthMap estimate(const ImageBuffer& img) const override;

 private:
  DepthMap depth_;
  int max_dim_;
};

/// Deterministic scene without any model: a ground plane below the horizon, a far
/// backdrop above it, and a fronto-parallel band standing on the ground.
class SyntheticDepthProvider final : public DepthProvider {
 public:
  explicit SyntheticDepthProvider(int max_dim = 512) : max_dim_(max_dim) {}
  DepthMap estimate(const ImageBuffer& img) const override;

 private:
  int max_dim_;
};

struct RefineConfig {
  int max_dim = 1024;          // output resolution cap; smaller images keep their size
  int radius = 4;              // snap band half-width in output pixels
  double jump = 0.05;          // relative depth jump that counts as a discontinuity
};

/// Upsamples a coarse depth map guided by a high resolution image.
/// Output values stay within the coarse value range.
class DepthRefiner {
 public:
  virtual ~DepthRefiner() = default;
  virtual DepthMap refine(const ImageBuffer& img, const DepthMap& coarse) const = 0;
};

/// Output size for refining against `img`: its size, capped at `max_dim` on the long side.
Size refine_target_size(Size img, int max_dim);

/// Bilinear upsampling followed by a color-guided snap near depth discontinuities.
///
/// Discontinuities are located on the nearest-neighbour upsampled coarse map
/// (4-neighbours differing by more than `jump` relative to the smaller value).
/// Pixels within `radius` (Chebyshev) of one form the snap band. Each band pixel
/// looks at the non-band pixels within 2*radius+1, splits them at the midpoint of
/// their depth range into a near and a far side, and takes the median depth of
/// the side whose mean color is closer in RGB. Everything outside the band is the
/// plain bilinear result.
DepthMap refine_default(const ImageBuffer& img, const DepthMap& coarse, const RefineConfig& cfg = {});

class DefaultRefiner final : public DepthRefiner {
 public:
  explicit DefaultRefiner(RefineConfig cfg = {}) : cfg_(cfg) {}
  DepthMap refine(const ImageBuffer& img, const DepthMap& coarse) const override;

 private:
  RefineConfig cfg_;
};

/// Uses a precomputed refined depth file; it must match the refine target size.
class FileRefiner final : public DepthRefiner {
 public:
  explicit FileRefiner(std::filesystem::path path, int max_dim = 1024) : path_(std::move(path)), max_dim_(max_dim) {}
  DepthMap refine(const ImageBuffer& img, const DepthMap& coarse) const override;

 private:
  std::filesystem::path path_;
  int max_dim_;
};

struct AdjustReport {
  std::vector<std::string> warnings;
  int adjusted_instances = 0;
};

/// Flattens every salient instance onto the smallest depth found in its bottom strip
/// (lowest 10% of the mask's bounding box, at least one row). Instances are applied
/// farthest strip first so nearer objects win where masks overlap.
DepthMap adjust_depth(const DepthMap& depth, const SegMaskSet& masks, AdjustReport* report = nullptr);

/// Throws DimensionMismatch unless `depth` has the aspect ratio of `image` up to one pixel of rounding.
void check_paired(const DepthMap& depth, Size image);

}  // namespace kb
