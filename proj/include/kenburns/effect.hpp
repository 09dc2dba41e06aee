#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kenburns/extend.hpp"
#include "kenburns/pipeline.hpp"
#include "kenburns/render.hpp"

namespace kb {

inline constexpr int kDefaultFrameCount = 45;
inline constexpr int kMaxFrameCount = 10000;
inline constexpr int kMaxOutputDim = 8192;

/// Start and end crops on the source image, frame count and output raster size.
struct EffectSpec {
  CropWindow start;
  CropWindow end;
  int frames = kDefaultFrameCount;
  Size out;

  friend bool operator==(const EffectSpec&, const EffectSpec&) = default;
};

/// Output size used when a spec omits "out": the image size capped at 512 on the long side.
Size default_output_size(Size image);

/// Parses {"v":1, "start":{x,y,w,h}, "end":{x,y,w,h}, "frames":n, "out":{w,h}}.
/// "frames" and "out" are optional. Malformed JSON throws ParseError; every
/// constraint violation is collected into one ValidationError ("end.aspect", "frames", ...).
EffectSpec parse_effect_spec(std::string_view json, Size image);
std::string dump_effect_spec(const EffectSpec& spec);

/// Median depth of the salient instance with the largest overlap with `crop`, or the
/// 25th percentile of the crop's depths when no salient instance overlaps it.
/// `crop` is in depth raster coordinates; a pixel belongs to it when its centre does.
double foreground_depth(const DepthMap& depth, const Rect& crop, const SegMaskSet* masks = nullptr);

/// Camera pose that zooms by image.width / crop.w on the plane at depth d_f and
/// moves points at that depth by the crop-centre offset (in output pixels).
CameraPose crop_to_pose(const CropWindow& crop, Size image, const Intrinsics& K, double d_f);

struct EndViewGrid {
  std::vector<double> scales;  // crop width / image width
  int columns = 8;
  int rows = 8;

  /// Scales 0.95, 0.90, ..., 0.60 on an 8x8 grid of positions.
  static EndViewGrid defaults();
};

struct EndViewCandidate {
  CropWindow crop;
  double scale = 1.0;
  int column = 0;
  int row = 0;
  std::size_t holes = 0;
};

/// Evaluates every grid crop by rendering the cloud at its pose and returns the one
/// with the fewest holes (ties: smaller scale, crop centre closer to the image centre,
/// then row-major position). `K_cloud` are the intrinsics the cloud was built with;
/// frames are rendered at `out`.
EndViewCandidate auto_end_view(const PointCloud& cloud, Size image, const Intrinsics& K_image, double d_f, Size out,
                               const EndViewGrid& grid = EndViewGrid::defaults(), const RenderConfig& cfg = {},
                               std::vector<EndViewCandidate>* all = nullptr);

/// Interactive range: crops down to `max_scale` of the image at any position.
struct InteractiveRange {
  double max_scale = 0.6;  // smallest crop width / image width
};

/// Poses of the scale-`max_scale` crops touching the left, right, top and bottom edges.
InteractiveBounds interactive_bounds(Size image, const Intrinsics& K_image, double d_f,
                                     const InteractiveRange& range = {});

// ---------------------------------------------------------------------------
// Full pipeline

struct SceneConfig {
  ExtendOptions extend;  // also carries the render configuration used for every frame
};

/// Everything derived from one image + depth pair that does not depend on the crops.
struct PreparedScene {
  ImageBuffer image;        // original resolution
  Intrinsics K_image;
  ImageBuffer cloud_image;  // image at cloud resolution
  Intrinsics K_cloud;
  DepthMap depth;           // adjusted and refined, at cloud resolution
  std::optional<SegMaskSet> masks;  // at cloud resolution
  PointCloud cloud;         // unextended
  AdjustReport adjust;

  Size image_size() const { return image.size(); }
  Size cloud_size() const { return cloud_image.size(); }
  /// foreground_depth of `crop` (image coordinates) on the cloud-resolution depth.
  double foreground_depth_of(const CropWindow& crop) const;
};

/// Adjusts the coarse depth with the salient masks, refines it (the refiner's output
/// size is the cloud resolution) and builds the point cloud with context.
/// Masks must have the image's size.
PreparedScene prepare_scene(const ImageBuffer& image, const DepthMap& coarse, const SegMaskSet* masks,
                            const DepthRefiner& refiner, const ContextExtractor& context,
                            const SceneConfig& cfg = {});

/// Camera path of a spec: both poses use the foreground depth of the start crop.
CameraPath effect_path(const PreparedScene& scene, const EffectSpec& spec, double* d_f = nullptr);

/// Extended cloud and camera path for one spec; frames can be rendered in any order.
struct EffectPlan {
  PointCloud cloud;
  CameraPath path;
  Intrinsics K_out;
  Size out;
  double d_f = 0.0;
  ExtendReport extension;
  RenderConfig render;

  RenderFrame frame(int k) const;
};

/// Derives both poses from the crops with d_f taken from the start crop, and extends
/// the cloud at the path ends (at cloud resolution).
EffectPlan plan_effect(const PreparedScene& scene, const EffectSpec& spec, const Inpainter& inpainter,
                       const ContextExtractor& context, const SceneConfig& cfg = {});

/// Renders all frames in order and hands each to `sink`.
void synthesize(const PreparedScene& scene, const EffectSpec& spec, const Inpainter& inpainter,
                const ContextExtractor& context, const std::function<void(int, const RenderFrame&)>& sink,
                const SceneConfig& cfg = {});

/// Convenience: all frame colors.
std::vector<ImageBuffer> synthesize(const PreparedScene& scene, const EffectSpec& spec, const Inpainter& inpainter,
                                    const ContextExtractor& context, const SceneConfig& cfg = {});

/// Resolution at which automatic mode counts holes: half the cloud's long side, so
/// the single-pixel splats stay gap-free under any zoom down to scale 0.5.
Size end_view_eval_size(Size cloud);

/// Start = full image, end = auto_end_view on the unextended cloud (at end_view_eval_size).
EffectSpec automatic_spec(const PreparedScene& scene, int frames, Size out, const EndViewGrid& grid = EndViewGrid::defaults(),
                          const RenderConfig& render = {});

}  // namespace kb
