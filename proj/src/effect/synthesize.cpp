#include <algorithm>

#include "kenburns/effect.hpp"

namespace kb {

double PreparedScene::foreground_depth_of(const CropWindow& crop) const {
  return foreground_depth(depth, crop.scaled_to(image_size(), cloud_size()), masks ? &*masks : nullptr);
}

PreparedScene prepare_scene(const ImageBuffer& image, const DepthMap& coarse, const SegMaskSet* masks,
                            const DepthRefiner& refiner, const ContextExtractor& context, const SceneConfig& cfg) {
  image.validate();
  coarse.validate();
  check_paired(coarse, image.size());

  PreparedScene scene;
  scene.image = image;
  scene.K_image = Intrinsics::default_for(image.size());

  DepthMap adjusted = coarse;
  if (masks) {
    masks->validate();
    if (masks->size() != image.size())
      throw DimensionMismatch("masks " + to_string(masks->size()) + " do not match image " + to_string(image.size()));
    const SegMaskSet coarse_masks{resize_nearest(masks->labels, coarse.size()), masks->salient};
    adjusted = adjust_depth(coarse, coarse_masks, &scene.adjust);
  }

  scene.depth = refiner.refine(image, adjusted);
  scene.depth.validate();
  scene.depth = seal_recesses(scene.depth, cfg.extend.render);
  const Size cs = scene.depth.size();
  if (cs.width > image.width() || cs.height > image.height())
    throw DimensionMismatch("refined depth " + to_string(cs) + " is larger than the image " + to_string(image.size()));
  check_paired(scene.depth, image.size());

  scene.cloud_image = cs == image.size() ? image : ImageBuffer(resize_bilinear(image.raster(), cs));
  scene.K_cloud = scene.K_image.rescaled(image.size(), cs);
  if (masks) scene.masks = SegMaskSet{resize_nearest(masks->labels, cs), masks->salient};

  Raster<double> ctx;
  if (context.channels() > 0) ctx = context.extract(scene.cloud_image);
  scene.cloud = build_point_cloud(scene.cloud_image, scene.depth, scene.K_cloud, ctx);
  return scene;
}

RenderFrame EffectPlan::frame(int k) const {
  if (k < 0 || k >= path.frame_count) throw ValidationError("frame", "frame index out of range");
  return kb::render(cloud, path.pose_at(k), K_out, out, render);
}

CameraPath effect_path(const PreparedScene& scene, const EffectSpec& spec, double* d_f_out) {
  const double d_f = scene.foreground_depth_of(spec.start);
  if (d_f_out) *d_f_out = d_f;
  const Size img = scene.image_size();
  return {crop_to_pose(spec.start, img, scene.K_image, d_f), crop_to_pose(spec.end, img, scene.K_image, d_f),
          spec.frames};
}

EffectPlan plan_effect(const PreparedScene& scene, const EffectSpec& spec, const Inpainter& inpainter,
                       const ContextExtractor& context, const SceneConfig& cfg) {
  const Size img = scene.image_size();
  std::vector<FieldError> errs = check_crop(spec.start.x(), spec.start.y(), spec.start.w(), spec.start.h(), img, "start.");
  auto end_errs = check_crop(spec.end.x(), spec.end.y(), spec.end.w(), spec.end.h(), img, "end.");
  errs.insert(errs.end(), end_errs.begin(), end_errs.end());
  if (spec.frames < 1 || spec.frames > kMaxFrameCount) errs.push_back({"frames", "out of range"});
  if (spec.out.width < 1 || spec.out.height < 1 || spec.out.width > kMaxOutputDim || spec.out.height > kMaxOutputDim)
    errs.push_back({"out", "output size out of range"});
  if (!errs.empty()) throw ValidationError(std::move(errs));

  EffectPlan plan;
  plan.path = effect_path(scene, spec, &plan.d_f);
  plan.cloud = extend_for_path(scene.cloud, plan.path, scene.K_cloud, scene.cloud_size(), inpainter, context,
                               cfg.extend, &plan.extension);
  plan.out = spec.out;
  plan.K_out = scene.K_image.rescaled(img, spec.out);
  plan.render = cfg.extend.render;
  return plan;
}

void synthesize(const PreparedScene& scene, const EffectSpec& spec, const Inpainter& inpainter,
                const ContextExtractor& context, const std::function<void(int, const RenderFrame&)>& sink,
                const SceneConfig& cfg) {
  const EffectPlan plan = plan_effect(scene, spec, inpainter, context, cfg);
  for (int k = 0; k < spec.frames; ++k) sink(k, plan.frame(k));
}

std::vector<ImageBuffer> synthesize(const PreparedScene& scene, const EffectSpec& spec, const Inpainter& inpainter,
                                    const ContextExtractor& context, const SceneConfig& cfg) {
  std::vector<ImageBuffer> frames;
  frames.reserve(static_cast<std::size_t>(spec.frames));
  synthesize(scene, spec, inpainter, context, [&](int, const RenderFrame& f) { frames.push_back(f.color); }, cfg);
  return frames;
}

Size end_view_eval_size(Size cloud) {
  return refine_target_size(cloud, std::max(1, std::max(cloud.width, cloud.height) / 2));
}

EffectSpec automatic_spec(const PreparedScene& scene, int frames, Size out, const EndViewGrid& grid,
                          const RenderConfig& render) {
  const CropWindow start = CropWindow::full(scene.image_size());
  const double d_f = scene.foreground_depth_of(start);
  const EndViewCandidate end = auto_end_view(scene.cloud, scene.image_size(), scene.K_image, d_f,
                                             end_view_eval_size(scene.cloud_size()), grid, render);
  return {start, end.crop, frames, out};
}

}  // namespace kb
