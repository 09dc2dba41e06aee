#include <cmath>
#include <string>

#include "kenburns/extend.hpp"

namespace kb {

std::size_t ExtendReport::total_added() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.added;
  return n;
}

PointCloud extend_cloud(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& K, Size out,
                        const Inpainter& inpainter, const ContextExtractor& context, const ExtendOptions& opt,
                        ExtendReport* report) {
  const RenderFrame frame = render(cloud, pose, K, out, opt.render);
  ExtendStep step{pose, 0, 0};
  if (frame.hole_count() == 0) {
    if (report) report->steps.push_back(step);
    return cloud;
  }

  const InpaintResult filled = inpainter.inpaint(frame);
  step.enclosed_holes = filled.enclosed_count();

  const int cc = cloud.context_channels();
  Raster<double> ctx;
  if (cc > 0) {
    ctx = context.extract(filled.color);
    if (ctx.channels() != cc || ctx.size() != out)
      throw DimensionMismatch("context extractor produced " + std::to_string(ctx.channels()) + " channels at " +
                              to_string(ctx.size()) + ", cloud expects " + std::to_string(cc) + " at " +
                              to_string(out));
  }

  PointCloud extended = cloud;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      if (!frame.holes(x, y)) continue;
      const double z = filled.depth(x, y);
      if (!(std::isfinite(z) && z > 0.0))
        throw ValidationError("depth(" + std::to_string(x) + ", " + std::to_string(y) + ")",
                              "inpainted depth must be positive and finite");
      const Vec3 p{pose.tx + z * (x + 0.5 - K.cx) / K.fx, pose.ty + z * (y + 0.5 - K.cy) / K.fy, pose.tz + z};
      const Vec3 c{filled.color(x, y, 0), filled.color(x, y, 1), filled.color(x, y, 2)};
      std::span<const double> cv;
      if (cc > 0) cv = std::span<const double>(ctx.data()).subspan(ctx.index(x, y), static_cast<std::size_t>(cc));
      extended.append(p, c, cv, PointOrigin::inpainted);
      ++step.added;
    }
  if (report) report->steps.push_back(step);
  return extended;
}

namespace {

PointCloud extend_sequence(const PointCloud& cloud, const std::vector<CameraPose>& poses, const Intrinsics& K,
                           Size out, const Inpainter& inpainter, const ContextExtractor& context,
                           const ExtendOptions& opt, ExtendReport* report) {
  if (opt.sweeps < 1) throw ValidationError("sweeps", "at least one extension sweep is required");
  for (const auto& p : poses)
    if (!p.finite()) throw ValidationError("pose", "camera pose must be finite");
  PointCloud current = cloud;
  for (int s = 0; s < opt.sweeps; ++s) {
    const std::size_t before = current.size();
    for (const auto& p : poses) current = extend_cloud(current, p, K, out, inpainter, context, opt, report);
    if (current.size() == before) break;
  }
  return current;
}

}  // namespace

PointCloud extend_for_path(const PointCloud& cloud, const CameraPath& path, const Intrinsics& K, Size out,
                           const Inpainter& inpainter, const ContextExtractor& context, const ExtendOptions& opt,
                           ExtendReport* report) {
  path.validate();
  return extend_sequence(cloud, {path.start, path.end}, K, out, inpainter, context, opt, report);
}

PointCloud extend_for_interactive(const PointCloud& cloud, const InteractiveBounds& b, const Intrinsics& K,
                                  Size out, const Inpainter& inpainter, const ContextExtractor& context,
                                  const ExtendOptions& opt, ExtendReport* report) {
  return extend_sequence(cloud, {b.left, b.right, b.top, b.bottom}, K, out, inpainter, context, opt, report);
}

}  // namespace kb
