#include <algorithm>
#include <limits>
#include <vector>

#include "kenburns/render.hpp"
#include "projection.hpp"

namespace kb::serial {

Raster<double> zfilter(const Raster<double>& zbuf, const RenderConfig& cfg) {
  Raster<double> out(zbuf.size(), 1, 0.0);
  for (int y = 0; y < zbuf.height(); ++y)
    for (int x = 0; x < zbuf.width(); ++x) out(x, y) = detail::filter_pixel(zbuf, x, y, cfg);
  return out;
}

RenderFrame render(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& K, Size out,
                   const RenderConfig& cfg) {
  if (out.width <= 0 || out.height <= 0) throw ValidationError("out", "output size must be positive");
  if (!pose.finite()) throw ValidationError("pose", "camera pose must be finite");
  K.validate(out);

  const double inf = std::numeric_limits<double>::infinity();
  Raster<double> zbuf(out, 1, inf);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double z = 0.0;
    const std::int64_t p = detail::project_point(cloud.positions()[i], pose, K, out, z);
    if (p >= 0) zbuf.storage()[p] = std::min(zbuf.storage()[p], z);
  }

  const Raster<double> zf = cfg.filter ? serial::zfilter(zbuf, cfg) : zbuf;

  const int cc = cloud.context_channels();
  RenderFrame f;
  f.color = ImageBuffer(out.width, out.height);
  f.depth = DepthMap(out.width, out.height, 0.0);
  f.context = Raster<double>(out, std::max(1, cc), 0.0);
  f.holes = Mask(out, 1, 1);
  f.filled = Mask(out, 1, 0);
  f.winner = Raster<std::int64_t>(out, 1, kNoPoint);
  std::vector<std::int64_t> best(out.area(), kNoPoint);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) f.depth.set_valid(x, y, false);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double z = 0.0;
    const std::int64_t p = detail::project_point(cloud.positions()[i], pose, K, out, z);
    if (p < 0) continue;
    const int x = static_cast<int>(p % out.width), y = static_cast<int>(p / out.width);
    if (z > (1.0 + cfg.cull_ratio) * zf(x, y)) continue;
    const ScenePoint pt = cloud.point(i);
    if (f.winner(x, y) != kNoPoint &&
        !detail::nearer(z, pt.source_index, f.depth(x, y), static_cast<std::uint32_t>(f.winner(x, y))))
      continue;
    f.winner(x, y) = pt.source_index;
    best[p] = static_cast<std::int64_t>(i);
    f.depth(x, y) = z;
    f.depth.set_valid(x, y, true);
    f.holes(x, y) = 0;
    for (int c = 0; c < 3; ++c) f.color(x, y, c) = pt.color[c];
    for (int c = 0; c < cc; ++c) f.context(x, y, c) = pt.context[c];
  }

  if (!cfg.filter) return f;
  // Donors are read from a snapshot so that filled cracks never feed each other.
  const RenderFrame visible = f;
  auto depth_at = [&](int p) { return visible.depth.values().storage()[p]; };
  auto source_at = [&](int p) { return static_cast<std::uint32_t>(visible.winner.storage()[p]); };
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      if (best[static_cast<std::size_t>(y) * out.width + x] >= 0) continue;
      const int donor = detail::crack_donor(zbuf, x, y, cfg, best, depth_at, source_at);
      if (donor < 0) continue;
      const int dx = donor % out.width, dy = donor / out.width;
      for (int c = 0; c < 3; ++c) f.color(x, y, c) = visible.color(dx, dy, c);
      for (int c = 0; c < cc; ++c) f.context(x, y, c) = visible.context(dx, dy, c);
      f.depth(x, y) = visible.depth(dx, dy);
      f.depth.set_valid(x, y, true);
      f.winner(x, y) = visible.winner(dx, dy);
      f.holes(x, y) = 0;
      f.filled(x, y) = 1;
    }
  return f;
}

}  // namespace kb::serial
