#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <omp.h>

#include "kenburns/render.hpp"
#include "projection.hpp"

namespace kb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rows [r0, r1) owned by thread `t` out of `nt`.
void band_of(int t, int nt, int rows, int& r0, int& r1) {
  r0 = static_cast<int>(static_cast<long long>(rows) * t / nt);
  r1 = static_cast<int>(static_cast<long long>(rows) * (t + 1) / nt);
}

void fill_output(RenderFrame& f, const PointCloud& cloud, const std::vector<std::int64_t>& best,
                 const std::vector<double>& best_z, const Raster<double>& zbuf, const RenderConfig& cfg) {
  const int cc = cloud.context_channels();
  const auto colors = cloud.colors();
  const auto ctx = cloud.contexts();
  const auto src = cloud.source_indices();
  const int w = f.color.width(), h = f.color.height();
  auto depth_at = [&](int p) { return best_z[p]; };
  auto source_at = [&](int p) { return src[best[p]]; };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (best[p] < 0) {
        const int donor = cfg.filter ? detail::crack_donor(zbuf, x, y, cfg, best, depth_at, source_at) : -1;
        if (donor < 0) {
          f.holes(x, y) = 1;
          f.depth.set_valid(x, y, false);
          f.depth(x, y) = 0.0;
          continue;
        }
        f.filled(x, y) = 1;
        p = static_cast<std::size_t>(donor);
      }
      const std::int64_t i = best[p];
      for (int c = 0; c < 3; ++c) f.color(x, y, c) = colors[i][c];
      for (int c = 0; c < cc; ++c) f.context(x, y, c) = ctx[static_cast<std::size_t>(i) * cc + c];
      f.depth(x, y) = best_z[p];
      f.winner(x, y) = src[i];
    }
}

}  // namespace

Raster<double> zfilter(const Raster<double>& zbuf, const RenderConfig& cfg) {
  Raster<double> out(zbuf.size(), 1, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < zbuf.height(); ++y)
    for (int x = 0; x < zbuf.width(); ++x) out(x, y) = detail::filter_pixel(zbuf, x, y, cfg);
  return out;
}

DepthMap seal_recesses(const DepthMap& depth, const RenderConfig& cfg, int max_passes) {
  Raster<double> z(depth.size(), 1, kInf);
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y)) z(x, y) = depth(x, y);
  for (int pass = 0; pass < max_passes; ++pass) {
    Raster<double> next = zfilter(z, cfg);
    if (next == z) break;
    z = std::move(next);
  }
  DepthMap out = depth;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y)) out(x, y) = z(x, y);
  return out;
}

RenderFrame render(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& K, Size out,
                   const RenderConfig& cfg) {
  if (out.width <= 0 || out.height <= 0) throw ValidationError("out", "output size must be positive");
  if (!pose.finite()) throw ValidationError("pose", "camera pose must be finite");
  K.validate(out);

  const auto pos = cloud.positions();
  const auto src = cloud.source_indices();
  const std::size_t n = pos.size();
  const std::size_t npix = out.area();

  std::vector<std::int64_t> pix(n);
  std::vector<double> zs(n, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) pix[i] = detail::project_point(pos[i], pose, K, out, zs[i]);

  Raster<double> zbuf(out, 1, kInf);
  std::vector<std::int64_t> best(npix, kNoPoint);
  std::vector<double> best_z(npix, kInf);

  // Each thread owns a band of rows and scans all points in cloud order, so every
  // pixel sees the same update sequence as the serial reference.
#pragma omp parallel
  {
    int r0, r1;
    band_of(omp_get_thread_num(), omp_get_num_threads(), out.height, r0, r1);
    const std::int64_t lo = static_cast<std::int64_t>(r0) * out.width;
    const std::int64_t hi = static_cast<std::int64_t>(r1) * out.width;
    auto& zb = zbuf.storage();
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t p = pix[i];
      if (p >= lo && p < hi && zs[i] < zb[p]) zb[p] = zs[i];
    }
  }

  const Raster<double> zf = cfg.filter ? kb::zfilter(zbuf, cfg) : zbuf;
  const double keep = 1.0 + cfg.cull_ratio;

#pragma omp parallel
  {
    int r0, r1;
    band_of(omp_get_thread_num(), omp_get_num_threads(), out.height, r0, r1);
    const std::int64_t lo = static_cast<std::int64_t>(r0) * out.width;
    const std::int64_t hi = static_cast<std::int64_t>(r1) * out.width;
    const auto& zfd = zf.storage();
    for (std::size_t i = 0; i < n; ++i) {
      const std::int64_t p = pix[i];
      if (p < lo || p >= hi) continue;
      if (zs[i] > keep * zfd[p]) continue;
      const std::int64_t b = best[p];
      if (b < 0 || detail::nearer(zs[i], src[i], best_z[p], src[b])) {
        best[p] = static_cast<std::int64_t>(i);
        best_z[p] = zs[i];
      }
    }
  }

  RenderFrame f;
  f.color = ImageBuffer(out.width, out.height);
  f.depth = DepthMap(out.width, out.height, 0.0);
  f.context = Raster<double>(out, std::max(1, cloud.context_channels()), 0.0);
  f.holes = Mask(out, 1, 0);
  f.filled = Mask(out, 1, 0);
  f.winner = Raster<std::int64_t>(out, 1, kNoPoint);
  fill_output(f, cloud, best, best_z, zbuf, cfg);
  return f;
}

std::vector<RenderFrame> render_path(const PointCloud& cloud, const CameraPath& path, const Intrinsics& K, Size out,
                                     const RenderConfig& cfg) {
  path.validate();
  std::vector<RenderFrame> frames;
  frames.reserve(static_cast<std::size_t>(path.frame_count));
  for (int k = 0; k < path.frame_count; ++k) frames.push_back(render(cloud, path.pose_at(k), K, out, cfg));
  return frames;
}

}  // namespace kb
