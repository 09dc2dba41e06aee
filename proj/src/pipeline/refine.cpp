#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kenburns/pipeline.hpp"

namespace kb {

Size refine_target_size(Size img, int max_dim) {
  if (std::max(img.width, img.height) <= max_dim) return img;
  return fit_max_dim(img, max_dim);
}

namespace {

Mask discontinuities(const Raster<double>& n, double jump) {
  Mask disc(n.size(), 1, 0);
  auto differs = [jump](double a, double b) { return std::abs(a - b) > jump * std::min(a, b); };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < n.height(); ++y)
    for (int x = 0; x < n.width(); ++x) {
      const double v = n(x, y);
      if ((x > 0 && differs(v, n(x - 1, y))) || (x + 1 < n.width() && differs(v, n(x + 1, y))) ||
          (y > 0 && differs(v, n(x, y - 1))) || (y + 1 < n.height() && differs(v, n(x, y + 1))))
        disc(x, y) = 1;
    }
  return disc;
}

// Chebyshev dilation as two separable running-max passes.
Mask dilate(const Mask& m, int r) {
  const int w = m.width(), h = m.height();
  Mask tmp(m.size(), 1, 0), out(m.size(), 1, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (m(x, y))
        for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) tmp(dx, y) = 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (tmp(x, y))
        for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) out(x, dy) = 1;
  return out;
}

double median_of(std::vector<double>& v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

DepthMap refine_default(const ImageBuffer& img, const DepthMap& coarse, const RefineConfig& cfg) {
  if (!coarse.dense()) throw ValidationError("coarse", "refinement requires a dense depth map");
  check_paired(coarse, img.size());
  const Size target = refine_target_size(img.size(), cfg.max_dim);
  const ImageBuffer guide = img.size() == target ? img : ImageBuffer(resize_bilinear(img.raster(), target));

  const Raster<double> up = resize_bilinear(coarse.values(), target);
  const Mask band = dilate(discontinuities(resize_nearest(coarse.values(), target), cfg.jump), cfg.radius);

  Raster<double> out = up;
  const int reach = 2 * cfg.radius + 1;
  const int w = target.width, h = target.height;

#pragma omp parallel
  {
    std::vector<double> near_d, far_d;
#pragma omp for schedule(dynamic, 8)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!band(x, y)) continue;
        const int x0 = std::max(0, x - reach), x1 = std::min(w - 1, x + reach);
        const int y0 = std::max(0, y - reach), y1 = std::min(h - 1, y + reach);

        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int v = y0; v <= y1; ++v)
          for (int u = x0; u <= x1; ++u)
            if (!band(u, v)) {
              lo = std::min(lo, up(u, v));
              hi = std::max(hi, up(u, v));
            }
        if (!(lo <= hi) || lo == hi) continue;  // no context, or only one side visible

        const double mid = 0.5 * (lo + hi);
        near_d.clear();
        far_d.clear();
        double near_c[3] = {0, 0, 0}, far_c[3] = {0, 0, 0};
        for (int v = y0; v <= y1; ++v)
          for (int u = x0; u <= x1; ++u) {
            if (band(u, v)) continue;
            const bool is_near = up(u, v) <= mid;
            (is_near ? near_d : far_d).push_back(up(u, v));
            double* acc = is_near ? near_c : far_c;
            for (int c = 0; c < 3; ++c) acc[c] += guide(u, v, c);
          }
        double dn = 0.0, df = 0.0;
        for (int c = 0; c < 3; ++c) {
          const double en = guide(x, y, c) - near_c[c] / static_cast<double>(near_d.size());
          const double ef = guide(x, y, c) - far_c[c] / static_cast<double>(far_d.size());
          dn += en * en;
          df += ef * ef;
        }
        out(x, y) = dn <= df ? median_of(near_d) : median_of(far_d);
      }
    }
  }
  return DepthMap(std::move(out));
}

DepthMap DefaultRefiner::refine(const ImageBuffer& img, const DepthMap& coarse) const {
  return refine_default(img, coarse, cfg_);
}

}  // namespace kb
