#include <algorithm>
#include <cmath>

#include "kenburns/extend.hpp"

namespace kb {

Raster<double> extract_context_default(const ImageBuffer& img) {
  img.validate();
  const int w = img.width(), h = img.height();
  Raster<double> lum(w, h, 1, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) lum(x, y) = luma(img(x, y, 0), img(x, y, 1), img(x, y, 2));

  Raster<double> out(w, h, kDefaultContextChannels, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
      for (int c = 0; c < 3; ++c) out(x, y, c) = img(x, y, c);

      const double gx = 0.5 * (lum(xp, y) - lum(xm, y));
      const double gy = 0.5 * (lum(x, yp) - lum(x, ym));
      out(x, y, 3) = std::abs(gx);
      out(x, y, 4) = std::abs(gy);

      // Moments of differences to the centre, so flat regions give exact zeros.
      const double centre = lum(x, y);
      double s = 0.0, s2 = 0.0;
      int n = 0;
      for (int v = ym; v <= yp; ++v)
        for (int u = xm; u <= xp; ++u) {
          const double d = lum(u, v) - centre;
          s += d;
          s2 += d * d;
          ++n;
        }
      const double m = s / n;
      out(x, y, 5) = centre + m;
      out(x, y, 6) = std::sqrt(std::max(0.0, s2 / n - m * m));
      out(x, y, 7) = std::hypot(gx, gy) > kContextEdgeThreshold ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace kb
