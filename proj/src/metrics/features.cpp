#include "kenburns/metrics.hpp"

namespace kb {

namespace {

Raster<double> box_downsample(const Raster<double>& src) {
  const int w = std::max(1, src.width() / 2);
  const int h = std::max(1, src.height() / 2);
  Raster<double> out(w, h, src.channels());
  for (int y = 0; y < h; ++y) {
    const int y0 = std::min(2 * y, src.height() - 1), y1 = std::min(2 * y + 1, src.height() - 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::min(2 * x, src.width() - 1), x1 = std::min(2 * x + 1, src.width() - 1);
      for (int c = 0; c < src.channels(); ++c)
        out(x, y, c) = 0.25 * (src(x0, y0, c) + src(x1, y0, c) + src(x0, y1, c) + src(x1, y1, c));
    }
  }
  return out;
}

void append_level(const Raster<double>& level, std::vector<double>& out) {
  const int w = level.width(), h = level.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = level(x, y, c);
        out.push_back(v);
        out.push_back(x + 1 < w ? level(x + 1, y, c) - v : 0.0);
        out.push_back(y + 1 < h ? level(x, y + 1, c) - v : 0.0);
      }
    }
  }
}

}  // namespace

std::vector<double> PyramidFeatureExtractor::extract(const ImageBuffer& img) const {
  std::vector<double> out;
  Raster<double> level = img.raster();
  for (int l = 0; l < levels_; ++l) {
    if (l > 0) level = box_downsample(level);
    append_level(level, out);
  }
  return out;
}

std::vector<double> IdentityFeatureExtractor::extract(const ImageBuffer& img) const {
  const auto d = img.raster().data();
  return {d.begin(), d.end()};
}

}  // namespace kb
