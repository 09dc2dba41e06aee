#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "kenburns/core.hpp"
#include "kenburns/extend.hpp"
#include "kenburns/render.hpp"

namespace kbtest {

using namespace kb;

/// Every pixel gets a distinct color so a rendered pixel identifies its source.
inline ImageBuffer coordinate_image(int w, int h) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img(x, y, 0) = (x + 0.5) / w;
      img(x, y, 1) = (y + 0.5) / h;
      img(x, y, 2) = ((x * 7 + y * 13) % 17) / 16.0;
    }
  return img;
}

inline ImageBuffer random_image(int w, int h, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(w, h);
  for (double& v : img.raster().storage()) v = u(rng);
  return img;
}

inline DepthMap random_depth(int w, int h, std::mt19937& rng, double lo = 0.5, double hi = 10.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DepthMap d(w, h);
  for (double& v : d.values().storage()) v = u(rng);
  return d;
}

inline InverseDepthMap random_inverse(int w, int h, std::mt19937& rng, double lo = 0.1, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  InverseDepthMap xi(w, h);
  for (double& v : xi.values().storage()) v = u(rng);
  return xi;
}

/// Background plane at `bg` with a rectangle [x0, x1) x [y0, y1) at `fg`.
struct TwoPlane {
  int width = 64;
  int height = 64;
  double focal = 64.0;
  double bg = 5.0;
  double fg = 2.5;
  int x0 = 24, x1 = 40, y0 = 16, y1 = 48;

  Intrinsics K() const { return {focal, focal, 0.5 * width, 0.5 * height}; }
  Size size() const { return {width, height}; }
  bool in_fg(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

  DepthMap depth() const {
    DepthMap d(width, height, bg);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) d(x, y) = fg;
    return d;
  }
  ImageBuffer image() const { return coordinate_image(width, height); }
  PointCloud cloud(int context_channels = 0) const {
    Raster<double> ctx;
    if (context_channels > 0) ctx = Raster<double>(size(), context_channels, 0.25);
    return build_point_cloud(image(), depth(), K(), ctx);
  }
  PointCloud cloud_with_context() const {
    return build_point_cloud(image(), depth(), K(), extract_context_default(image()));
  }
};

/// Lateral fixture with the lattice property: the end shift is 8 px on the background
/// and 16 px on the foreground, and no intermediate frame (k / 44) puts a point on a
/// pixel boundary.
inline TwoPlane lateral_fixture() { return TwoPlane{}; }
inline constexpr double kLateralShift = 0.625;
inline constexpr int kLateralFrames = 45;

/// Brute-force depth-only z-buffer (+inf where empty).
inline Raster<double> oracle_zbuffer(const PointCloud& cloud, const CameraPose& pose, const Intrinsics& K, Size out) {
  Raster<double> zb(out, 1, std::numeric_limits<double>::infinity());
  for (const Vec3& p : cloud.positions()) {
    const double z = p[2] - pose.tz;
    if (!(z > 1e-6)) continue;
    const double u = std::floor(K.fx * (p[0] - pose.tx) / z + K.cx);
    const double v = std::floor(K.fy * (p[1] - pose.ty) / z + K.cy);
    if (u < 0 || v < 0 || u >= out.width || v >= out.height) continue;
    double& cell = zb(static_cast<int>(u), static_cast<int>(v));
    cell = std::min(cell, z);
  }
  return zb;
}

}  // namespace kbtest
