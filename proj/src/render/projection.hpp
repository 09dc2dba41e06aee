#pragma once

#include <cmath>
#include <array>
#include <cstdint>
#include <vector>

#include "kenburns/render.hpp"

namespace kb::detail {

inline constexpr double kNearPlane = 1e-6;

/// Pixel index hit by a point (or -1) and its camera-space depth. Shared by the
/// parallel and serial renderers so both perform identical arithmetic.
inline std::int64_t project_point(const Vec3& p, const CameraPose& pose, const Intrinsics& K, Size out,
                                  double& z_out) {
  const double z = p[2] - pose.tz;
  if (!(z > kNearPlane)) return -1;
  const double u = K.fx * (p[0] - pose.tx) / z + K.cx;
  const double v = K.fy * (p[1] - pose.ty) / z + K.cy;
  if (!(u >= 0.0 && v >= 0.0 && u < out.width && v < out.height)) return -1;
  const auto col = static_cast<std::int64_t>(u);
  const auto row = static_cast<std::int64_t>(v);
  if (col >= out.width || row >= out.height) return -1;
  z_out = z;
  return row * out.width + col;
}

/// Strict total order used for visibility: nearer first, then smaller source index.
inline bool nearer(double za, std::uint32_t ia, double zb, std::uint32_t ib) {
  return za < zb || (za == zb && ia < ib);
}

/// Flat indices of the closer neighbours that make (x, y) a crack; returns their count.
inline int crack_neighbours(const Raster<double>& zb, int x, int y, const RenderConfig& cfg, std::array<int, 8>& out) {
  const double z = zb(x, y);
  if (!std::isfinite(z)) return 0;
  static constexpr int pairs[4][4] = {{-1, 0, 1, 0}, {0, -1, 0, 1}, {-1, -1, 1, 1}, {1, -1, -1, 1}};
  const int npairs = cfg.diagonal_pairs ? 4 : 2;
  const double limit = (1.0 - cfg.crack_ratio) * z;
  int count = 0;
  for (int k = 0; k < npairs; ++k) {
    const int ax = x + pairs[k][0], ay = y + pairs[k][1];
    const int bx = x + pairs[k][2], by = y + pairs[k][3];
    if (!zb.contains(ax, ay) || !zb.contains(bx, by)) continue;
    const double a = zb(ax, ay), b = zb(bx, by);
    if (std::isfinite(a) && std::isfinite(b) && a < limit && b < limit) {
      out[count++] = ay * zb.width() + ax;
      out[count++] = by * zb.width() + bx;
    }
  }
  return count;
}

/// Crack fill value for one pixel; z unchanged when it is not a crack.
inline double filter_pixel(const Raster<double>& zb, int x, int y, const RenderConfig& cfg) {
  std::array<int, 8> nb;
  const int n = crack_neighbours(zb, x, y, cfg, nb);
  if (n == 0) return zb(x, y);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += zb.storage()[nb[i]];
  return sum / n;
}

/// For a crack pixel that lost all its points: the flat index of the closer
/// neighbour whose visible point is nearest (ties: smaller source index), or -1.
template <class Depth, class Source>
int crack_donor(const Raster<double>& zb, int x, int y, const RenderConfig& cfg, const std::vector<std::int64_t>& best,
                Depth depth_at, Source source_at) {
  std::array<int, 8> nb;
  const int n = crack_neighbours(zb, x, y, cfg, nb);
  int donor = -1;
  for (int i = 0; i < n; ++i) {
    if (best[nb[i]] < 0) continue;
    if (donor < 0 || nearer(depth_at(nb[i]), source_at(nb[i]), depth_at(donor), source_at(donor))) donor = nb[i];
  }
  return donor;
}

}  // namespace kb::detail
