#pragma once

// Brute-force references shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>
#include <vector>

#include "fixtures.hpp"
#include "kenburns/effect.hpp"
#include "kenburns/metrics.hpp"
#include "kenburns/pipeline.hpp"

namespace kboracle {

using namespace kb;

inline double si(double a, double b) {
  const double s = std::fabs(a) + std::fabs(b);
  if (s < 1e-12) return 0.0;
  return (b - a) / s;
}

inline double loss_ord(const InverseDepthMap& a, const InverseDepthMap& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) s += std::fabs(a(x, y) - b(x, y));
  return s;
}

inline double loss_grad(const InverseDepthMap& a, const InverseDepthMap& b) {
  double s = 0.0;
  for (int h : {1, 2, 4, 8, 16})
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        if (x + h >= a.width() || y + h >= a.height()) continue;
        const double dx = si(a(x, y), a(x + h, y)) - si(b(x, y), b(x + h, y));
        const double dy = si(a(x, y), a(x, y + h)) - si(b(x, y), b(x, y + h));
        s += std::sqrt(dx * dx + dy * dy);
      }
  return s;
}

inline double loss_color(const ImageBuffer& a, const ImageBuffer& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < 3; ++c) s += std::fabs(a(x, y, c) - b(x, y, c));
  return s;
}

// Largest per-pixel relative deviation between analytic and central-difference gradients.
inline double gradient_check(const InverseDepthMap& xi, const InverseDepthMap& gt, double step) {
  const Raster<double> g = grad_loss_depth(xi, gt);
  double worst = 0.0;
  InverseDepthMap probe = xi;
  for (int y = 0; y < xi.height(); ++y)
    for (int x = 0; x < xi.width(); ++x) {
      const double v = xi(x, y);
      probe(x, y) = v + step;
      const double up = loss_depth(probe, gt);
      probe(x, y) = v - step;
      const double down = loss_depth(probe, gt);
      probe(x, y) = v;
      const double fd = (up - down) / (2 * step);
      const double scale = std::max({std::fabs(fd), std::fabs(g(x, y)), 1e-3});
      worst = std::max(worst, std::fabs(fd - g(x, y)) / scale);
    }
  return worst;
}

struct Pairs {
  std::vector<double> p, g;
};

inline Pairs valid_pairs(const DepthMap& pred, const DepthMap& gt) {
  Pairs out;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x)
      if (pred.valid(x, y) && gt.valid(x, y)) {
        out.p.push_back(pred(x, y));
        out.g.push_back(gt(x, y));
      }
  return out;
}

inline double l1(const Pairs& d, double s, double b) {
  double f = 0.0;
  for (std::size_t i = 0; i < d.p.size(); ++i) f += std::fabs(s * d.p[i] + b - d.g[i]);
  return f;
}

// Exact LAD optimum: some optimal line passes through two samples.
inline double lad_by_pairs(const Pairs& d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.p.size(); ++i)
    for (std::size_t j = i + 1; j < d.p.size(); ++j) {
      if (d.p[i] == d.p[j]) continue;
      const double s = (d.g[j] - d.g[i]) / (d.p[j] - d.p[i]);
      best = std::min(best, l1(d, s, d.g[i] - s * d.p[i]));
    }
  return best;
}

// 400 x 400 grid, re-centred on the best cell and narrowed three times.
inline double lad_by_grid(const Pairs& d, double s0, double b0, double s_span, double b_span) {
  constexpr int n = 400;
  double best = std::numeric_limits<double>::infinity(), bs = s0, bb = b0;
  for (int level = 0; level < 4; ++level) {
    const double cs = bs, cb = bb;
    for (int i = 0; i <= n; ++i) {
      const double s = cs - s_span + 2 * s_span * i / n;
      for (int j = 0; j <= n; ++j) {
        const double b = cb - b_span + 2 * b_span * j / n;
        const double f = l1(d, s, b);
        if (f < best) best = f, bs = s, bb = b;
      }
    }
    s_span *= 16.0 / n;
    b_span *= 16.0 / n;
  }
  return best;
}

inline void fit_fixture(std::mt19937& rng, int w, int h, double outlier_rate, DepthMap& pred, DepthMap& gt) {
  std::uniform_real_distribution<double> u(1.0, 3.0), s(0.5, 2.0), b(-0.5, 0.5), noise(-0.05, 0.05),
      coin(0.0, 1.0), gross(2.0, 8.0);
  const double scale = s(rng), shift = b(rng);
  pred = DepthMap(w, h);
  gt = DepthMap(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      pred(x, y) = u(rng);
      gt(x, y) = scale * pred(x, y) + shift + noise(rng);
      if (coin(rng) < outlier_rate) gt(x, y) += gross(rng);
    }
}

struct OracleMetrics {
  double rel = 0, lg = 0, rms = 0, s1 = 0, s2 = 0, s3 = 0;
};

inline OracleMetrics metrics_oracle(const DepthMap& a, const DepthMap& g) {
  OracleMetrics m;
  int n = 0;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      if (!a.valid(x, y) || !g.valid(x, y)) continue;
      const double d = a(x, y), t = g(x, y);
      const double dc = d < 1e-8 ? 1e-8 : d;
      m.rel += std::fabs(d - t) / t;
      m.lg += std::fabs(std::log10(dc) - std::log10(t));
      m.rms += (d - t) * (d - t);
      const double r = dc / t > t / dc ? dc / t : t / dc;
      m.s1 += r < 1.25 ? 1 : 0;
      m.s2 += r < 1.5625 ? 1 : 0;
      m.s3 += r < 1.953125 ? 1 : 0;
      ++n;
    }
  m.rel /= n, m.lg /= n, m.rms = std::sqrt(m.rms / n), m.s1 /= n, m.s2 /= n, m.s3 /= n;
  return m;
}

// Depth of plane n . X = o along the ray of pixel (x, y).
inline double plane_depth(const Vec3& n, double o, const Intrinsics& K, int x, int y) {
  const double rx = (x + 0.5 - K.cx) / K.fx, ry = (y + 0.5 - K.cy) / K.fy;
  return o / (n[0] * rx + n[1] * ry + n[2]);
}

inline Vec3 normalized(Vec3 v) {
  const double l = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / l, v[1] / l, v[2] / l};
}

// Brute-force truncated chamfer between two masks.
inline BoundaryError chamfer_oracle(const Mask& pred, const Mask& gt, double T) {
  auto directed = [T](const Mask& from, const Mask& to) {
    double sum = 0;
    int n = 0;
    for (int y = 0; y < from.height(); ++y)
      for (int x = 0; x < from.width(); ++x) {
        if (!from(x, y)) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int v = 0; v < to.height(); ++v)
          for (int u = 0; u < to.width(); ++u)
            if (to(u, v)) best = std::min(best, std::hypot(u - x, v - y));
        sum += std::min(best, T);
        ++n;
      }
    return n ? sum / n : 0.0;
  };
  return {directed(pred, gt), directed(gt, pred)};
}

inline DepthMap step_depth(int w, int h, int column, double near, double far) {
  DepthMap d(w, h, far);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < column; ++x) d(x, y) = near;
  return d;
}

inline Raster<double> zfilter_oracle(const Raster<double>& zb, double ratio, bool diagonals) {
  static const int pairs[4][4] = {{-1, 0, 1, 0}, {0, -1, 0, 1}, {-1, -1, 1, 1}, {1, -1, -1, 1}};
  Raster<double> out = zb;
  for (int y = 0; y < zb.height(); ++y)
    for (int x = 0; x < zb.width(); ++x) {
      const double z = zb(x, y);
      if (std::isinf(z)) continue;
      double sum = 0.0;
      int n = 0;
      for (int p = 0; p < (diagonals ? 4 : 2); ++p) {
        const int ax = x + pairs[p][0], ay = y + pairs[p][1], bx = x + pairs[p][2], by = y + pairs[p][3];
        if (!zb.contains(ax, ay) || !zb.contains(bx, by)) continue;
        const double a = zb(ax, ay), b = zb(bx, by);
        if (std::isfinite(a) && std::isfinite(b) && a < (1 - ratio) * z && b < (1 - ratio) * z) {
          sum += a + b;
          n += 2;
        }
      }
      if (n) out(x, y) = sum / n;
    }
  return out;
}

inline PointCloud plane_cloud(Size s, double depth) {
  return build_point_cloud(kbtest::coordinate_image(s.width, s.height), DepthMap(s.width, s.height, depth),
                           Intrinsics::default_for(s), {});
}

// Column where source pixel `index` shows up without being a crack fill, or -1.
inline int column_of(const RenderFrame& f, std::int64_t index) {
  for (int y = 0; y < f.winner.height(); ++y)
    for (int x = 0; x < f.winner.width(); ++x)
      if (f.winner(x, y) == index && !f.filled(x, y)) return x;
  return -1;
}

struct OracleCandidate {
  CropWindow crop;
  double scale;
  int row, column;
  std::size_t holes;
};

// Independent enumeration of the end-view grid and the stated selection order.
inline OracleCandidate end_view_oracle(const PointCloud& cloud, Size image, const Intrinsics& K, double d_f, Size out,
                          const EndViewGrid& g) {
  std::vector<OracleCandidate> all;
  for (double s : g.scales)
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.columns; ++c) {
        const double w = s * image.width, h = s * image.height;
        const double x = g.columns > 1 ? (image.width - w) * c / (g.columns - 1) : 0.5 * (image.width - w);
        const double y = g.rows > 1 ? (image.height - h) * r / (g.rows - 1) : 0.5 * (image.height - h);
        const CropWindow crop = CropWindow::create(x, y, w, h, image);
        const RenderFrame f = render(cloud, crop_to_pose(crop, image, K, d_f), K.rescaled(image, out), out);
        all.push_back({crop, s, r, c, f.hole_count()});
      }
  auto key = [&](const OracleCandidate& e) {
    const double dx = e.crop.x() + 0.5 * e.crop.w() - 0.5 * image.width;
    const double dy = e.crop.y() + 0.5 * e.crop.h() - 0.5 * image.height;
    return std::make_tuple(e.holes, e.scale, dx * dx + dy * dy, e.row, e.column);
  };
  std::sort(all.begin(), all.end(), [&](const OracleCandidate& a, const OracleCandidate& b) { return key(a) < key(b); });
  return all.front();
}

// Labels are exclusive per pixel, so each salient pixel takes its own instance's strip minimum.
inline DepthMap adjust_oracle(const DepthMap& d, const SegMaskSet& m) {
  DepthMap out = d;
  for (int k = 1; k <= m.instance_count(); ++k) {
    if (!m.is_salient(k)) continue;
    int ymin = d.height(), ymax = -1;
    for (int y = 0; y < d.height(); ++y)
      for (int x = 0; x < d.width(); ++x)
        if (m.labels(x, y) == k) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    if (ymax < 0) continue;
    const int box = ymax - ymin + 1;
    int rows = box / 10 + (box % 10 ? 1 : 0);
    if (rows < 1) rows = 1;
    double lo = std::numeric_limits<double>::infinity();
    for (int y = ymax - rows + 1; y <= ymax; ++y)
      for (int x = 0; x < d.width(); ++x)
        if (m.labels(x, y) == k && d.valid(x, y)) lo = std::min(lo, d(x, y));
    if (lo == std::numeric_limits<double>::infinity()) continue;
    for (int y = 0; y < d.height(); ++y)
      for (int x = 0; x < d.width(); ++x)
        if (m.labels(x, y) == k) {
          out(x, y) = lo;
          out.set_valid(x, y, true);
        }
  }
  return out;
}

// Holes in the lateral end view: the strip that was behind the foreground and the
// 8 columns that enter the view on the right.
inline std::size_t lateral_disocclusion_count() {
  const kbtest::TwoPlane s;
  const int bg_shift = 8, fg_shift = 16;
  std::size_t n = 0;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const bool fg = s.in_fg(x + fg_shift, y);
      const int bx = x + bg_shift;
      const bool bg = bx < s.width && !s.in_fg(bx, y);
      n += !fg && !bg;
    }
  return n;
}

}  // namespace kboracle
