#include <cmath>
#include <vector>

#include "kenburns/metrics.hpp"

namespace kb {

namespace {

void require_same_size(Size a, Size b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string(what) + ": " + to_string(a) + " vs " + to_string(b));
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// (b - a) / (|a| + |b|), zero inside the guard.
double si_diff(double a, double b) {
  const double s = std::abs(a) + std::abs(b);
  return s < kGradientGuard ? 0.0 : (b - a) / s;
}

// Partial derivatives of si_diff with respect to a and b.
void si_diff_partials(double a, double b, double& da, double& db) {
  const double s = std::abs(a) + std::abs(b);
  if (s < kGradientGuard) {
    da = db = 0.0;
    return;
  }
  const double n = b - a;
  const double s2 = s * s;
  da = (-s - n * sign(a)) / s2;
  db = (s - n * sign(b)) / s2;
}

// Unit direction of g_h[xi] - g_h[xi_gt] at every pixel valid for spacing h (0 elsewhere).
struct TermDirections {
  Raster<double> ux;
  Raster<double> uy;
};

TermDirections term_directions(const Raster<double>& a, const Raster<double>& b, int h) {
  const int w = a.width(), ht = a.height();
  TermDirections t{Raster<double>(w, ht, 1, 0.0), Raster<double>(w, ht, 1, 0.0)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < ht - h; ++y) {
    for (int x = 0; x < w - h; ++x) {
      const double dx = si_diff(a(x, y), a(x + h, y)) - si_diff(b(x, y), b(x + h, y));
      const double dy = si_diff(a(x, y), a(x, y + h)) - si_diff(b(x, y), b(x, y + h));
      const double n = std::hypot(dx, dy);
      if (n > 0.0) {
        t.ux(x, y) = dx / n;
        t.uy(x, y) = dy / n;
      }
    }
  }
  return t;
}

}  // namespace

GradientField scale_invariant_gradient(const InverseDepthMap& f, int h) {
  if (h < 1) throw ValidationError("spacing", "must be >= 1");
  const int w = f.width(), ht = f.height();
  GradientField g{h, Raster<double>(w, ht, 1, 0.0), Raster<double>(w, ht, 1, 0.0), Mask(w, ht, 1, 0)};
#pragma omp parallel for schedule(static)
  for (int y = 0; y < ht - h; ++y) {
    for (int x = 0; x < w - h; ++x) {
      g.gx(x, y) = si_diff(f(x, y), f(x + h, y));
      g.gy(x, y) = si_diff(f(x, y), f(x, y + h));
      g.valid(x, y) = 1;
    }
  }
  return g;
}

double loss_ord(const InverseDepthMap& xi, const InverseDepthMap& xi_gt) {
  require_same_size(xi.size(), xi_gt.size(), "loss_ord");
  const auto a = xi.values().data();
  const auto b = xi_gt.values().data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

double loss_grad(const InverseDepthMap& xi, const InverseDepthMap& xi_gt) {
  require_same_size(xi.size(), xi_gt.size(), "loss_grad");
  const auto& a = xi.values();
  const auto& b = xi_gt.values();
  const int w = a.width(), ht = a.height();
  std::vector<double> row_sums(static_cast<std::size_t>(std::max(ht, 0)));
  double total = 0.0;
  for (int h : kGradientSpacings) {
    if (h >= w || h >= ht) continue;
    // Rows are reduced independently, then summed in row order so the result
    // does not depend on the thread count.
#pragma omp parallel for schedule(static)
    for (int y = 0; y < ht - h; ++y) {
      double s = 0.0;
      for (int x = 0; x < w - h; ++x) {
        const double dx = si_diff(a(x, y), a(x + h, y)) - si_diff(b(x, y), b(x + h, y));
        const double dy = si_diff(a(x, y), a(x, y + h)) - si_diff(b(x, y), b(x, y + h));
        s += std::hypot(dx, dy);
      }
      row_sums[y] = s;
    }
    for (int y = 0; y < ht - h; ++y) total += row_sums[y];
  }
  return total;
}

double loss_depth(const InverseDepthMap& xi, const InverseDepthMap& xi_gt) {
  return kOrdWeight * loss_ord(xi, xi_gt) + loss_grad(xi, xi_gt);
}

Raster<double> grad_loss_depth(const InverseDepthMap& xi, const InverseDepthMap& xi_gt) {
  require_same_size(xi.size(), xi_gt.size(), "grad_loss_depth");
  const auto& a = xi.values();
  const auto& b = xi_gt.values();
  const int w = a.width(), ht = a.height();
  Raster<double> grad(w, ht, 1, 0.0);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < ht; ++y)
    for (int x = 0; x < w; ++x) grad(x, y) = kOrdWeight * sign(a(x, y) - b(x, y));

  for (int h : kGradientSpacings) {
    if (h >= w || h >= ht) continue;
    const TermDirections t = term_directions(a, b, h);
    // Each pixel gathers from the terms it participates in: as the base of the
    // term at (x, y), and as the far operand of the terms at (x-h, y) and (x, y-h).
#pragma omp parallel for schedule(static)
    for (int y = 0; y < ht; ++y) {
      for (int x = 0; x < w; ++x) {
        double g = 0.0;
        double da = 0.0, db = 0.0;
        if (x < w - h && y < ht - h) {
          si_diff_partials(a(x, y), a(x + h, y), da, db);
          g += da * t.ux(x, y);
          si_diff_partials(a(x, y), a(x, y + h), da, db);
          g += da * t.uy(x, y);
        }
        if (x >= h && y < ht - h) {
          si_diff_partials(a(x - h, y), a(x, y), da, db);
          g += db * t.ux(x - h, y);
        }
        if (y >= h && x < w - h) {
          si_diff_partials(a(x, y - h), a(x, y), da, db);
          g += db * t.uy(x, y - h);
        }
        grad(x, y) += g;
      }
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------

double loss_color(const ImageBuffer& img, const ImageBuffer& img_gt) {
  require_same_size(img.size(), img_gt.size(), "loss_color");
  const auto a = img.raster().data();
  const auto b = img_gt.raster().data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

double loss_percep(const ImageBuffer& img, const ImageBuffer& img_gt, const FeatureExtractor& phi) {
  require_same_size(img.size(), img_gt.size(), "loss_percep");
  const std::vector<double> fa = phi.extract(img);
  const std::vector<double> fb = phi.extract(img_gt);
  if (fa.size() != fb.size())
    throw DimensionMismatch("loss_percep: feature extractor returned " + std::to_string(fa.size()) + " vs " +
                            std::to_string(fb.size()) + " values");
  double sum = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const double d = fa[i] - fb[i];
    sum += d * d;
  }
  return sum;
}

double loss_inpaint(const ImageBuffer& img, const ImageBuffer& img_gt, const InverseDepthMap& xi,
                    const InverseDepthMap& xi_gt, const FeatureExtractor& phi) {
  return loss_color(img, img_gt) + loss_percep(img, img_gt, phi) + kOrdWeight * loss_ord(xi, xi_gt) +
         loss_grad(xi, xi_gt);
}

// ---------------------------------------------------------------------------

namespace serial {

double loss_grad(const InverseDepthMap& xi, const InverseDepthMap& xi_gt) {
  require_same_size(xi.size(), xi_gt.size(), "loss_grad");
  const auto& a = xi.values();
  const auto& b = xi_gt.values();
  double total = 0.0;
  for (int h : kGradientSpacings) {
    for (int y = 0; y + h < a.height(); ++y) {
      for (int x = 0; x + h < a.width(); ++x) {
        const double dx = si_diff(a(x, y), a(x + h, y)) - si_diff(b(x, y), b(x + h, y));
        const double dy = si_diff(a(x, y), a(x, y + h)) - si_diff(b(x, y), b(x, y + h));
        total += std::hypot(dx, dy);
      }
    }
  }
  return total;
}

Raster<double> grad_loss_depth(const InverseDepthMap& xi, const InverseDepthMap& xi_gt) {
  require_same_size(xi.size(), xi_gt.size(), "grad_loss_depth");
  const auto& a = xi.values();
  const auto& b = xi_gt.values();
  Raster<double> grad(a.size(), 1, 0.0);
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) grad(x, y) = kOrdWeight * sign(a(x, y) - b(x, y));

  // Scatter form: every term pushes its partials onto its three operands.
  for (int h : kGradientSpacings) {
    for (int y = 0; y + h < a.height(); ++y) {
      for (int x = 0; x + h < a.width(); ++x) {
        const double dx = si_diff(a(x, y), a(x + h, y)) - si_diff(b(x, y), b(x + h, y));
        const double dy = si_diff(a(x, y), a(x, y + h)) - si_diff(b(x, y), b(x, y + h));
        const double n = std::hypot(dx, dy);
        if (n == 0.0) continue;
        double da = 0.0, db = 0.0;
        si_diff_partials(a(x, y), a(x + h, y), da, db);
        grad(x, y) += da * dx / n;
        grad(x + h, y) += db * dx / n;
        si_diff_partials(a(x, y), a(x, y + h), da, db);
        grad(x, y) += da * dy / n;
        grad(x, y + h) += db * dy / n;
      }
    }
  }
  return grad;
}

}  // namespace serial

}  // namespace kb
