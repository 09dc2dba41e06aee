#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kenburns/extend.hpp"
#include "kenburns/io.hpp"

namespace kb {

namespace {

constexpr int kChannels = 4;  // depth, r, g, b
using Values = std::array<double, kChannels>;

struct Stencil {
  int count = 0;                 // neighbours that take part in the average
  int unknowns = 0;
  std::array<int, 4> unknown{};  // local indices of hole neighbours
  Values fixed{};                // sum of fixed neighbour values
};

struct Component {
  std::vector<int> pixels;    // row-major sorted flat indices
  std::vector<int> boundary;  // sorted unique flat indices of non-hole 4-neighbours
};

std::vector<Component> label_holes(const Mask& holes) {
  const int w = holes.width(), h = holes.height();
  std::vector<int> label(holes.pixel_count(), -1);
  std::vector<Component> comps;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(label.size()); ++start) {
    if (!holes.storage()[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    Component c;
    label[start] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      c.pixels.push_back(p);
      const int x = p % w, y = p / w;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int q = n[1] * w + n[0];
        if (!holes.storage()[q]) {
          c.boundary.push_back(q);
        } else if (label[q] < 0) {
          label[q] = id;
          stack.push_back(q);
        }
      }
    }
    std::sort(c.pixels.begin(), c.pixels.end());
    std::sort(c.boundary.begin(), c.boundary.end());
    c.boundary.erase(std::unique(c.boundary.begin(), c.boundary.end()), c.boundary.end());
    comps.push_back(std::move(c));
  }
  return comps;
}

// Exact 1D 2-means: the best split of the sorted values into a lower and upper run.
// Returns the smallest value of the upper (farther) cluster.
double two_means_threshold(std::vector<double> d) {
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    pre[i + 1] = pre[i] + d[i];
    pre2[i + 1] = pre2[i] + d[i] * d[i];
  }
  auto sse = [&](std::size_t a, std::size_t b) {
    const double s = pre[b] - pre[a], cnt = static_cast<double>(b - a);
    return (pre2[b] - pre2[a]) - s * s / cnt;
  };
  std::size_t best = 1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < n; ++k) {
    if (d[k] == d[k - 1]) continue;  // equal values stay in one cluster
    const double cost = sse(0, k) + sse(k, n);
    if (cost < best_cost) {
      best_cost = cost;
      best = k;
    }
  }
  return d[best];
}

Values values_at(const RenderFrame& f, int p) {
  const int w = f.color.width();
  const int x = p % w, y = p / w;
  return {f.depth(x, y), f.color(x, y, 0), f.color(x, y, 1), f.color(x, y, 2)};
}

HoleDiagnostics solve_component(const RenderFrame& f, const Component& comp, const InpaintConfig& cfg,
                                std::vector<int>& local, InpaintResult& out) {
  HoleDiagnostics diag;
  diag.pixels = comp.pixels.size();
  const int w = f.color.width(), h = f.color.height();

  std::vector<double> bdepth;
  bdepth.reserve(comp.boundary.size());
  for (int q : comp.boundary) bdepth.push_back(values_at(f, q)[0]);
  const double dmin = *std::min_element(bdepth.begin(), bdepth.end());
  const double dmax = *std::max_element(bdepth.begin(), bdepth.end());

  double threshold = dmin;
  if (dmax > 0.0 && (dmax - dmin) / dmax >= cfg.single_cluster_spread) threshold = two_means_threshold(bdepth);

  std::vector<int> fixed;  // sorted: background boundary pixels
  double fg_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < comp.boundary.size(); ++i) {
    if (bdepth[i] >= threshold) {
      fixed.push_back(comp.boundary[i]);
    } else {
      fg_max = std::max(fg_max, bdepth[i]);
    }
  }
  diag.background_boundary = fixed.size();
  diag.foreground_boundary = comp.boundary.size() - fixed.size();
  if (fixed.empty()) {
    diag.enclosed = true;
    fixed = comp.boundary;
  }

  Values lo, hi, mean{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (int q : fixed) {
    const Values v = values_at(f, q);
    for (int c = 0; c < kChannels; ++c) {
      lo[c] = std::min(lo[c], v[c]);
      hi[c] = std::max(hi[c], v[c]);
      mean[c] += v[c];
    }
  }
  for (int c = 0; c < kChannels; ++c) mean[c] /= static_cast<double>(fixed.size());

  for (std::size_t i = 0; i < comp.pixels.size(); ++i) local[comp.pixels[i]] = static_cast<int>(i);

  std::vector<Stencil> st(comp.pixels.size());
  for (std::size_t i = 0; i < comp.pixels.size(); ++i) {
    const int p = comp.pixels[i];
    const int x = p % w, y = p / w;
    const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
    Stencil& s = st[i];
    for (const auto& n : nb) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
      const int q = n[1] * w + n[0];
      if (f.holes.storage()[q]) {
        s.unknown[s.unknowns++] = local[q];
        ++s.count;
      } else if (std::binary_search(fixed.begin(), fixed.end(), q)) {
        const Values v = values_at(f, q);
        for (int c = 0; c < kChannels; ++c) s.fixed[c] += v[c];
        ++s.count;
      }
    }
  }

  std::vector<Values> u(comp.pixels.size(), mean);
  Values tol;
  for (int c = 0; c < kChannels; ++c) tol[c] = std::max(cfg.tolerance * (hi[c] - lo[c]), 1e-14);

  diag.converged = false;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    Values change{};
    for (std::size_t i = 0; i < st.size(); ++i) {
      const Stencil& s = st[i];
      Values acc = s.fixed;
      for (int k = 0; k < s.unknowns; ++k)
        for (int c = 0; c < kChannels; ++c) acc[c] += u[s.unknown[k]][c];
      for (int c = 0; c < kChannels; ++c) {
        const double v = std::clamp(acc[c] / s.count, lo[c], hi[c]);
        change[c] = std::max(change[c], std::abs(v - u[i][c]));
        u[i][c] = v;
      }
    }
    diag.iterations = it + 1;
    bool done = true;
    for (int c = 0; c < kChannels; ++c) done = done && change[c] < tol[c];
    if (done) {
      diag.converged = true;
      break;
    }
  }

  for (std::size_t i = 0; i < comp.pixels.size(); ++i) {
    const int p = comp.pixels[i];
    const int x = p % w, y = p / w;
    if (!diag.enclosed && diag.foreground_boundary > 0 && !(u[i][0] > fg_max - 1e-6))
      throw Error("inpaint: filled depth " + std::to_string(u[i][0]) + " is not behind the foreground boundary");
    out.depth(x, y) = u[i][0];
    out.depth.set_valid(x, y, true);
    for (int c = 0; c < 3; ++c) out.color(x, y, c) = u[i][c + 1];
  }
  return diag;
}

void check_frame(const RenderFrame& f) {
  if (f.color.size() != f.holes.size() || f.depth.size() != f.holes.size())
    throw DimensionMismatch("inpaint: frame rasters differ in size");
}

}  // namespace

std::size_t InpaintResult::enclosed_count() const {
  return static_cast<std::size_t>(std::count_if(holes.begin(), holes.end(), [](const auto& d) { return d.enclosed; }));
}

InpaintResult inpaint_default(const RenderFrame& frame, const InpaintConfig& cfg) {
  check_frame(frame);
  InpaintResult out;
  out.color = frame.color;
  out.depth = frame.depth;

  const std::vector<Component> comps = label_holes(frame.holes);
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (comps[i].boundary.empty())
      throw DegenerateInput("inpaint: hole of " + std::to_string(comps[i].pixels.size()) +
                            " pixels has no boundary (the frame is empty)");

  out.holes.resize(comps.size());
  std::vector<int> local(frame.holes.pixel_count(), -1);
  bool failed = false;
  std::string message;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < comps.size(); ++i) {
    try {
      out.holes[i] = solve_component(frame, comps[i], cfg, local, out);
    } catch (const std::exception& e) {
#pragma omp critical(kb_inpaint_error)
      {
        if (!failed) message = e.what();
        failed = true;
      }
    }
  }
  if (failed) throw Error(message);
  return out;
}

InpaintResult FileInpainter::inpaint(const RenderFrame& frame) const {
  check_frame(frame);
  const ImageBuffer color = io::load_image(color_path_);
  const DepthMap depth = io::load_depth(depth_path_);
  if (color.size() != frame.holes.size() || depth.size() != frame.holes.size())
    throw DimensionMismatch("external inpainting " + to_string(color.size()) + " / " + to_string(depth.size()) +
                            " does not match frame " + to_string(frame.holes.size()));
  InpaintResult out;
  out.color = frame.color;
  out.depth = frame.depth;
  for (int y = 0; y < frame.holes.height(); ++y)
    for (int x = 0; x < frame.holes.width(); ++x) {
      if (!frame.holes(x, y)) continue;
      const double d = depth(x, y);
      if (!depth.valid(x, y) || !(std::isfinite(d) && d > 0.0))
        throw ValidationError("depth(" + std::to_string(x) + ", " + std::to_string(y) + ")",
                              "external inpainted depth must be positive and finite inside holes");
      out.depth(x, y) = d;
      out.depth.set_valid(x, y, true);
      for (int c = 0; c < 3; ++c) out.color(x, y, c) = color(x, y, c);
    }
  return out;
}

}  // namespace kb
