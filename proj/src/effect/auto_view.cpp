#include <algorithm>
#include <cmath>
#include <tuple>

#include "kenburns/effect.hpp"

namespace kb {

EndViewGrid EndViewGrid::defaults() {
  EndViewGrid g;
  for (int i = 0; i < 8; ++i) g.scales.push_back(0.95 - 0.05 * i);
  return g;
}

namespace {

double linspace(double span, int i, int n) { return n == 1 ? 0.5 * span : span * i / (n - 1); }

}  // namespace

EndViewCandidate auto_end_view(const PointCloud& cloud, Size image, const Intrinsics& K_image, double d_f, Size out,
                               const EndViewGrid& grid, const RenderConfig& cfg, std::vector<EndViewCandidate>* all) {
  if (grid.scales.empty() || grid.columns < 1 || grid.rows < 1)
    throw ValidationError("grid", "the end-view grid must contain at least one candidate");

  std::vector<EndViewCandidate> cands;
  for (double s : grid.scales) {
    const double w = s * image.width, h = s * image.height;
    for (int r = 0; r < grid.rows; ++r)
      for (int c = 0; c < grid.columns; ++c) {
        const double x = linspace(image.width - w, c, grid.columns);
        const double y = linspace(image.height - h, r, grid.rows);
        cands.push_back({CropWindow::create(x, y, w, h, image), s, c, r, 0});
      }
  }

  const Intrinsics K_out = K_image.rescaled(image, out);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const CameraPose pose = crop_to_pose(cands[i].crop, image, K_image, d_f);
    cands[i].holes = render(cloud, pose, K_out, out, cfg).hole_count();
  }

  const double icx = 0.5 * image.width, icy = 0.5 * image.height;
  auto key = [&](const EndViewCandidate& e) {
    const double dx = e.crop.rect().center_x() - icx, dy = e.crop.rect().center_y() - icy;
    return std::make_tuple(e.holes, e.scale, dx * dx + dy * dy, e.row, e.column);
  };
  const auto best = std::min_element(cands.begin(), cands.end(),
                                     [&](const auto& a, const auto& b) { return key(a) < key(b); });
  EndViewCandidate result = *best;
  if (all) *all = std::move(cands);
  return result;
}

}  // namespace kb
