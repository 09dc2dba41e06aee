#include <algorithm>
#include <cmath>
#include <limits>

#include "kenburns/pipeline.hpp"

namespace kb {

namespace {

struct InstanceInfo {
  int label = 0;
  int pixels = 0;
  int ymin = std::numeric_limits<int>::max();
  int ymax = -1;
  double strip_min = std::numeric_limits<double>::infinity();
};

}  // namespace

DepthMap adjust_depth(const DepthMap& depth, const SegMaskSet& masks, AdjustReport* report) {
  if (depth.size() != masks.size())
    throw DimensionMismatch("adjust_depth: depth " + to_string(depth.size()) + " vs masks " + to_string(masks.size()));

  const int k_max = masks.instance_count();
  std::vector<InstanceInfo> info(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) info[k].label = k;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      const int l = masks.labels(x, y);
      if (!masks.is_salient(l)) continue;
      auto& in = info[l];
      ++in.pixels;
      in.ymin = std::min(in.ymin, y);
      in.ymax = std::max(in.ymax, y);
    }

  std::vector<InstanceInfo*> todo;
  for (int k = 1; k <= k_max; ++k) {
    if (!masks.is_salient(k)) continue;
    InstanceInfo& in = info[k];
    if (in.pixels == 0) {
      if (report) report->warnings.push_back("salient instance " + std::to_string(k) + " has no pixels; skipped");
      continue;
    }
    const int box_h = in.ymax - in.ymin + 1;
    const int strip_rows = std::max(1, static_cast<int>(std::ceil(0.1 * box_h - 1e-9)));
    const int strip_top = in.ymax - strip_rows + 1;
    for (int y = strip_top; y <= in.ymax; ++y)
      for (int x = 0; x < depth.width(); ++x)
        if (masks.labels(x, y) == k && depth.valid(x, y)) in.strip_min = std::min(in.strip_min, depth(x, y));
    if (!std::isfinite(in.strip_min)) {
      if (report) report->warnings.push_back("salient instance " + std::to_string(k) + " has no valid depth in its bottom strip; skipped");
      continue;
    }
    todo.push_back(&in);
  }

  // Farthest first, so nearer instances are written last.
  std::stable_sort(todo.begin(), todo.end(),
                   [](const InstanceInfo* a, const InstanceInfo* b) { return a->strip_min > b->strip_min; });

  DepthMap out = depth;
  for (const InstanceInfo* in : todo) {
    for (int y = in->ymin; y <= in->ymax; ++y)
      for (int x = 0; x < depth.width(); ++x)
        if (masks.labels(x, y) == in->label) {
          out(x, y) = in->strip_min;
          out.set_valid(x, y, true);
        }
  }
  if (report) report->adjusted_instances = static_cast<int>(todo.size());
  return out;
}

void check_paired(const DepthMap& depth, Size image) {
  const double a = static_cast<double>(image.width) / image.height;
  // Allow for rounding of the shorter side when the depth map was resized.
  const double w_expected = depth.height() * a;
  const double h_expected = depth.width() / a;
  if (std::abs(w_expected - depth.width()) > 1.0 && std::abs(h_expected - depth.height()) > 1.0)
    throw DimensionMismatch("depth " + to_string(depth.size()) + " does not match the aspect ratio of image " +
                            to_string(image));
}

}  // namespace kb
