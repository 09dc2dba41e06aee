#include <algorithm>
#include <cmath>

#include "kenburns/io.hpp"
#include "kenburns/pipeline.hpp"

namespace kb {

namespace {

DepthMap fit_coarse(const DepthMap& d, Size image, int max_dim) {
  d.validate();
  check_paired(d, image);
  const Size target = refine_target_size(image, max_dim);
  return d.size() == target ? d : resize_depth(d, target);
}

}  // namespace

DepthMap FileDepthProvider::estimate(const ImageBuffer& img) const {
  return fit_coarse(io::load_depth(path_), img.size(), max_dim_);
}

DepthMap StaticDepthProvider::estimate(const ImageBuffer& img) const { return fit_coarse(depth_, img.size(), max_dim_); }

DepthMap SyntheticDepthProvider::estimate(const ImageBuffer& img) const {
  const Size s = refine_target_size(img.size(), max_dim_);
  const Intrinsics K = Intrinsics::default_for(s);
  constexpr double camera_height = 1.5;
  constexpr double far = 30.0;
  const double horizon = 0.45 * s.height;

  auto ground = [&](double row_center) {
    const double below = row_center - horizon;
    return below > 0.0 ? std::min(far, camera_height * K.fy / below) : far;
  };

  DepthMap d(s.width, s.height, far);
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) d(x, y) = ground(y + 0.5);

  // Fronto-parallel band standing on the ground at its bottom row.
  const int bx0 = static_cast<int>(0.35 * s.width), bx1 = static_cast<int>(0.55 * s.width);
  const int by0 = static_cast<int>(0.25 * s.height), by1 = static_cast<int>(0.8 * s.height);
  const double band_depth = ground(by1 + 0.5);
  for (int y = by0; y <= std::min(by1, s.height - 1); ++y)
    for (int x = bx0; x < bx1; ++x) d(x, y) = band_depth;
  return d;
}

DepthMap FileRefiner::refine(const ImageBuffer& img, const DepthMap& /*coarse*/) const {
  DepthMap d = io::load_depth(path_);
  d.validate();
  const Size target = refine_target_size(img.size(), max_dim_);
  if (d.size() != target)
    throw DimensionMismatch("refined depth " + path_.string() + " is " + to_string(d.size()) + ", expected " +
                            to_string(target));
  return d;
}

}  // namespace kb
