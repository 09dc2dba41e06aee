#include <algorithm>
#include <cmath>
#include <string>

#include "kenburns/render.hpp"

namespace kb {

PointCloud::PointCloud(Intrinsics source_intrinsics, Size source_size, int context_channels)
    : source_intrinsics_(source_intrinsics), source_size_(source_size), context_channels_(context_channels) {}

ScenePoint PointCloud::point(std::size_t i) const {
  const std::size_t c = static_cast<std::size_t>(context_channels_);
  return {positions_[i], colors_[i], std::span<const double>(contexts_).subspan(i * c, c), origins_[i],
          source_indices_[i]};
}

std::uint32_t PointCloud::append(const Vec3& position, const Vec3& color, std::span<const double> context,
                                 PointOrigin origin) {
  if (static_cast<int>(context.size()) != context_channels_)
    throw DimensionMismatch("point context has " + std::to_string(context.size()) + " channels, cloud expects " +
                            std::to_string(context_channels_));
  if (!(std::isfinite(position[0]) && std::isfinite(position[1]) && std::isfinite(position[2])))
    throw ValidationError("position", "point position must be finite");
  const std::uint32_t idx = next_index_++;
  positions_.push_back(position);
  colors_.push_back(color);
  contexts_.insert(contexts_.end(), context.begin(), context.end());
  origins_.push_back(origin);
  source_indices_.push_back(idx);
  return idx;
}

PointCloud build_point_cloud(const ImageBuffer& img, const DepthMap& depth, const Intrinsics& K,
                             const Raster<double>& context) {
  if (img.size() != depth.size())
    throw DimensionMismatch("build_point_cloud: image " + to_string(img.size()) + " vs depth " +
                            to_string(depth.size()));
  const bool has_context = !context.empty();
  if (has_context && context.size() != img.size())
    throw DimensionMismatch("build_point_cloud: context " + to_string(context.size()) + " vs image " +
                            to_string(img.size()));
  K.validate(img.size());

  const int channels = has_context ? context.channels() : 0;
  PointCloud cloud(K, img.size(), channels);
  const std::size_t n = img.size().area();
  cloud.positions_.reserve(n);
  cloud.colors_.reserve(n);
  cloud.contexts_.reserve(n * static_cast<std::size_t>(channels));
  cloud.origins_.reserve(n);
  cloud.source_indices_.reserve(n);

  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double d = depth(x, y);
      if (!depth.valid(x, y) || !(std::isfinite(d) && d > 0.0)) {
        ++cloud.omitted_count_;
        continue;
      }
      cloud.positions_.push_back({d * (x + 0.5 - K.cx) / K.fx, d * (y + 0.5 - K.cy) / K.fy, d});
      cloud.colors_.push_back({img(x, y, 0), img(x, y, 1), img(x, y, 2)});
      for (int c = 0; c < channels; ++c) cloud.contexts_.push_back(context(x, y, c));
      cloud.origins_.push_back(PointOrigin::original);
      cloud.source_indices_.push_back(static_cast<std::uint32_t>(y * img.width() + x));
    }
  }
  cloud.original_count_ = cloud.positions_.size();
  cloud.next_index_ = static_cast<std::uint32_t>(n);
  return cloud;
}

std::size_t RenderFrame::hole_count() const {
  return static_cast<std::size_t>(std::count(holes.data().begin(), holes.data().end(), std::uint8_t{1}));
}

}  // namespace kb
