#include "kenburns/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kb {

namespace {

std::string join_fields(const std::vector<FieldError>& fields) {
  std::ostringstream os;
  os << "validation failed:";
  for (const auto& f : fields) os << ' ' << f.field << " (" << f.reason << ')';
  return os.str();
}

std::string pixel_name(int x, int y) {
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
}

}  // namespace

ValidationError::ValidationError(std::vector<FieldError> fields)
    : Error(join_fields(fields)), fields_(std::move(fields)) {}

std::string to_string(Size s) { return std::to_string(s.width) + "x" + std::to_string(s.height); }

// ---------------------------------------------------------------------------

ImageBuffer::ImageBuffer(Raster<double> rgb) : rgb_(std::move(rgb)) {
  if (rgb_.channels() != 3) throw DimensionMismatch("image must have 3 channels");
}

void ImageBuffer::validate() const {
  if (width() < 1 || height() < 1) throw ValidationError("size", "image must be at least 1x1");
  for (double v : rgb_.data()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw ValidationError("values", "image values must be finite and in [0,1]");
  }
}

DepthMap::DepthMap(Raster<double> values, Mask valid) : values_(std::move(values)), valid_(std::move(valid)) {
  if (values_.size() != valid_.size() || values_.channels() != 1 || valid_.channels() != 1)
    throw DimensionMismatch("depth values and validity mask differ in shape");
}

DepthMap::DepthMap(Raster<double> values)
    : DepthMap(values, Mask(values.size(), 1, std::uint8_t{1})) {}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid_.data().begin(), valid_.data().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

void DepthMap::validate() const {
  for (int y = 0; y < height(); ++y)
    for (int x = 0; x < width(); ++x)
      if (valid(x, y) && !(std::isfinite(values_(x, y)) && values_(x, y) > 0.0))
        throw ValidationError("depth" + pixel_name(x, y), "depth must be finite and > 0");
}

InverseDepthMap::InverseDepthMap(Raster<double> values, Mask valid)
    : values_(std::move(values)), valid_(std::move(valid)) {
  if (values_.size() != valid_.size() || values_.channels() != 1)
    throw DimensionMismatch("inverse depth values and validity mask differ in shape");
}

InverseDepthMap::InverseDepthMap(Raster<double> values)
    : InverseDepthMap(values, Mask(values.size(), 1, std::uint8_t{1})) {}

// ---------------------------------------------------------------------------

Intrinsics Intrinsics::default_for(Size s) {
  const double f = std::max(s.width, s.height);
  return {f, f, 0.5 * s.width, 0.5 * s.height};
}

void Intrinsics::validate(Size s) const {
  std::vector<FieldError> errs;
  if (!(fx > 0.0)) errs.push_back({"fx", "must be > 0"});
  if (!(fy > 0.0)) errs.push_back({"fy", "must be > 0"});
  if (!(cx >= 0.0 && cx <= s.width)) errs.push_back({"cx", "must lie in [0, width]"});
  if (!(cy >= 0.0 && cy <= s.height)) errs.push_back({"cy", "must lie in [0, height]"});
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

Intrinsics Intrinsics::rescaled(Size from, Size to) const {
  const double sx = static_cast<double>(to.width) / from.width;
  const double sy = static_cast<double>(to.height) / from.height;
  return {fx * sx, fy * sy, cx * sx, cy * sy};
}

CameraPose lerp(const CameraPose& a, const CameraPose& b, double t) {
  return {std::lerp(a.tx, b.tx, t), std::lerp(a.ty, b.ty, t), std::lerp(a.tz, b.tz, t)};
}

// ---------------------------------------------------------------------------

std::vector<FieldError> check_crop(double x, double y, double w, double h, Size image,
                                   const std::string& prefix) {
  std::vector<FieldError> errs;
  const auto all_finite = std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h);
  if (!all_finite) {
    errs.push_back({prefix + "bounds", "crop coordinates must be finite"});
    return errs;
  }
  if (!(w > 0.0)) errs.push_back({prefix + "w", "width must be > 0"});
  if (!(h > 0.0)) errs.push_back({prefix + "h", "height must be > 0"});
  if (!errs.empty()) return errs;

  const double image_aspect = static_cast<double>(image.width) / image.height;
  if (std::abs((w / h) / image_aspect - 1.0) > CropWindow::kAspectTolerance)
    errs.push_back({prefix + "aspect", "w/h must equal the image aspect ratio " + std::to_string(image_aspect)});

  constexpr double slack = 1e-9;
  if (x < -slack || y < -slack || x + w > image.width + slack || y + h > image.height + slack)
    errs.push_back({prefix + "bounds", "window must lie inside the " + to_string(image) + " image"});
  return errs;
}

CropWindow CropWindow::create(double x, double y, double w, double h, Size image) {
  auto errs = check_crop(x, y, w, h, image);
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return CropWindow(Rect{x, y, w, h});
}

CropWindow CropWindow::full(Size image) {
  return CropWindow(Rect{0.0, 0.0, static_cast<double>(image.width), static_cast<double>(image.height)});
}

Rect CropWindow::scaled_to(Size from, Size to) const {
  const double sx = static_cast<double>(to.width) / from.width;
  const double sy = static_cast<double>(to.height) / from.height;
  return {rect_.x * sx, rect_.y * sy, rect_.w * sx, rect_.h * sy};
}

CameraPose CameraPath::pose_at(int k) const {
  if (frame_count <= 1) return start;
  return lerp(start, end, static_cast<double>(k) / (frame_count - 1));
}

void CameraPath::validate() const {
  if (frame_count < 1) throw ValidationError("frames", "frame count must be >= 1");
  if (!start.finite() || !end.finite()) throw ValidationError("pose", "poses must be finite");
}

void SegMaskSet::validate() const {
  std::vector<bool> seen(std::max<std::size_t>(salient.size(), 1), false);
  for (std::int32_t l : labels.data()) {
    if (l < 0 || l >= static_cast<std::int32_t>(std::max<std::size_t>(salient.size(), 1)))
      throw ValidationError("labels", "label " + std::to_string(l) + " outside [0, " +
                                            std::to_string(instance_count()) + "]");
    seen[l] = true;
  }
  for (std::size_t k = 1; k < seen.size(); ++k)
    if (!seen[k]) throw ValidationError("labels", "labels are not contiguous: " + std::to_string(k) + " missing");
}

// ---------------------------------------------------------------------------

InverseDepthMap depth_to_inverse(const DepthMap& d) {
  Raster<double> xi(d.size(), 1, 0.0);
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      if (!d.valid(x, y)) continue;
      const double v = d(x, y);
      if (!(std::isfinite(v) && v > 0.0))
        throw ValidationError("depth" + pixel_name(x, y), "non-positive or non-finite depth " + std::to_string(v));
      xi(x, y) = 1.0 / v;
    }
  }
  return InverseDepthMap(std::move(xi), d.validity());
}

DepthMap inverse_to_depth(const InverseDepthMap& xi) {
  Raster<double> d(xi.size(), 1, 0.0);
  for (int y = 0; y < xi.height(); ++y) {
    for (int x = 0; x < xi.width(); ++x) {
      if (!xi.valid(x, y)) continue;
      const double v = xi(x, y);
      if (!(std::isfinite(v) && v > 0.0))
        throw ValidationError("inverse" + pixel_name(x, y), "inverse depth must be finite and > 0");
      d(x, y) = 1.0 / v;
    }
  }
  return DepthMap(std::move(d), xi.validity());
}

Raster<double> resize_bilinear(const Raster<double>& src, Size to) {
  if (to.width < 1 || to.height < 1) throw Error("resize: target must be at least 1x1");
  if (src.size() == to) return src;
  const int ch = src.channels();
  Raster<double> out(to, ch);
  const double sx = static_cast<double>(src.width()) / to.width;
  const double sy = static_cast<double>(src.height()) / to.height;

  // Per-column taps are shared by every row.
  std::vector<int> x0(to.width), x1(to.width);
  std::vector<double> ax(to.width);
  for (int x = 0; x < to.width; ++x) {
    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
    x0[x] = static_cast<int>(fx);
    x1[x] = std::min(x0[x] + 1, src.width() - 1);
    ax[x] = fx - x0[x];
  }

#pragma omp parallel for schedule(static)
  for (int y = 0; y < to.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ay = fy - y0;
    for (int x = 0; x < to.width; ++x) {
      for (int c = 0; c < ch; ++c) {
        const double top = std::lerp(src(x0[x], y0, c), src(x1[x], y0, c), ax[x]);
        const double bot = std::lerp(src(x0[x], y1, c), src(x1[x], y1, c), ax[x]);
        out(x, y, c) = std::lerp(top, bot, ay);
      }
    }
  }
  return out;
}

Size fit_max_dim(Size s, int max_dim) {
  if (max_dim < 1) throw ValidationError("max_dim", "must be >= 1");
  if (s.width >= s.height) {
    const int h = std::max(1, static_cast<int>(std::lround(static_cast<double>(s.height) * max_dim / s.width)));
    return {max_dim, h};
  }
  const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(s.width) * max_dim / s.height)));
  return {w, max_dim};
}

ImageBuffer resize_max_dim(const ImageBuffer& img, int max_dim) {
  return ImageBuffer(resize_bilinear(img.raster(), fit_max_dim(img.size(), max_dim)));
}

DepthMap resize_depth(const DepthMap& d, Size to) {
  if (!d.dense()) throw ValidationError("depth", "resizing requires a dense depth map");
  return DepthMap(resize_bilinear(d.values(), to));
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return std::lerp(v[lo], v[hi], pos - static_cast<double>(lo));
}

}  // namespace kb
