#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kb {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents; `offset` is the byte position where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct FieldError {
  std::string field;
  std::string reason;
};

/// Constraint violation on a user-supplied value. Carries one entry per offending field.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldError> fields);
  ValidationError(const std::string& field, const std::string& reason)
      : ValidationError(std::vector<FieldError>{{field, reason}}) {}
  const std::vector<FieldError>& fields() const { return fields_; }

 private:
  std::vector<FieldError> fields_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Input for which the requested quantity is not identifiable (e.g. constant prediction).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Rasters

struct Size {
  int width = 0;
  int height = 0;

  std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const Size&, const Size&) = default;
};

std::string to_string(Size s);

/// Dense row-major interleaved raster.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {
    if (width < 0 || height < 0 || channels < 1) throw Error("raster: invalid shape");
  }
  Raster(Size s, int channels = 1, T fill = T{}) : Raster(s.width, s.height, channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  Size size() const { return {width_, height_}; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using Mask = Raster<std::uint8_t>;

// ---------------------------------------------------------------------------
// Domain types

/// RGB image with channel values normalized to [0, 1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height) : rgb_(width, height, 3, 0.0) {}
  explicit ImageBuffer(Raster<double> rgb);

  int width() const { return rgb_.width(); }
  int height() const { return rgb_.height(); }
  Size size() const { return rgb_.size(); }

  double& operator()(int x, int y, int c) { return rgb_(x, y, c); }
  double operator()(int x, int y, int c) const { return rgb_(x, y, c); }

  const Raster<double>& raster() const { return rgb_; }
  Raster<double>& raster() { return rgb_; }

  /// Throws ValidationError on empty size or values outside [0,1].
  void validate() const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  Raster<double> rgb_;
};

/// Metric depth per pixel plus a validity mask (sparse ground truth leaves holes).
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 1.0)
      : values_(width, height, 1, fill), valid_(width, height, 1, 1) {}
  DepthMap(Raster<double> values, Mask valid);
  explicit DepthMap(Raster<double> values);

  int width() const { return values_.width(); }
  int height() const { return values_.height(); }
  Size size() const { return values_.size(); }

  double& operator()(int x, int y) { return values_(x, y); }
  double operator()(int x, int y) const { return values_(x, y); }
  bool valid(int x, int y) const { return valid_(x, y) != 0; }
  void set_valid(int x, int y, bool v) { valid_(x, y) = v ? 1 : 0; }

  const Raster<double>& values() const { return values_; }
  Raster<double>& values() { return values_; }
  const Mask& validity() const { return valid_; }
  Mask& validity() { return valid_; }

  std::size_t valid_count() const;
  bool dense() const { return valid_count() == values_.pixel_count(); }

  /// Every valid value must be finite and > 0.
  void validate() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  Raster<double> values_;
  Mask valid_;
};

/// Reciprocal depth (xi = 1/d). The losses are defined on this convention.
class InverseDepthMap {
 public:
  InverseDepthMap() = default;
  InverseDepthMap(int width, int height, double fill = 0.0)
      : values_(width, height, 1, fill), valid_(width, height, 1, 1) {}
  InverseDepthMap(Raster<double> values, Mask valid);
  explicit InverseDepthMap(Raster<double> values);

  int width() const { return values_.width(); }
  int height() const { return values_.height(); }
  Size size() const { return values_.size(); }

  double& operator()(int x, int y) { return values_(x, y); }
  double operator()(int x, int y) const { return values_(x, y); }
  bool valid(int x, int y) const { return valid_(x, y) != 0; }

  const Raster<double>& values() const { return values_; }
  Raster<double>& values() { return values_; }
  const Mask& validity() const { return valid_; }

 private:
  Raster<double> values_;
  Mask valid_;
};

/// Pinhole intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// fx = fy = max(width, height), principal point at the image center.
  static Intrinsics default_for(Size s);
  void validate(Size s) const;

  /// Scales all parameters for a raster resized from `from` to `to`.
  Intrinsics rescaled(Size from, Size to) const;
};

using Vec3 = std::array<double, 3>;

/// Translation-only camera; rotation is fixed to identity.
struct CameraPose {
  double tx = 0.0;
  double ty = 0.0;
  double tz = 0.0;

  bool finite() const { return std::isfinite(tx) && std::isfinite(ty) && std::isfinite(tz); }
  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

CameraPose lerp(const CameraPose& a, const CameraPose& b, double t);

/// Axis-aligned rectangle in pixel coordinates, no invariants.
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Crop rectangle on the source image: positive size, source aspect ratio, fully inside.
class CropWindow {
 public:
  static constexpr double kAspectTolerance = 1e-6;

  /// Throws ValidationError naming "w", "h", "aspect" or "bounds".
  static CropWindow create(double x, double y, double w, double h, Size image);
  static CropWindow full(Size image);

  double x() const { return rect_.x; }
  double y() const { return rect_.y; }
  double w() const { return rect_.w; }
  double h() const { return rect_.h; }
  const Rect& rect() const { return rect_; }

  /// Same window expressed on a resized copy of the image (not revalidated).
  Rect scaled_to(Size from, Size to) const;

  friend bool operator==(const CropWindow&, const CropWindow&) = default;

 private:
  explicit CropWindow(Rect r) : rect_(r) {}
  Rect rect_;
};

/// Validation problems of a crop, empty when valid. Field names are prefixed with `prefix`.
std::vector<FieldError> check_crop(double x, double y, double w, double h, Size image,
                                   const std::string& prefix = "");

struct CameraPath {
  CameraPose start;
  CameraPose end;
  int frame_count = 1;

  /// start + (end - start) * k / (frame_count - 1); frame_count == 1 yields start.
  CameraPose pose_at(int k) const;
  void validate() const;
};

/// Instance label map (0 = background) with per-instance salience flags.
struct SegMaskSet {
  Raster<std::int32_t> labels;
  std::vector<bool> salient;  // indexed by label; entry 0 unused

  Size size() const { return labels.size(); }
  int instance_count() const { return static_cast<int>(salient.empty() ? 0 : salient.size() - 1); }
  bool is_salient(int label) const {
    return label > 0 && label < static_cast<int>(salient.size()) && salient[label];
  }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Conversions

/// xi = 1/d on valid pixels; invalid pixels map to 0 and stay invalid.
InverseDepthMap depth_to_inverse(const DepthMap& d);
/// d = 1/xi; a valid xi <= 0 has no finite depth and is rejected.
DepthMap inverse_to_depth(const InverseDepthMap& xi);

/// Bilinear resize with half-pixel centers. Equal sizes return an exact copy.
Raster<double> resize_bilinear(const Raster<double>& src, Size to);
template <typename T>
Raster<T> resize_nearest(const Raster<T>& src, Size to) {
  Raster<T> out(to, src.channels());
  for (int y = 0; y < to.height; ++y) {
    const int sy = std::min(src.height() - 1, static_cast<int>((y + 0.5) * src.height() / to.height));
    for (int x = 0; x < to.width; ++x) {
      const int sx = std::min(src.width() - 1, static_cast<int>((x + 0.5) * src.width() / to.width));
      for (int c = 0; c < src.channels(); ++c) out(x, y, c) = src(sx, sy, c);
    }
  }
  return out;
}

/// Dimensions with the larger side equal to `max_dim` and the aspect ratio kept (rounded).
Size fit_max_dim(Size s, int max_dim);
ImageBuffer resize_max_dim(const ImageBuffer& img, int max_dim);
/// Resizes values bilinearly; requires a dense map.
DepthMap resize_depth(const DepthMap& d, Size to);

double luma(double r, double g, double b);

/// q-th percentile (0..100) with linear interpolation between order statistics; 0 for no values.
double percentile(std::vector<double> v, double q);

}  // namespace kb
