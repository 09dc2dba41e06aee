#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "kenburns/effect.hpp"

namespace kb {

using nlohmann::json;

Size default_output_size(Size image) { return refine_target_size(image, 512); }

namespace {

bool read_number(const json& obj, const std::string& key, const std::string& field, double& out,
                 std::vector<FieldError>& errs) {
  if (!obj.contains(key)) {
    errs.push_back({field, "required"});
    return false;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) {
    errs.push_back({field, "must be a number"});
    return false;
  }
  out = v.get<double>();
  return true;
}

std::optional<CropWindow> read_crop(const json& root, const std::string& key, Size image,
                                    std::vector<FieldError>& errs) {
  if (!root.contains(key)) {
    errs.push_back({key, "required"});
    return std::nullopt;
  }
  const json& c = root.at(key);
  if (!c.is_object()) {
    errs.push_back({key, "must be an object with x, y, w, h"});
    return std::nullopt;
  }
  double x = 0, y = 0, w = 0, h = 0;
  bool ok = read_number(c, "x", key + ".x", x, errs);
  ok = read_number(c, "y", key + ".y", y, errs) && ok;
  ok = read_number(c, "w", key + ".w", w, errs) && ok;
  ok = read_number(c, "h", key + ".h", h, errs) && ok;
  if (!ok) return std::nullopt;
  auto crop_errs = check_crop(x, y, w, h, image, key + ".");
  if (!crop_errs.empty()) {
    errs.insert(errs.end(), crop_errs.begin(), crop_errs.end());
    return std::nullopt;
  }
  return CropWindow::create(x, y, w, h, image);
}

bool read_int(const json& obj, const std::string& key, const std::string& field, int lo, int hi, int& out,
              std::vector<FieldError>& errs) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !(v.is_number_float() && std::trunc(v.get<double>()) == v.get<double>())) {
    errs.push_back({field, "must be an integer"});
    return false;
  }
  const double d = v.get<double>();
  if (d < lo || d > hi) {
    errs.push_back({field, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"});
    return false;
  }
  out = static_cast<int>(d);
  return true;
}

nlohmann::ordered_json number(double v) {
  if (std::trunc(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  return v;
}

nlohmann::ordered_json crop_json(const CropWindow& c) {
  nlohmann::ordered_json j;
  j["x"] = number(c.x());
  j["y"] = number(c.y());
  j["w"] = number(c.w());
  j["h"] = number(c.h());
  return j;
}

}  // namespace

EffectSpec parse_effect_spec(std::string_view text, Size image) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("effect spec: " + std::string(e.what()), e.byte);
  }
  if (!root.is_object()) throw ValidationError("spec", "must be a JSON object");

  std::vector<FieldError> errs;
  if (root.contains("v") && !(root["v"].is_number_integer() && root["v"].get<int>() == 1))
    errs.push_back({"v", "unsupported schema version (expected 1)"});

  auto start = read_crop(root, "start", image, errs);
  auto end = read_crop(root, "end", image, errs);

  EffectSpec spec{CropWindow::full(image), CropWindow::full(image), kDefaultFrameCount, default_output_size(image)};
  if (root.contains("frames")) read_int(root, "frames", "frames", 1, kMaxFrameCount, spec.frames, errs);
  if (root.contains("out")) {
    const json& o = root["out"];
    if (!o.is_object()) {
      errs.push_back({"out", "must be an object with w, h"});
    } else {
      for (const char* k : {"w", "h"}) {
        const std::string field = std::string("out.") + k;
        if (!o.contains(k)) {
          errs.push_back({field, "required"});
          continue;
        }
        read_int(o, k, field, 1, kMaxOutputDim, k[0] == 'w' ? spec.out.width : spec.out.height, errs);
      }
    }
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  spec.start = *start;
  spec.end = *end;
  return spec;
}

std::string dump_effect_spec(const EffectSpec& spec) {
  nlohmann::ordered_json j;
  j["v"] = 1;
  j["start"] = crop_json(spec.start);
  j["end"] = crop_json(spec.end);
  j["frames"] = spec.frames;
  j["out"] = {{"w", spec.out.width}, {"h", spec.out.height}};
  return j.dump(2);
}

double foreground_depth(const DepthMap& depth, const Rect& crop, const SegMaskSet* masks) {
  if (masks && masks->size() != depth.size())
    throw DimensionMismatch("foreground_depth: masks " + to_string(masks->size()) + " vs depth " +
                            to_string(depth.size()));
  // Pixels whose centres lie in [x, x + w) x [y, y + h).
  const int x0 = std::max(0, static_cast<int>(std::ceil(crop.x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(crop.y - 0.5)));
  const int x1 = std::min(depth.width(), static_cast<int>(std::ceil(crop.x + crop.w - 0.5)));
  const int y1 = std::min(depth.height(), static_cast<int>(std::ceil(crop.y + crop.h - 0.5)));
  if (x0 >= x1 || y0 >= y1) throw DegenerateInput("foreground_depth: empty crop");

  if (masks) {
    std::map<int, std::size_t> overlap;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const int l = masks->labels(x, y);
        if (masks->is_salient(l)) ++overlap[l];
      }
    int best = 0;
    std::size_t best_n = 0;
    for (const auto& [label, n] : overlap)
      if (n > best_n) {
        best = label;
        best_n = n;
      }
    if (best > 0) {
      std::vector<double> v;
      for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x)
          if (masks->labels(x, y) == best && depth.valid(x, y)) v.push_back(depth(x, y));
      if (!v.empty()) return percentile(std::move(v), 50.0);
    }
  }

  std::vector<double> v;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (depth.valid(x, y)) v.push_back(depth(x, y));
  if (v.empty()) throw DegenerateInput("foreground_depth: no valid depth inside the crop");
  return percentile(std::move(v), 25.0);
}

CameraPose crop_to_pose(const CropWindow& crop, Size image, const Intrinsics& K, double d_f) {
  if (!(std::isfinite(d_f) && d_f > 0.0)) throw ValidationError("d_f", "foreground depth must be positive and finite");
  const double z = crop.w() / image.width;
  CameraPose p;
  p.tz = d_f * (1.0 - z);
  const double dcx = crop.rect().center_x() - 0.5 * image.width;
  const double dcy = crop.rect().center_y() - 0.5 * image.height;
  p.tx = dcx * (d_f - p.tz) / K.fx;
  p.ty = dcy * (d_f - p.tz) / K.fy;
  return p;
}

InteractiveBounds interactive_bounds(Size image, const Intrinsics& K_image, double d_f, const InteractiveRange& range) {
  if (!(range.max_scale > 0.0 && range.max_scale <= 1.0))
    throw ValidationError("max_scale", "interactive crop scale must be in (0, 1]");
  const double w = range.max_scale * image.width, h = range.max_scale * image.height;
  const double mx = 0.5 * (image.width - w), my = 0.5 * (image.height - h);
  auto pose = [&](double x, double y) { return crop_to_pose(CropWindow::create(x, y, w, h, image), image, K_image, d_f); };
  return {pose(0.0, my), pose(image.width - w, my), pose(mx, 0.0), pose(mx, image.height - h)};
}

}  // namespace kb
