#include <random>

#include "kenburns/service.hpp"

namespace kb::service {

namespace fs = std::filesystem;

DatasetScene load_dataset_scene(const fs::path& dir, int resolution) {
  if (!fs::is_directory(dir)) throw ValidationError("scene", "not a directory: " + dir.string());
  DatasetScene scene;
  std::vector<FieldError> errs;
  const Size expected{resolution, resolution};

  for (int v = 0; v < kDatasetViews; ++v) {
    const std::string name = "view" + std::to_string(v);
    const fs::path vd = dir / name;
    if (!fs::is_directory(vd)) {
      errs.push_back({name, "missing view directory"});
      continue;
    }
    auto check = [&](const char* file, Size got) {
      if (got != expected)
        errs.push_back({name + "/" + file, "expected " + to_string(expected) + ", got " + to_string(got)});
    };
    auto guarded = [&](const char* file, auto&& load) {
      const fs::path p = vd / file;
      if (!fs::exists(p)) {
        errs.push_back({name + "/" + file, "missing"});
        return;
      }
      try {
        load(p);
      } catch (const Error& e) {
        errs.push_back({name + "/" + file, e.what()});
      }
    };
    DatasetView& view = scene.views[v];
    guarded("color.png", [&](const fs::path& p) {
      view.color = io::load_image(p);
      check("color.png", view.color.size());
    });
    guarded("depth.pfm", [&](const fs::path& p) {
      view.depth = io::decode_depth_pfm(io::read_file(p));
      check("depth.pfm", view.depth.size());
    });
    guarded("normal.pfm", [&](const fs::path& p) {
      view.normal = io::decode_pfm(io::read_file(p));
      check("normal.pfm", view.normal.size());
      if (view.normal.channels() != 3) errs.push_back({name + "/normal.pfm", "expected 3 channels"});
    });
  }
  // Views beyond the fourth violate the fixed layout too.
  if (fs::is_directory(dir / ("view" + std::to_string(kDatasetViews))))
    errs.push_back({"view" + std::to_string(kDatasetViews), "unexpected extra view"});

  const fs::path cam = dir / "camera.json";
  if (fs::exists(cam)) {
    const io::Bytes b = io::read_file(cam);
    scene.camera_json.assign(b.begin(), b.end());
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return scene;
}

ViewSummary summarize_view(const DatasetView& v, int index) {
  ViewSummary s;
  s.view = index;
  s.size = v.color.size();
  double sum = 0.0;
  bool first = true;
  for (int y = 0; y < v.depth.height(); ++y)
    for (int x = 0; x < v.depth.width(); ++x) {
      if (!v.depth.valid(x, y)) continue;
      const double d = v.depth(x, y);
      s.depth_min = first ? d : std::min(s.depth_min, d);
      s.depth_max = first ? d : std::max(s.depth_max, d);
      first = false;
      sum += d;
      ++s.valid_depth;
    }
  if (s.valid_depth) s.depth_mean = sum / static_cast<double>(s.valid_depth);
  const double n = static_cast<double>(v.color.size().area());
  for (int y = 0; y < v.color.height(); ++y)
    for (int x = 0; x < v.color.width(); ++x)
      for (int c = 0; c < 3; ++c) s.mean_color[c] += v.color(x, y, c) / n;
  double len = 0.0;
  for (int y = 0; y < v.normal.height(); ++y)
    for (int x = 0; x < v.normal.width(); ++x)
      len += std::sqrt(v.normal(x, y, 0) * v.normal(x, y, 0) + v.normal(x, y, 1) * v.normal(x, y, 1) +
                       v.normal(x, y, 2) * v.normal(x, y, 2));
  if (v.normal.pixel_count()) s.mean_normal_length = len / static_cast<double>(v.normal.pixel_count());
  return s;
}

std::vector<AugmentCrop> augmentation_crops(Size size, int views, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<AugmentCrop> out;
  for (int v = 0; v < views; ++v) {
    AugmentCrop c;
    c.view = v;
    c.rows = rng() % 2 == 0;
    const int side = c.rows ? size.height : size.width;
    const auto limit = static_cast<std::uint32_t>(side / 4 + 1);
    const int a = static_cast<int>(rng() % limit);
    const int b = static_cast<int>(rng() % limit);
    if (c.rows) {
      c.x = 0;
      c.w = size.width;
      c.y = a;
      c.h = size.height - a - b;
    } else {
      c.y = 0;
      c.h = size.height;
      c.x = a;
      c.w = size.width - a - b;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace kb::service
