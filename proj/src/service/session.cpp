#include <algorithm>
#include <cstdio>
#include <random>

#include "kenburns/service.hpp"

namespace kb::service {

Toolchain::Toolchain(const ServiceConfig& cfg)
    : refiner(RefineConfig{cfg.cloud_max_dim}), context(), inpainter(cfg.inpaint) {}

Size output_size(Size image, const ServiceConfig& cfg) { return refine_target_size(image, cfg.out_max_dim); }

PreparedScene prepare_from_inputs(const ImageBuffer& image, const std::optional<DepthMap>& depth,
                                  const std::optional<SegMaskSet>& masks, const ServiceConfig& cfg) {
  image.validate();
  const DepthMap coarse = depth ? StaticDepthProvider(*depth, cfg.coarse_max_dim).estimate(image)
                                : SyntheticDepthProvider(cfg.coarse_max_dim).estimate(image);
  const Toolchain tc(cfg);
  return prepare_scene(image, coarse, masks ? &*masks : nullptr, tc.refiner, tc.context, cfg.scene);
}

std::vector<io::Bytes> render_spec_png(const PreparedScene& scene, const EffectSpec& spec, const ServiceConfig& cfg) {
  const Toolchain tc(cfg);
  std::vector<io::Bytes> frames;
  frames.reserve(static_cast<std::size_t>(spec.frames));
  synthesize(scene, spec, tc.inpainter, tc.context,
             [&](int, const RenderFrame& f) { frames.push_back(io::encode_image_png(f.color)); }, cfg.scene);
  return frames;
}

ImageBuffer colorize_depth(const DepthMap& depth) {
  static constexpr double stops[5][3] = {
      {0.05, 0.03, 0.20}, {0.25, 0.15, 0.55}, {0.10, 0.55, 0.60}, {0.55, 0.85, 0.30}, {0.99, 0.93, 0.20}};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y)) {
        lo = std::min(lo, 1.0 / depth(x, y));
        hi = std::max(hi, 1.0 / depth(x, y));
      }
  ImageBuffer out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double t = hi > lo ? (1.0 / depth(x, y) - lo) / (hi - lo) : 1.0;
      const double pos = t * 4.0;
      const int i = std::min(3, static_cast<int>(pos));
      for (int c = 0; c < 3; ++c) out(x, y, c) = std::lerp(stops[i][c], stops[i + 1][c], pos - i);
    }
  return out;
}

std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::pending: return "pending";
    case SessionStatus::running: return "running";
    case SessionStatus::ready: return "ready";
    case SessionStatus::failed: return "failed";
  }
  return "unknown";
}

namespace {

void check_spec(const EffectSpec& spec, Size image) {
  std::vector<FieldError> errs = check_crop(spec.start.x(), spec.start.y(), spec.start.w(), spec.start.h(), image, "start.");
  auto e2 = check_crop(spec.end.x(), spec.end.y(), spec.end.w(), spec.end.h(), image, "end.");
  errs.insert(errs.end(), e2.begin(), e2.end());
  if (spec.frames < 1 || spec.frames > kMaxFrameCount) errs.push_back({"frames", "out of range"});
  if (spec.out.width < 1 || spec.out.height < 1 || spec.out.width > kMaxOutputDim || spec.out.height > kMaxOutputDim)
    errs.push_back({"out", "output size out of range"});
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

}  // namespace

Session::Session(std::string id, SessionUpload upload, ServiceConfig cfg)
    : id_(std::move(id)), cfg_(cfg), image_size_(upload.image.size()),
      spec_{CropWindow::full(image_size_), CropWindow::full(image_size_), kDefaultFrameCount,
            output_size(image_size_, cfg_)} {
  state_.revision = 1;
  worker_ = std::thread([this, u = std::move(upload)]() mutable { run(std::move(u)); });
}

Session::~Session() {
  if (worker_.joinable()) worker_.join();
}

void Session::set_stage(const std::string& stage, double progress) {
  std::lock_guard lk(mu_);
  state_.status = SessionStatus::running;
  state_.stage = stage;
  state_.progress = progress;
}

void Session::run(SessionUpload upload) {
  try {
    set_stage("depth", 0.1);
    auto scene = std::make_unique<PreparedScene>(prepare_from_inputs(upload.image, upload.depth, upload.masks, cfg_));
    set_stage("extend", 0.5);
    const Toolchain tc(cfg_);
    const double d_f = scene->foreground_depth_of(CropWindow::full(image_size_));
    const InteractiveBounds bounds = interactive_bounds(image_size_, scene->K_image, d_f, cfg_.range);
    auto cloud = std::make_unique<PointCloud>(extend_for_interactive(
        scene->cloud, bounds, scene->K_cloud, scene->cloud_size(), tc.inpainter, tc.context, cfg_.scene.extend));
    std::lock_guard lk(mu_);
    scene_ = std::move(scene);
    interactive_ = std::move(cloud);
    state_.status = SessionStatus::ready;
    state_.stage = "ready";
    state_.progress = 1.0;
  } catch (const std::exception& e) {
    std::lock_guard lk(mu_);
    state_.status = SessionStatus::failed;
    state_.stage = "failed";
    state_.error = e.what();
  }
  ready_cv_.notify_all();
}

SessionSnapshot Session::snapshot() const {
  std::lock_guard lk(mu_);
  return state_;
}

bool Session::wait_ready(std::chrono::milliseconds timeout) const {
  std::unique_lock lk(mu_);
  ready_cv_.wait_for(lk, timeout, [&] {
    return state_.status == SessionStatus::ready || state_.status == SessionStatus::failed;
  });
  return state_.status == SessionStatus::ready;
}

std::uint32_t Session::set_spec(const EffectSpec& spec) {
  check_spec(spec, image_size_);
  std::lock_guard lk(mu_);
  spec_ = spec;
  return ++state_.revision;
}

std::pair<EffectSpec, std::uint32_t> Session::spec() const {
  std::lock_guard lk(mu_);
  return {spec_, state_.revision};
}

Session::Frame Session::preview_frame(std::uint32_t k) {
  std::uint32_t rev = 0;
  const EffectSpec spec = [&] {
    std::lock_guard lk(mu_);
    if (state_.status != SessionStatus::ready) throw NotReady("session " + id_ + " is not ready");
    rev = state_.revision;
    return spec_;
  }();
  Frame f;
  f.revision = rev;
  f.count = static_cast<std::uint32_t>(spec.frames);
  f.index = k % f.count;

  std::lock_guard rl(render_mu_);
  if (rev > cache_revision_) {
    cache_.clear();
    cache_revision_ = rev;
  }
  if (rev == cache_revision_) {
    if (auto it = cache_.find(f.index); it != cache_.end()) {
      f.data = it->second;
      return f;
    }
  }
  const CameraPath path = effect_path(*scene_, spec);
  const Intrinsics K_out = scene_->K_image.rescaled(image_size_, spec.out);
  const RenderFrame frame = render(*interactive_, path.pose_at(static_cast<int>(f.index)), K_out, spec.out,
                                   cfg_.scene.extend.render);
  f.data = std::make_shared<const io::Bytes>(cfg_.jpeg_preview ? io::encode_jpeg(frame.color, cfg_.jpeg_quality)
                                                                : io::encode_image_png(frame.color));
  if (rev == cache_revision_) cache_[f.index] = f.data;
  return f;
}

io::Bytes Session::depth_png() const {
  std::lock_guard lk(mu_);
  if (state_.status != SessionStatus::ready) throw NotReady("session " + id_ + " is not ready");
  return io::encode_image_png(colorize_depth(scene_->depth));
}

io::Bytes Session::export_zip(int frames) const {
  EffectSpec spec = [&] {
    std::lock_guard lk(mu_);
    if (state_.status != SessionStatus::ready) throw NotReady("session " + id_ + " is not ready");
    return spec_;
  }();
  if (frames < 1 || frames > kMaxFrameCount)
    throw ValidationError("frames", "must be in [1, " + std::to_string(kMaxFrameCount) + "]");
  spec.frames = frames;
  ZipWriter zip;
  const auto pngs = render_spec_png(*scene_, spec, cfg_);
  char name[32];
  for (std::size_t i = 0; i < pngs.size(); ++i) {
    std::snprintf(name, sizeof name, "%05zu.png", i);
    zip.add(name, pngs[i]);
  }
  return zip.finish();
}

EffectSpec Session::automatic() const {
  int frames = kDefaultFrameCount;
  {
    std::lock_guard lk(mu_);
    if (state_.status != SessionStatus::ready) throw NotReady("session " + id_ + " is not ready");
    frames = spec_.frames;
  }
  return automatic_spec(*scene_, frames, output_size(image_size_, cfg_), EndViewGrid::defaults(),
                        cfg_.scene.extend.render);
}

std::shared_ptr<Session> SessionManager::create(SessionUpload upload) {
  upload.image.validate();
  static std::mutex rng_mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::string id;
  {
    std::lock_guard lk(rng_mu);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    id = buf;
  }
  auto s = std::make_shared<Session>(id, std::move(upload), cfg_);
  std::lock_guard lk(mu_);
  sessions_[id] = s;
  return s;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

}  // namespace kb::service
