#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "kenburns/io.hpp"
#include "kenburns/metrics.hpp"
#include "kenburns/service.hpp"

namespace fs = std::filesystem;
using namespace kb;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissingInput = 2;

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  if (!path.empty() && !fs::exists(path)) throw MissingInput(std::string(what) + " file not found: " + path);
}

struct SceneArgs {
  std::string image, depth, masks;
  service::ServiceConfig cfg;

  void add(CLI::App* app, bool depth_required) {
    app->add_option("--image", image, "Input image (PNG or JPEG)")->required();
    auto* d = app->add_option("--depth", depth, "Depth map (.pfm, or 16-bit .png with a .json sidecar)");
    if (depth_required) d->required();
    app->add_option("--masks", masks, "Instance label PNG; salient ids in a .json sidecar");
    app->add_option("--coarse-dim", cfg.coarse_max_dim, "Long side of the coarse depth")->capture_default_str();
    app->add_option("--cloud-dim", cfg.cloud_max_dim, "Long side of the refined depth and point cloud")
        ->capture_default_str();
    app->add_option("--out-dim", cfg.out_max_dim, "Long side of the output frames")->capture_default_str();
  }

  PreparedScene load() const {
    require_file(image, "image");
    require_file(depth, "depth");
    require_file(masks, "masks");
    const ImageBuffer img = io::load_image(image);
    std::optional<DepthMap> d;
    if (!depth.empty()) d = io::load_depth(depth);
    std::optional<SegMaskSet> m;
    if (!masks.empty()) m = io::load_masks(masks);
    return service::prepare_from_inputs(img, d, m, cfg);
  }
};

void write_frames(const fs::path& out, const std::vector<io::Bytes>& frames) {
  const fs::path dir = out / "frames";
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".png") fs::remove(e.path());
  char name[32];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::snprintf(name, sizeof name, "%05zu.png", i);
    io::write_file(dir / name, frames[i]);
  }
}

void write_text(const fs::path& p, const std::string& s) { io::write_file(p, io::Bytes(s.begin(), s.end())); }

int run_serve(const service::ServiceConfig& cfg, const std::string& host, int port_opt) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  const std::uint16_t port = port_opt >= 0 ? static_cast<std::uint16_t>(port_opt) : service::port_from_env();
  service::SessionManager sessions(cfg);
  service::Server server(sessions, port, host);
  server.start();
  std::cout << "listening on http://" << host << ":" << server.port() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D Ken Burns effect from a single image and its depth"};
  app.require_subcommand(1);

  SceneArgs autozoom_args;
  std::string autozoom_out;
  int autozoom_frames = kDefaultFrameCount;
  auto* autozoom = app.add_subcommand("autozoom", "Pick the end view automatically and render the effect");
  autozoom_args.add(autozoom, true);
  autozoom->add_option("--out", autozoom_out, "Output directory")->required();
  autozoom->add_option("--frames", autozoom_frames, "Frame count")->capture_default_str()->check(CLI::Range(1, kMaxFrameCount));

  SceneArgs render_args;
  std::string render_spec, render_out;
  auto* render_cmd = app.add_subcommand("render", "Render the effect for given crops");
  render_args.add(render_cmd, true);
  render_cmd->add_option("--spec", render_spec, "Crops JSON (as written by autozoom)")->required();
  render_cmd->add_option("--out", render_out, "Output directory")->required();

  std::string pred, gt, planes, edges, report, csv;
  bool l2 = false;
  double dde_threshold = 3.0;
  auto* eval = app.add_subcommand("evaluate", "Align a predicted depth map to ground truth and report metrics");
  eval->add_option("--pred", pred, "Predicted depth")->required();
  eval->add_option("--gt", gt, "Ground-truth depth")->required();
  eval->add_option("--planes", planes, "Plane annotations JSON");
  eval->add_option("--edges", edges, "Ground-truth occlusion edges PNG");
  eval->add_option("--report", report, "Output JSON report")->required();
  eval->add_option("--csv", csv, "Output CSV (default: report path with .csv)");
  eval->add_flag("--l2", l2, "Least-squares instead of least-absolute alignment");
  eval->add_option("--dde-threshold", dde_threshold, "Directed depth error threshold")->capture_default_str();

  std::string scene_dir;
  std::uint32_t seed = 0;
  bool crops = false;
  int resolution = service::kDatasetResolution;
  auto* inspect = app.add_subcommand("dataset-inspect", "Validate a 4-view dataset scene and print statistics");
  inspect->add_option("--scene", scene_dir, "Scene directory")->required();
  inspect->add_flag("--crops", crops, "Preview the random top/bottom or left/right crop augmentation");
  inspect->add_option("--seed", seed, "Seed for the crop preview")->capture_default_str();
  inspect->add_option("--resolution", resolution, "Expected view resolution")->capture_default_str();

  service::ServiceConfig serve_cfg;
  std::string host = "127.0.0.1";
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the interactive preview service");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (default: KENBURNS_PORT or 8571)");
  serve->add_option("--cloud-dim", serve_cfg.cloud_max_dim, "Long side of the point cloud")->capture_default_str();
  serve->add_option("--out-dim", serve_cfg.out_max_dim, "Long side of preview frames")->capture_default_str();
  serve->add_option("--max-scale", serve_cfg.range.max_scale, "Smallest interactive crop scale")->capture_default_str();
  serve->add_flag("--jpeg", serve_cfg.jpeg_preview, "Stream JPEG (quality 90) instead of PNG");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*autozoom) {
      const PreparedScene scene = autozoom_args.load();
      const Size out = service::output_size(scene.image_size(), autozoom_args.cfg);
      const EffectSpec spec = automatic_spec(scene, autozoom_frames, out, EndViewGrid::defaults(),
                                             autozoom_args.cfg.scene.extend.render);
      fs::create_directories(autozoom_out);
      write_text(fs::path(autozoom_out) / "crops.json", dump_effect_spec(spec) + "\n");
      write_frames(autozoom_out, service::render_spec_png(scene, spec, autozoom_args.cfg));
      std::cout << "wrote " << spec.frames << " frames to " << (fs::path(autozoom_out) / "frames").string() << "\n";
    } else if (*render_cmd) {
      require_file(render_spec, "spec");
      const PreparedScene scene = render_args.load();
      const io::Bytes text = io::read_file(render_spec);
      const EffectSpec spec = parse_effect_spec(std::string(text.begin(), text.end()), scene.image_size());
      write_frames(render_out, service::render_spec_png(scene, spec, render_args.cfg));
      std::cout << "wrote " << spec.frames << " frames to " << (fs::path(render_out) / "frames").string() << "\n";
    } else if (*eval) {
      require_file(pred, "pred");
      require_file(gt, "gt");
      require_file(planes, "planes");
      require_file(edges, "edges");
      EvaluationInputs in;
      in.norm = l2 ? AlignNorm::l2 : AlignNorm::l1;
      in.dde_threshold = dde_threshold;
      if (!planes.empty()) in.planes = load_plane_annotations(planes);
      if (!edges.empty()) in.gt_edges = io::decode_binary_png(io::read_file(edges));
      const MetricReport r = evaluate(io::load_depth(pred), io::load_depth(gt), in);
      write_text(report, report_to_json(r) + "\n");
      write_text(csv.empty() ? fs::path(report).replace_extension(".csv") : fs::path(csv), report_to_csv(r));
      std::cout << report_to_json(r) << "\n";
    } else if (*inspect) {
      try {
        const service::DatasetScene scene = service::load_dataset_scene(scene_dir, resolution);
        for (int v = 0; v < service::kDatasetViews; ++v) {
          const auto s = service::summarize_view(scene.views[v], v);
          std::printf("view%d %dx%d depth[min %.6g max %.6g mean %.6g valid %zu] color[%.4f %.4f %.4f] |n| %.4f\n",
                      s.view, s.size.width, s.size.height, s.depth_min, s.depth_max, s.depth_mean, s.valid_depth,
                      s.mean_color[0], s.mean_color[1], s.mean_color[2], s.mean_normal_length);
        }
        std::printf("camera.json: %s\n", scene.camera_json.empty() ? "absent" : "present");
        if (crops)
          for (const auto& c : service::augmentation_crops({resolution, resolution}, service::kDatasetViews, seed))
            std::printf("crop view%d %s x=%d y=%d w=%d h=%d\n", c.view, c.rows ? "top-bottom" : "left-right", c.x,
                        c.y, c.w, c.h);
      } catch (const ValidationError& e) {
        std::cerr << "invalid scene " << scene_dir << ":\n";
        for (const auto& f : e.fields()) std::cerr << "  " << f.field << ": " << f.reason << "\n";
        return kExitFailure;
      }
    } else if (*serve) {
      return run_serve(serve_cfg, host, port);
    }
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
