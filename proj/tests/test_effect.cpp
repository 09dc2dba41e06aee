#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "kenburns/effect.hpp"

using namespace kb;
using namespace kboracle;

namespace {

bool has_field(const ValidationError& e, const std::string& field) {
  return std::any_of(e.fields().begin(), e.fields().end(), [&](const FieldError& f) { return f.field == field; });
}

class KeepCoarse final : public DepthRefiner {
 public:
  DepthMap refine(const ImageBuffer&, const DepthMap& coarse) const override { return coarse; }
};

PreparedScene two_plane_scene() {
  const kbtest::TwoPlane s;
  return prepare_scene(s.image(), s.depth(), nullptr, KeepCoarse{}, DefaultContextExtractor{});
}

}  // namespace

// ---------------------------------------------------------------------------

TEST(EffectSpec, ParsesAndFillsDefaults) {
  const Size img{640, 480};
  const EffectSpec s =
      parse_effect_spec(R"({"v":1,"start":{"x":0,"y":0,"w":640,"h":480},"end":{"x":80,"y":60,"w":320,"h":240}})", img);
  EXPECT_EQ(s.frames, 45);
  EXPECT_EQ(s.out, (Size{512, 384}));
  EXPECT_EQ(s.end.w(), 320);
  EXPECT_EQ(parse_effect_spec(dump_effect_spec(s), img), s);
}

TEST(EffectSpec, DumpKeepsKeyOrder) {
  const Size img{64, 48};
  const EffectSpec s{CropWindow::full(img), CropWindow::create(8, 6, 32, 24, img), 10, {32, 24}};
  const auto j = nlohmann::ordered_json::parse(dump_effect_spec(s));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"v", "start", "end", "frames", "out"}));
}

TEST(EffectSpec, MalformedJsonIsAParseError) {
  EXPECT_THROW(parse_effect_spec("{\"start\": ", {64, 48}), ParseError);
}

TEST(EffectSpec, CollectsEveryViolation) {
  try {
    parse_effect_spec(
        R"({"start":{"x":0,"y":0,"w":64,"h":48},"end":{"x":0,"y":0,"w":30,"h":30},"frames":0,"out":{"w":16}})",
        {64, 48});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(has_field(e, "end.aspect"));
    EXPECT_TRUE(has_field(e, "frames"));
    EXPECT_TRUE(has_field(e, "out.h"));
  }
}

// ---------------------------------------------------------------------------

TEST(CropToPose, FullCropIsIdentityForAnyDepth) {
  const Size img{640, 480};
  for (double d : {0.5, 2.0, 40.0})
    EXPECT_EQ(crop_to_pose(CropWindow::full(img), img, Intrinsics::default_for(img), d), CameraPose{});
  EXPECT_THROW(crop_to_pose(CropWindow::full(img), img, Intrinsics::default_for(img), 0.0), ValidationError);
}

TEST(CropToPose, CentredHalfCropDoublesTheForegroundPlane) {
  const Size img{64, 64};
  const CameraPose p = crop_to_pose(CropWindow::create(16, 16, 32, 32, img), img, Intrinsics::default_for(img), 4.0);
  EXPECT_DOUBLE_EQ(p.tz, 2.0);
  EXPECT_EQ(p.tx, 0.0);

  // The cloud has twice the output resolution, as in the pipeline, so a 2x zoom stays dense.
  kbtest::TwoPlane s;
  s.fg = 2.5;
  s.x0 = 28, s.x1 = 36, s.y0 = 28, s.y1 = 36;  // 4 output px at the start view
  const Size out{32, 32};
  const Intrinsics K_out = s.K().rescaled(img, out);
  const CameraPose q = crop_to_pose(CropWindow::create(16, 16, 32, 32, img), img, s.K(), s.fg);
  auto extent = [&](const CameraPose& pose) {
    const RenderFrame f = render(s.cloud(), pose, K_out, out);
    int n = 0;
    for (int x = 0; x < out.width; ++x) n += f.depth.valid(x, 16) && std::abs(f.depth(x, 16) - (s.fg - pose.tz)) < 1e-9;
    return n;
  };
  EXPECT_EQ(extent({}), 4);
  const int width = extent(q) / 2;
  EXPECT_NEAR(width, 4, 0.5);
}

TEST(CropToPose, ForegroundShiftEqualsCropOffset) {
  // Scale 0.5 crops reach offsets of +-25% of the width. The cloud is sampled at
  // twice the output resolution so the 2x zoom has no gaps.
  const Size img{128, 96}, dense{256, 192};
  const Intrinsics K = Intrinsics::default_for(img);
  const double d_f = 4.0;
  const PointCloud cloud = plane_cloud(dense, d_f);
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> ox(-32.0, 32.0), oy(-24.0, 24.0);
  for (int t = 0; t < 25; ++t) {
    const double dx = t == 0 ? 32.0 : t == 1 ? -32.0 : ox(rng), dy = t < 2 ? 24.0 : oy(rng);
    const CropWindow crop = CropWindow::create(32 + dx, 24 + dy, 64, 48, img);
    const CameraPose shifted = crop_to_pose(crop, img, K, d_f);
    const CameraPose zoom_only{0.0, 0.0, shifted.tz};
    const RenderFrame a = render(cloud, shifted, K, img), b = render(cloud, zoom_only, K, img);
    // A point that zoom alone puts at dx / 2 right of centre lands dx / 2 left of it after the shift.
    const int sx = static_cast<int>(2 * (64 + 0.25 * dx)), sy = static_cast<int>(2 * (48 + 0.25 * dy));
    const std::int64_t index = static_cast<std::int64_t>(sy) * dense.width + sx;
    const int xa = column_of(a, index), xb = column_of(b, index);
    ASSERT_GE(xa, 0) << t;
    ASSERT_GE(xb, 0) << t;
    EXPECT_NEAR(xb - xa, dx, 1.0) << t;
  }
}

// ---------------------------------------------------------------------------

TEST(AutoEndView, MatchesExhaustiveOracle) {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> pos(4, 40), ext(6, 20);
  std::uniform_real_distribution<double> near(1.0, 3.0), far(4.0, 9.0);
  const Size img{64, 48}, out{32, 24};
  const EndViewGrid grid = EndViewGrid::defaults();
  for (int t = 0; t < 20; ++t) {
    kbtest::TwoPlane s;
    s.width = 64, s.height = 48, s.focal = 64;
    s.bg = far(rng), s.fg = near(rng);
    s.x0 = pos(rng), s.x1 = std::min(64, s.x0 + ext(rng));
    s.y0 = std::min(40, pos(rng)), s.y1 = std::min(48, s.y0 + ext(rng));
    const PointCloud c = s.cloud();
    const double d_f = s.fg;
    const EndViewCandidate got = auto_end_view(c, img, s.K(), d_f, out, grid);
    const OracleCandidate want = end_view_oracle(c, img, s.K(), d_f, out, grid);
    EXPECT_EQ(got.crop, want.crop) << t;
    EXPECT_EQ(got.holes, want.holes) << t;
    EXPECT_EQ(got.row, want.row);
    EXPECT_EQ(got.column, want.column);
  }
}

TEST(AutoEndView, TiesPreferSmallestCentredCrop) {
  const Size img{64, 48};
  EndViewGrid g;
  g.scales = {0.9, 0.6, 0.75};
  g.columns = 3;
  g.rows = 3;
  std::vector<EndViewCandidate> all;
  const EndViewCandidate e =
      auto_end_view(plane_cloud(img, 3.0), img, Intrinsics::default_for(img), 3.0, {32, 24}, g, {}, &all);
  EXPECT_EQ(all.size(), 27u);
  for (const auto& c : all) EXPECT_EQ(c.holes, 0u);
  EXPECT_EQ(e.scale, 0.6);
  EXPECT_EQ(e.row, 1);
  EXPECT_EQ(e.column, 1);
}

TEST(AutoEndView, EvaluatesAtHalfTheCloudSide) {
  EXPECT_EQ(end_view_eval_size({1024, 768}), (Size{512, 384}));
  EXPECT_EQ(end_view_eval_size({64, 48}), (Size{32, 24}));
}

// ---------------------------------------------------------------------------

TEST(ForegroundDepth, LowerQuartileWithoutMasks) {
  DepthMap d(4, 1);
  d(0, 0) = 1, d(1, 0) = 2, d(2, 0) = 3, d(3, 0) = 4;
  EXPECT_EQ(foreground_depth(d, {0, 0, 4, 1}), 1.75);
  // Pixel (3, 0) has its centre at 3.5, outside [0, 3.4).
  EXPECT_EQ(foreground_depth(d, {0, 0, 3.4, 1}), 1.5);
}

TEST(ForegroundDepth, MedianOfTheMostOverlappingSalientInstance) {
  DepthMap d(6, 2, 9.0);
  SegMaskSet m;
  m.labels = Raster<std::int32_t>(6, 2, 1, 0);
  m.salient = {false, true, true};
  const double v1[] = {2, 3, 4}, v2[] = {7, 8};
  for (int x = 0; x < 3; ++x) m.labels(x, 0) = 1, d(x, 0) = v1[x];
  for (int x = 4; x < 6; ++x) m.labels(x, 1) = 2, d(x, 1) = v2[x - 4];
  EXPECT_EQ(foreground_depth(d, {0, 0, 6, 2}, &m), 3.0);
  EXPECT_EQ(foreground_depth(d, {3, 0, 3, 2}, &m), 7.5);
  m.salient = {false, false, false};
  EXPECT_EQ(foreground_depth(d, {4, 1, 2, 1}, &m), 7.25);
}

// ---------------------------------------------------------------------------

TEST(Synthesize, FrameZeroOfAFullStartReproducesTheImage) {
  const PreparedScene scene = two_plane_scene();
  const Size img = scene.image_size();
  const EffectSpec spec{CropWindow::full(img), CropWindow::create(8, 8, 48, 48, img), 9, img};
  const std::vector<ImageBuffer> frames = synthesize(scene, spec, LaplaceInpainter{}, DefaultContextExtractor{});
  ASSERT_EQ(frames.size(), 9u);
  EXPECT_EQ(frames[0], scene.image);
}

TEST(Synthesize, PlanFramesMatchTheStreamAndAreHoleFreeAtTheEnds) {
  const PreparedScene scene = two_plane_scene();
  const Size img = scene.image_size();
  const EffectSpec spec{CropWindow::full(img), CropWindow::create(8, 0, 48, 48, img), 5, {32, 32}};
  const EffectPlan plan = plan_effect(scene, spec, LaplaceInpainter{}, DefaultContextExtractor{});
  EXPECT_DOUBLE_EQ(plan.d_f, scene.foreground_depth_of(spec.start));
  EXPECT_EQ(plan.frame(0).hole_count(), 0u);
  EXPECT_EQ(plan.frame(4).hole_count(), 0u);
  int seen = 0;
  synthesize(scene, spec, LaplaceInpainter{}, DefaultContextExtractor{}, [&](int k, const RenderFrame& f) {
    EXPECT_EQ(k, seen++);
    EXPECT_EQ(f.color, plan.frame(k).color);
  });
  EXPECT_EQ(seen, 5);
  EXPECT_THROW(plan.frame(5), ValidationError);
}

TEST(Synthesize, AutomaticSpecIsDeterministic) {
  const PreparedScene scene = two_plane_scene();
  const EffectSpec a = automatic_spec(scene, 45, {64, 64}), b = automatic_spec(scene, 45, {64, 64});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.start, CropWindow::full(scene.image_size()));
  EXPECT_LT(a.end.w(), 64.0);
}

TEST(Synthesize, MasksMustMatchTheImage) {
  const kbtest::TwoPlane s;
  SegMaskSet m;
  m.labels = Raster<std::int32_t>(32, 32, 1, 0);
  EXPECT_THROW(prepare_scene(s.image(), s.depth(), &m, DefaultRefiner{}, DefaultContextExtractor{}), DimensionMismatch);
}
