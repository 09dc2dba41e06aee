#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "kenburns/metrics.hpp"

using namespace kb;
namespace oracle = kboracle;
using kboracle::gradient_check;

namespace {

InverseDepthMap ramp(int w, int h, double offset) {
  InverseDepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(x, y) = offset + 0.25 * x + 0.5 * y;
  return m;
}

}  // namespace

TEST(ScaleInvariantGradient, ConstantMapHasZeroGradient) {
  const InverseDepthMap f(6, 5, 1.0);
  const GradientField g = scale_invariant_gradient(f, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      EXPECT_TRUE(g.valid(x, y));
      EXPECT_EQ(g.gx(x, y), 0.0);
      EXPECT_EQ(g.gy(x, y), 0.0);
    }
  EXPECT_FALSE(g.valid(5, 0));
  EXPECT_FALSE(g.valid(0, 4));
}

TEST(ScaleInvariantGradient, TwoValuesGiveOneThird) {
  InverseDepthMap f(2, 2, 1.0);
  f(1, 0) = 2.0;
  const GradientField g = scale_invariant_gradient(f, 1);
  EXPECT_DOUBLE_EQ(g.gx(0, 0), 1.0 / 3.0);
}

TEST(ScaleInvariantGradient, ZeroMapIsGuarded) {
  const GradientField g = scale_invariant_gradient(InverseDepthMap(4, 4, 0.0), 1);
  for (double v : g.gx.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.gy.data()) EXPECT_EQ(v, 0.0);
}

TEST(ScaleInvariantGradient, ComponentsStayInUnitRange) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  InverseDepthMap f(20, 20);
  for (double& v : f.values().storage()) v = u(rng);
  for (int h : {1, 2, 4, 8, 16}) {
    const GradientField g = scale_invariant_gradient(f, h);
    for (double v : g.gx.data()) EXPECT_LE(std::fabs(v), 1.0);
    for (double v : g.gy.data()) EXPECT_LE(std::fabs(v), 1.0);
  }
}

TEST(LossOrd, Basics) {
  const InverseDepthMap a(4, 4, 0.5);
  InverseDepthMap b(4, 4, 0.6);
  EXPECT_EQ(loss_ord(a, a), 0.0);
  EXPECT_NEAR(loss_ord(b, a), 1.6, 1e-12);
  EXPECT_THROW(loss_ord(a, InverseDepthMap(3, 4)), DimensionMismatch);
}

TEST(LossOrd, MatchesLoopOracleAndIsSymmetric) {
  std::mt19937 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto a = kbtest::random_inverse(8, 8, rng), b = kbtest::random_inverse(8, 8, rng);
    EXPECT_EQ(loss_ord(a, b), oracle::loss_ord(a, b));
    EXPECT_EQ(loss_ord(a, b), loss_ord(b, a));
  }
}

TEST(LossGrad, MatchesLoopOracle) {
  std::mt19937 rng(9);
  for (int t = 0; t < 20; ++t) {
    const int w = 5 + t, h = 24 - t;
    const auto a = kbtest::random_inverse(w, h, rng), b = kbtest::random_inverse(w, h, rng);
    EXPECT_NEAR(loss_grad(a, b), oracle::loss_grad(a, b), 1e-9);
    EXPECT_NEAR(loss_grad(a, b), serial::loss_grad(a, b), 1e-12 * loss_grad(a, b));
  }
}

TEST(LossGrad, ZeroForIdenticalAndScaledMaps) {
  std::mt19937 rng(10);
  const auto a = kbtest::random_inverse(20, 20, rng);
  EXPECT_EQ(loss_grad(a, a), 0.0);
  for (double c : {0.1, 1.0, 7.0}) {
    InverseDepthMap b = a;
    for (double& v : b.values().storage()) v *= c;
    EXPECT_NEAR(loss_grad(a, b), 0.0, 1e-12) << c;
  }
}

TEST(LossDepth, WeightsOrdinalByTenThousandth) {
  std::mt19937 rng(11);
  const auto a = kbtest::random_inverse(16, 16, rng), b = kbtest::random_inverse(16, 16, rng);
  const double ord = loss_ord(a, b), grad = loss_grad(a, b);
  EXPECT_EQ(loss_depth(a, b), 0.0001 * ord + grad);
  EXPECT_NEAR(loss_depth(a, b) - grad, 0.0001 * ord, 1e-15 * loss_depth(a, b) + 1e-18);
}

TEST(LossDepth, ProportionalMapsLeaveOnlyTheOrdinalTerm) {
  // xi = 2 * gt keeps every g_h equal, so only the ordinal term survives.
  InverseDepthMap gt(40, 25, 1.0), xi(40, 25, 2.0);
  EXPECT_EQ(loss_ord(xi, gt), 1000.0);
  EXPECT_EQ(loss_grad(xi, gt), 0.0);
  EXPECT_DOUBLE_EQ(loss_depth(xi, gt), 0.1);

  InverseDepthMap r = ramp(12, 12, 1.0), r2 = r;
  for (double& v : r2.values().storage()) v *= 2.0;
  EXPECT_NEAR(loss_depth(r2, r), 0.0001 * loss_ord(r2, r), 1e-12);
}

TEST(GradLossDepth, TiesGiveZeroGradient) {
  const InverseDepthMap a = ramp(10, 9, 1.0);
  const Raster<double> g = grad_loss_depth(a, a);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(GradLossDepth, MatchesCentralDifferences) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(1000 + seed);
    const auto a = kbtest::random_inverse(12, 12, rng), b = kbtest::random_inverse(12, 12, rng);
    EXPECT_LT(gradient_check(a, b, 1e-5), 1e-4) << "seed " << seed;
  }
}

TEST(GradLossDepth, FirstOrderExpansionOfOnePixel) {
  std::mt19937 rng(77);
  const auto a = kbtest::random_inverse(12, 12, rng), b = kbtest::random_inverse(12, 12, rng);
  const Raster<double> g = grad_loss_depth(a, b);
  const double base = loss_depth(a, b);
  for (double delta : {1e-4, 1e-5, 1e-6}) {
    InverseDepthMap p = a;
    p(5, 6) += delta;
    const double change = loss_depth(p, b) - base;
    EXPECT_NEAR(change, g(5, 6) * delta, 50 * delta * delta + 1e-12) << delta;
  }
}

TEST(GradLossDepth, SerialReferenceAgrees) {
  std::mt19937 rng(5);
  const auto a = kbtest::random_inverse(33, 21, rng), b = kbtest::random_inverse(33, 21, rng);
  const Raster<double> p = grad_loss_depth(a, b), s = serial::grad_loss_depth(a, b);
  for (std::size_t i = 0; i < p.storage().size(); ++i) EXPECT_NEAR(p.storage()[i], s.storage()[i], 1e-12);
}

TEST(LossColor, BlackVersusWhite) {
  ImageBuffer black(2, 2), white(2, 2);
  for (double& v : white.raster().storage()) v = 1.0;
  EXPECT_EQ(loss_color(black, white), 12.0);
  EXPECT_EQ(loss_color(white, white), 0.0);
}

TEST(LossColor, MatchesLoopOracle) {
  std::mt19937 rng(12);
  for (int t = 0; t < 10; ++t) {
    const auto a = kbtest::random_image(9, 7, rng), b = kbtest::random_image(9, 7, rng);
    EXPECT_EQ(loss_color(a, b), oracle::loss_color(a, b));
    EXPECT_EQ(loss_color(a, b), loss_color(b, a));
  }
}

TEST(LossPercep, IdentityFeaturesGiveSquaredL2) {
  std::mt19937 rng(13);
  const auto a = kbtest::random_image(6, 5, rng), b = kbtest::random_image(6, 5, rng);
  double ref = 0.0;
  for (std::size_t i = 0; i < a.raster().storage().size(); ++i) {
    const double d = a.raster().storage()[i] - b.raster().storage()[i];
    ref += d * d;
  }
  EXPECT_NEAR(loss_percep(a, b, IdentityFeatureExtractor{}), ref, 1e-12);
  EXPECT_EQ(loss_percep(a, a, PyramidFeatureExtractor{}), 0.0);
}

TEST(LossPercep, PyramidSeesASinglePixelChange) {
  std::mt19937 rng(14);
  const auto a = kbtest::random_image(16, 16, rng);
  ImageBuffer b = a;
  b(7, 9, 1) = a(7, 9, 1) > 0.5 ? 0.0 : 1.0;
  EXPECT_GT(loss_percep(a, b, PyramidFeatureExtractor{}), 0.0);
  EXPECT_EQ(PyramidFeatureExtractor{}.extract(a).size(), PyramidFeatureExtractor{}.extract(b).size());
}

namespace {

struct ZeroFeatures final : FeatureExtractor {
  std::vector<double> extract(const ImageBuffer&) const override { return {0.0, 0.0}; }
};

struct ShapeShifter final : FeatureExtractor {
  std::vector<double> extract(const ImageBuffer& img) const override {
    return std::vector<double>(img(0, 0, 0) > 0.5 ? 3 : 4, 0.0);
  }
};

}  // namespace

TEST(LossInpaint, IsTheSumOfItsTerms) {
  std::mt19937 rng(15);
  const auto a = kbtest::random_image(10, 10, rng), b = kbtest::random_image(10, 10, rng);
  const auto xa = kbtest::random_inverse(10, 10, rng), xb = kbtest::random_inverse(10, 10, rng);
  const PyramidFeatureExtractor phi;
  EXPECT_EQ(loss_inpaint(a, b, xa, xb, phi),
            loss_color(a, b) + loss_percep(a, b, phi) + 0.0001 * loss_ord(xa, xb) + loss_grad(xa, xb));
  EXPECT_EQ(loss_inpaint(a, b, xa, xb, ZeroFeatures{}),
            loss_color(a, b) + 0.0 + 0.0001 * loss_ord(xa, xb) + loss_grad(xa, xb));
  EXPECT_EQ(loss_inpaint(a, a, xa, xa, phi), 0.0);
}

TEST(LossInpaint, MismatchedFeatureShapesAreRejected) {
  ImageBuffer a(2, 2), b(2, 2);
  a(0, 0, 0) = 1.0;
  EXPECT_THROW(loss_percep(a, b, ShapeShifter{}), DimensionMismatch);
}
