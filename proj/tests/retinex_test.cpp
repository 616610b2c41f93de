// Copyright 2026 The IID Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "iid/eval.hpp"
#include "iid/retinex.hpp"
#include "iid/synth.hpp"
#include "support.hpp"

namespace iid {
namespace {

RetinexParams small_thresholds() {
  RetinexParams p;
  p.t_brightness = 0.01;
  p.t_chroma = 0.01;
  return p;
}

TEST(RetinexClassify, ConstantImageHasNoEdges) {
  const DirectionalMask m = retinex_classify(LinearImage(10, 10, Rgb{0.3, 0.4, 0.5}), RetinexParams{});
  EXPECT_EQ(testing::count_ones(m.x) + testing::count_ones(m.y), 0u);
}

TEST(RetinexClassify, ShadingRampOnConstantColorHasNoEdges) {
  const LinearImage img = testing::shade(LinearImage(32, 32, Rgb{0.6, 0.3, 0.2}), testing::ramp_field(32, 32, 0.05, 1.0));
  RetinexParams p;
  p.t_brightness = 0.0;
  p.t_chroma = 1e-4;  // above the chromaticity guard's eps-level residue
  const DirectionalMask m = retinex_classify(img, p);
  EXPECT_EQ(testing::count_ones(m.x) + testing::count_ones(m.y), 0u);
}

TEST(RetinexClassify, StepEdgeWithBrightnessAndColorChangeIsMarked) {
  const LinearImage img = testing::split_image(12, 6, {0.4, 0.2, 0.1}, {0.05, 0.1, 0.2});
  const DirectionalMask m = retinex_classify(img, small_thresholds());
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 12; ++x) {
      EXPECT_EQ(m.x.at(x, y), x == 5 ? 1 : 0) << x;
      EXPECT_EQ(m.y.at(x, y), 0);
    }
}

TEST(RetinexClassify, EqualGeometricMeanEdgeIsChromaticOnly) {
  // (0.4,0.2,0.1) and (0.1,0.2,0.4) share a geometric mean, so the log-brightness step is
  // exactly zero: the Retinex cue cannot see this edge while the cross ratios can.
  const LinearImage img = testing::split_image(12, 6, {0.4, 0.2, 0.1}, {0.1, 0.2, 0.4});
  const GradientField g = forward_gradients(img);
  EXPECT_EQ(g.brightness_x.at(5, 2), 0.0);
  EXPECT_GT(g.chroma_x.at(5, 2), 0.3);
  EXPECT_EQ(testing::count_ones(retinex_classify(g, small_thresholds()).x), 0u);
  RetinexParams p = small_thresholds();
  p.sigma = 0.01;
  const DirectionalMask c = ccr_mask(img, p);
  for (int y = 0; y < 6; ++y) EXPECT_EQ(c.x.at(5, y), 1);
}

TEST(ForwardGradients, LastColumnAndRowAreZero) {
  const GradientField g = forward_gradients(testing::random_image(7, 5, 2));
  for (int y = 0; y < 5; ++y) EXPECT_EQ(g.dx.at(6, y), Rgb{});
  for (int x = 0; x < 7; ++x) EXPECT_EQ(g.dy.at(x, 4), Rgb{});
  for (double v : g.brightness_x.pixels()) EXPECT_GE(v, 0.0);
  for (double v : g.chroma_y.pixels()) EXPECT_GE(v, 0.0);
}

TEST(CcrMask, ConstantImageIsEmpty) {
  const DirectionalMask m = ccr_mask(LinearImage(9, 9, Rgb{0.1, 0.5, 0.2}), RetinexParams{});
  EXPECT_EQ(testing::count_ones(m.x) + testing::count_ones(m.y), 0u);
}

TEST(CcrMask, SmoothShadingDoesNotChangeMask) {
  const Mondrian m = gen_mondrian(48, 48, 4, 2);
  const LinearImage shaded = testing::shade(m.image, testing::ramp_field(48, 48, 0.5, 1.0));
  // Without pre-blur the masks are exactly invariant; blur mixes shading across seams.
  RetinexParams p;
  p.sigma = 0.01;
  const DirectionalMask a = ccr_mask(m.image, p), b = ccr_mask(shaded, p);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
}

TEST(CcrMask, SeamIsMarked) {
  const DirectionalMask m = ccr_mask(testing::split_image(16, 8, {0.4, 0.2, 0.1}, {0.1, 0.2, 0.4}), RetinexParams{});
  for (int y = 0; y < 8; ++y) EXPECT_EQ(m.x.at(7, y), 1);
}

TEST(FuseOr, TruthTable) {
  BinaryMask a(4, 1, 0), b(4, 1, 0);
  a[1] = 1;
  a[3] = 1;
  b[2] = 1;
  b[3] = 1;
  const BinaryMask o = fuse_or(a, b);
  EXPECT_EQ(o[0], 0);
  EXPECT_EQ(o[1], 1);
  EXPECT_EQ(o[2], 1);
  EXPECT_EQ(o[3], 1);
}

TEST(FuseOr, IdentityIdempotenceAndSuperset) {
  std::mt19937_64 rng(4);
  BinaryMask a(20, 20, 0), b(20, 20, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng() & 1;
    b[i] = rng() & 1;
  }
  EXPECT_EQ(fuse_or(BinaryMask(20, 20, 0), b), b);
  EXPECT_EQ(fuse_or(a, a), a);
  const BinaryMask o = fuse_or(a, b);
  for (std::size_t i = 0; i < o.size(); ++i) {
    EXPECT_GE(o[i], a[i]);
    EXPECT_GE(o[i], b[i]);
  }
}

TEST(FuseOr, DimensionMismatchIsInvalidInput) {
  EXPECT_THROW(fuse_or(BinaryMask(3, 2, 0), BinaryMask(2, 3, 0)), InvalidInput);
}

DirectionalMask full_keep(int w, int h) { return {BinaryMask(w, h, 1), BinaryMask(w, h, 1)}; }

TEST(PoissonReconstruct, FullKeepRoundTrip) {
  const LinearImage img = testing::random_image(64, 64, 17, 0.01, 1.0);
  const GradientField g = forward_gradients(img);
  const PoissonResult r = poisson_reconstruct(g, full_keep(64, 64));
  EXPECT_FALSE(r.degraded);
  const RgbField lg = log_image(img);
  for (int c = 0; c < 3; ++c) {
    const double offset = r.log_image[0][c] - lg[0][c];
    double worst = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) worst = std::max(worst, std::abs(r.log_image[i][c] - lg[i][c] - offset));
    EXPECT_LT(worst, 1e-5);
  }
}

TEST(PoissonReconstruct, EmptyKeepGivesGaugeConstant) {
  const LinearImage img = testing::random_image(20, 15, 3);
  const GradientField g = forward_gradients(img);
  const PoissonResult r = poisson_reconstruct(g, {BinaryMask(20, 15, 0), BinaryMask(20, 15, 0)});
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(r.log_image[i][c], g.log_mean[c], 1e-12);
}

TEST(PoissonReconstruct, SeamOnlyKeepGivesTwoLevels) {
  const int w = 24, h = 16;
  const Rgb a{0.4, 0.2, 0.1}, b{0.1, 0.2, 0.4};
  ScalarField shading(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) shading.at(x, y) = 0.5 + 0.5 * x / (w - 1.0);
  const LinearImage img = testing::shade(testing::split_image(w, h, a, b), shading);
  const GradientField g = forward_gradients(img);
  DirectionalMask keep{BinaryMask(w, h, 0), BinaryMask(w, h, 0)};
  for (int y = 0; y < h; ++y) keep.x.at(w / 2 - 1, y) = 1;
  const PoissonResult r = poisson_reconstruct(g, keep);
  // Every kept gradient carries the same jump log(b/a) + log(s_12/s_11); the least-squares
  // solution is two flat regions separated by exactly that jump.
  const double shading_step = std::log((0.5 + 0.5 * 12 / 23.0) / (0.5 + 0.5 * 11 / 23.0));
  for (int c = 0; c < 3; ++c) {
    const double jump = std::log(b[c] / a[c]) + shading_step;
    const double left = r.log_image.at(0, 0)[c];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) EXPECT_NEAR(r.log_image.at(x, y)[c], x < w / 2 ? left : left + jump, 1e-6);
  }
}

TEST(PoissonReconstruct, MaskShapeMismatchIsRejected) {
  const GradientField g = forward_gradients(testing::random_image(5, 5, 1));
  EXPECT_THROW(poisson_reconstruct(g, full_keep(4, 5)), InvalidInput);
}

TEST(RetinexDecompose, ConstantColorWithSmoothShading) {
  const LinearImage img = testing::shade(LinearImage(48, 48, Rgb{0.5, 0.3, 0.2}), gen_shading(48, 48, ShadingKind::smooth, 1));
  const Decomposition d = retinex_decompose(img, RetinexParams{}, false);
  for (int c = 0; c < 3; ++c) {
    double lo = 1e9, hi = 0.0;
    for (const Rgb& p : d.reflectance.pixels()) {
      lo = std::min(lo, p[c]);
      hi = std::max(hi, p[c]);
    }
    EXPECT_LT((hi - lo) / hi, 0.02);
  }
}

TEST(RetinexDecompose, UnshadedMondrianIsRecovered) {
  // Without shading every nonzero log gradient is a patch seam, so thresholds below any
  // seam step keep exactly the reflectance edges.
  RetinexParams p;
  p.t_brightness = 1e-3;
  p.t_chroma = 1e-3;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Mondrian m = gen_mondrian(64, 64, 5, seed);
    const Decomposition d = retinex_decompose(m.image, p, false);
    EXPECT_LT(lmse(d.reflectance, m.image), 1e-4) << seed;
  }
}

TEST(RetinexDecompose, RatioFusionRecoversEdgeInvisibleToBrightness) {
  // The two colors share a geometric mean, so Retinex alone merges them; the shadow edge
  // inside each half changes brightness only and must stay out of the reflectance.
  const LinearImage refl = testing::split_image(64, 64, {0.4, 0.2, 0.1}, {0.1, 0.2, 0.4});
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SyntheticScene s = compose(refl, gen_shading(64, 64, ShadingKind::shadow, seed), Rgb{1, 1, 1});
    const double plain = lmse(retinex_decompose(s.image, RetinexParams{}, false).reflectance, refl);
    const double fused = lmse(retinex_decompose(s.image, RetinexParams{}, true).reflectance, refl);
    EXPECT_LE(fused, plain) << seed;
    EXPECT_GT(plain, 0.01) << seed;
  }
}

TEST(RetinexDecompose, FusedKeepIsSupersetOfBothMasks) {
  const SyntheticScene s = compose(gen_mondrian(40, 40, 4, 5).image, gen_shading(40, 40, ShadingKind::mixed, 5), gen_illuminant(5));
  const RetinexResult r = retinex_decompose_full(s.image, RetinexParams{}, true);
  const DirectionalMask a = retinex_classify(s.image, RetinexParams{}), b = ccr_mask(s.image, RetinexParams{});
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    EXPECT_EQ(r.keep.x[i], a.x[i] | b.x[i]);
    EXPECT_EQ(r.keep.y[i], a.y[i] | b.y[i]);
  }
}

TEST(RetinexDecompose, ShadingReconstructsInput) {
  const SyntheticScene s = compose(gen_mondrian(40, 40, 4, 6).image, gen_shading(40, 40, ShadingKind::mixed, 6), gen_illuminant(6));
  const Decomposition d = retinex_decompose(s.image, RetinexParams{}, true);
  for (std::size_t i = 0; i < s.image.size(); ++i)
    for (int c = 0; c < 3; ++c)
      if (s.image[i][c] > 1e-3) { EXPECT_NEAR(d.reflectance[i][c] * d.shading[i][c], s.image[i][c], 1e-6); }
}

TEST(RetinexParams, Validation) {
  RetinexParams p;
  p.t_chroma = -1.0;
  EXPECT_THROW(p.validate(), InvalidParameter);
  p = {};
  p.sigma = 0.0;
  EXPECT_THROW(retinex_decompose(LinearImage(2, 2, Rgb{1, 1, 1}), p, true), InvalidParameter);
  EXPECT_THROW(retinex_decompose(LinearImage(), RetinexParams{}, false), InvalidInput);
}

}  // namespace
}  // namespace iid
