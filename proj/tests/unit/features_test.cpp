#include <gtest/gtest.h>

#include <cmath>

#include "promkit/erqa.hpp"
#include "promkit/error.hpp"
#include "promkit/features.hpp"
#include "promkit/fmap.hpp"
#include "promkit/resample.hpp"
#include "promkit/ssim.hpp"
#include "promkit/ssm_jup.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace promkit {
namespace {

using testing::Rng;

// Piecewise-constant rectangles on a flat background: crisp edges for ERQA.
Image shapes_image(std::size_t w, std::size_t h, Rng& rng, int shapes = 4) {
  Image img(w, h, 1, static_cast<float>(testing::uniform(rng, 0.0, 0.3)));
  for (int s = 0; s < shapes; ++s) {
    const std::size_t x0 = testing::pick(rng, 0, w - 2);
    const std::size_t y0 = testing::pick(rng, 0, h - 2);
    const std::size_t x1 = testing::pick(rng, x0 + 1, w);
    const std::size_t y1 = testing::pick(rng, y0 + 1, h);
    const auto v = static_cast<float>(testing::uniform(rng, 0.4, 1.0));
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = x0; x < x1; ++x) img.at(x, y) = v;
    }
  }
  return img;
}

// Same picture shifted by (dx, dy) with edge replication and mild noise.
Image perturbed(const Image& src, int dx, int dy, double noise, Rng& rng) {
  Image out(src.width(), src.height(), 1);
  for (std::size_t y = 0; y < src.height(); ++y) {
    for (std::size_t x = 0; x < src.width(); ++x) {
      const long sx = std::clamp<long>(static_cast<long>(x) - dx, 0, static_cast<long>(src.width()) - 1);
      const long sy = std::clamp<long>(static_cast<long>(y) - dy, 0, static_cast<long>(src.height()) - 1);
      const double v = src.at(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy)) +
                       testing::uniform(rng, -noise, noise);
      out.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

// ---- bicubic -----------------------------------------------------------------------

TEST(Bicubic, KernelValues) {
  EXPECT_EQ(cubic_weight(0.0), 1.0);
  EXPECT_EQ(cubic_weight(1.0), 0.0);
  EXPECT_EQ(cubic_weight(2.0), 0.0);
  EXPECT_DOUBLE_EQ(cubic_weight(0.5), 0.5625);
  EXPECT_DOUBLE_EQ(cubic_weight(-1.5), -0.0625);
  for (double t : {0.0, 0.125, 0.25, 0.375, 0.5, 0.9}) {
    EXPECT_NEAR(cubic_weight(1 + t) + cubic_weight(t) + cubic_weight(1 - t) + cubic_weight(2 - t), 1.0, 1e-15);
  }
}

TEST(Bicubic, MatchesDirectEvaluation) {
  Rng rng(21);
  for (std::size_t scale : {1u, 2u, 3u, 4u}) {
    const Image lr = testing::random_image(5, 4, 3, rng);
    const Image up = upscale_bicubic(lr, scale);
    ASSERT_EQ(up.width(), 5 * scale);
    ASSERT_EQ(up.height(), 4 * scale);
    for (std::size_t y = 0; y < up.height(); ++y) {
      for (std::size_t x = 0; x < up.width(); ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          ASSERT_NEAR(up.at(x, y, c), oracle::bicubic_at(lr, scale, x, y, c), 1e-6);
        }
      }
    }
  }
}

TEST(Bicubic, ScaleOneIsIdentityAndConstantsStay) {
  Rng rng(2);
  const Image lr = testing::random_image(6, 6, 1, rng);
  const Image same = upscale_bicubic(lr, 1);
  for (std::size_t i = 0; i < lr.data().size(); ++i) EXPECT_FLOAT_EQ(same.data()[i], lr.data()[i]);
  const Image flat = upscale_bicubic(Image(3, 3, 3, 0.5f), 4);
  for (float v : flat.data()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(Bicubic, OutputStaysInUnitRange) {
  // A hard 0/1 step overshoots with Catmull-Rom; the result is clamped.
  Image step(4, 1, 1, std::vector<float>{0, 0, 1, 1});
  for (const auto held = upscale_bicubic(step, 4); float v : held.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

// ---- SSIM -----------------------------------------------------------------------------

TEST(Ssim, IdenticalImagesGiveOne) {
  Rng rng(1);
  const Image x = testing::random_image(20, 13, 3, rng);
  for (const auto held = ssim_map(x, x); float v : held.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Ssim, EqualConstantsGiveOne) {
  const Image a(8, 8, 1, 0.5f);
  for (const auto held = ssim_map(a, a); float v : held.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Ssim, MatchesBruteForceFormula) {
  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    const Image a = testing::random_image(16, 16, trial == 2 ? 3 : 1, rng);
    const Image b = testing::random_image(16, 16, trial == 2 ? 3 : 1, rng);
    const Heatmap m = ssim_map(a, b);
    for (std::size_t y = 0; y < 16; ++y) {
      for (std::size_t x = 0; x < 16; ++x) {
        ASSERT_NEAR(m.at(x, y), oracle::ssim_at(a, b, x, y), 1e-6) << x << "," << y;
      }
    }
  }
}

TEST(Ssim, RangeAndDissimilarity) {
  Rng rng(8);
  const Image a = testing::random_image(12, 12, 1, rng);
  Image inv = a;
  for (float& v : inv.data()) v = 1.0f - v;
  const Heatmap m = ssim_map(a, inv);
  const Heatmap d = ssim_dissimilarity(m);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_GE(m[i], -1.0f);
    EXPECT_LE(m[i], 1.0f);
    EXPECT_FLOAT_EQ(d[i], (1.0f - m[i]) / 2.0f);
  }
}

TEST(Ssim, ContractErrors) {
  EXPECT_THROW(ssim_map(Image(4, 4, 1), Image(4, 5, 1)), ContractError);
  EXPECT_THROW(ssim_map(Image(4, 4, 1), Image(4, 4, 3)), ContractError);
  EXPECT_THROW(ssim_map(Image(4, 4, 1), Image(4, 4, 1), 4), ContractError);
}

// ---- ERQA -----------------------------------------------------------------------------

TEST(Erqa, OtsuSplitsBimodalData) {
  std::vector<double> v(100, 0.1);
  v.insert(v.end(), 50, 0.9);
  double maxv = 0.0;
  const int bin = otsu_bin(v, &maxv);
  EXPECT_EQ(maxv, 0.9);
  // Everything at 0.1 lies at or below the threshold bin, 0.9 above it.
  EXPECT_GE(bin, static_cast<int>(0.1 / 0.9 * 256));
  EXPECT_LT(bin, 255);
  EXPECT_EQ(otsu_bin(std::vector<double>(10, 0.0)), 255);
}

TEST(Erqa, ConstantImageHasNoEdges) {
  EXPECT_TRUE(detect_edges(Image(16, 16, 1, 0.3f)).empty());
}

TEST(Erqa, StepEdgeIsDetectedAlongTheBoundary) {
  Image img(16, 16, 1);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 8; x < 16; ++x) img.at(x, y) = 1.0f;
  }
  const BinaryMask e = detect_edges(img);
  for (std::size_t y = 0; y < 16; ++y) {
    EXPECT_TRUE(e.at(7, y));
    EXPECT_TRUE(e.at(8, y));
    EXPECT_FALSE(e.at(3, y));
    EXPECT_FALSE(e.at(12, y));
  }
}

TEST(Erqa, GreedyMatchingRules) {
  const std::vector<Point> ref = {{0, 0}, {3, 0}};
  EXPECT_EQ(greedy_edge_matches(std::vector<Point>{{1, 0}, {2, 0}}, ref, 2.0), 2u);
  // Each reference pixel is used at most once.
  EXPECT_EQ(greedy_edge_matches(std::vector<Point>{{0, 0}, {0, 0}, {0, 0}}, ref, 2.0), 1u);
  // The radius is Euclidean and inclusive: (2,0) matches, (2,1) does not.
  EXPECT_EQ(greedy_edge_matches(std::vector<Point>{{5, 0}}, ref, 2.0), 1u);
  EXPECT_EQ(greedy_edge_matches(std::vector<Point>{{5, 1}}, std::vector<Point>{{3, 0}, {3, -1}}, 2.0), 0u);
  EXPECT_EQ(greedy_edge_matches({}, ref, 2.0), 0u);
}

TEST(Erqa, IdenticalImagesScoreOneEverywhere) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Image img = shapes_image(40, 32, rng);
    for (const auto held = erqa_map(img, img, BlockGrid::square(8, 8)); float v : held.data()) ASSERT_EQ(v, 1.0f);
  }
}

TEST(Erqa, ConstantTestAgainstEdgesScoresZero) {
  Image ref(24, 8, 1);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 2; x < 5; ++x) ref.at(x, y) = 1.0f;
  }
  const Heatmap m = erqa_map(Image(24, 8, 1, 0.5f), ref, BlockGrid::square(8, 8));
  EXPECT_EQ(m.at(0, 0), 0.0f);   // block holding the edge
  EXPECT_EQ(m.at(20, 0), 1.0f);  // no edges in either image
}

TEST(Erqa, BlockScoreIsMatchF1) {
  Rng rng(12);
  const BlockGrid grid = BlockGrid::square(8, 8);
  for (int trial = 0; trial < 20; ++trial) {
    const Image ref = shapes_image(24, 24, rng);
    const Image test = perturbed(ref, static_cast<int>(testing::pick(rng, 0, 2)), 1, 0.02, rng);
    const BinaryMask te = detect_edges(test);
    const BinaryMask re = detect_edges(ref);
    const Heatmap m = erqa_map(test, ref, grid);
    for (const Block& b : grid.blocks(24, 24)) {
      std::vector<Point> tp, rp;
      for (std::size_t y = b.y; y < b.y + 8; ++y) {
        for (std::size_t x = b.x; x < b.x + 8; ++x) {
          if (te.at(x, y)) tp.push_back({static_cast<int>(x), static_cast<int>(y)});
          if (re.at(x, y)) rp.push_back({static_cast<int>(x), static_cast<int>(y)});
        }
      }
      const double expected =
          tp.empty() && rp.empty()
              ? 1.0
              : 2.0 * static_cast<double>(greedy_edge_matches(tp, rp, 2.0)) / static_cast<double>(tp.size() + rp.size());
      EXPECT_FLOAT_EQ(m.at(b.x, b.y), static_cast<float>(expected));
    }
  }
}

TEST(Erqa, GreedyStaysCloseToOptimalMatching) {
  Rng rng(99);
  const BlockGrid grid = BlockGrid::square(8, 8);
  double greedy_total = 0.0;
  double optimal_total = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Image ref = shapes_image(24, 24, rng, 5);
    const Image test = perturbed(ref, static_cast<int>(testing::pick(rng, 0, 2)),
                                 static_cast<int>(testing::pick(rng, 0, 2)), 0.05, rng);
    const BinaryMask te = detect_edges(test);
    const BinaryMask re = detect_edges(ref);
    double greedy_sum = 0.0;
    double optimal_sum = 0.0;
    for (const Block& b : grid.blocks(24, 24)) {
      std::vector<Point> tp, rp;
      std::vector<std::array<int, 2>> to, ro;
      for (std::size_t y = b.y; y < b.y + 8; ++y) {
        for (std::size_t x = b.x; x < b.x + 8; ++x) {
          const int xi = static_cast<int>(x), yi = static_cast<int>(y);
          if (te.at(x, y)) {
            tp.push_back({xi, yi});
            to.push_back({xi, yi});
          }
          if (re.at(x, y)) {
            rp.push_back({xi, yi});
            ro.push_back({xi, yi});
          }
        }
      }
      if (tp.empty() && rp.empty()) {
        greedy_sum += 1.0;
        optimal_sum += 1.0;
        continue;
      }
      const double n = static_cast<double>(tp.size() + rp.size());
      const std::size_t g = greedy_edge_matches(tp, rp, 2.0);
      const std::size_t o = oracle::optimal_matches(to, ro, 2.0);
      ASSERT_LE(g, o);
      greedy_sum += 2.0 * static_cast<double>(g) / n;
      optimal_sum += 2.0 * static_cast<double>(o) / n;
    }
    greedy_total += greedy_sum / 9.0;
    optimal_total += optimal_sum / 9.0;
  }
  // Corpus mean F1; single images can trail further.
  EXPECT_LE((optimal_total - greedy_total) / 50.0, 0.1);
}

TEST(Erqa, DimensionMismatch) {
  EXPECT_THROW(erqa_map(Image(8, 8, 1), Image(8, 16, 1), BlockGrid::square(8, 8)), ContractError);
}

// ---- ssm_jup ------------------------------------------------------------------------------

TEST(SsmJup, ZeroForExactBicubic) {
  Rng rng(5);
  const Image lr = testing::random_image(6, 5, 3, rng);
  for (const auto held = ssm_jup_map(upscale_bicubic(lr, 4), lr); float v : held.data()) EXPECT_EQ(v, 0.0f);
}

TEST(SsmJup, ImpulseResidualMatchesDirectFormula) {
  const Image lr(2, 2, 1, 0.5f);
  Image sr = upscale_bicubic(lr, 4);
  ASSERT_EQ(sr.width(), 8u);
  sr.at(3, 5) += 0.25f;
  const Heatmap m = ssm_jup_map(sr, lr);
  const Image ref = upscale_bicubic(lr, 4);
  const auto expected = oracle::ssm_jup(sr, [&](std::size_t x, std::size_t y, std::size_t c) {
    return static_cast<double>(ref.at(x, y, c));
  });
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(m[i], expected[i], 1e-6) << i;
  // Only the impulse pixel has a nonzero residual.
  EXPECT_GT(m.at(3, 5), 0.0f);
  EXPECT_EQ(m.at(0, 0), 0.0f);
}

TEST(SsmJup, RandomCaseMatchesDirectFormulaWithIndependentBicubic) {
  Rng rng(31);
  const Image lr = testing::random_image(4, 3, 3, rng);
  const Image sr = testing::random_image(16, 12, 3, rng);
  const Heatmap m = ssm_jup_map(sr, lr);
  const auto expected = oracle::ssm_jup(sr, [&](std::size_t x, std::size_t y, std::size_t c) {
    return oracle::bicubic_at(lr, 4, x, y, c);
  });
  for (std::size_t i = 0; i < m.size(); ++i) ASSERT_NEAR(m[i], expected[i], 1e-5 * std::max(1.0, expected[i])) << i;
}

TEST(SsmJup, DoublingResidualDoublesMap) {
  Rng rng(17);
  const Image lr(3, 3, 3, 0.5f);
  const Image base = upscale_bicubic(lr, 4);
  Image once = base;
  Image twice = base;
  for (std::size_t i = 0; i < base.data().size(); ++i) {
    // Dyadic residuals keep both images exact in float.
    const float r = static_cast<float>(static_cast<int>(testing::pick(rng, 0, 16)) - 8) / 64.0f;
    once.data()[i] = base.data()[i] + r;
    twice.data()[i] = base.data()[i] + 2.0f * r;
  }
  const Heatmap a = ssm_jup_map(once, lr);
  const Heatmap b = ssm_jup_map(twice, lr);
  for (std::size_t i = 0; i < a.size(); ++i) {
    // The epsilon in the denominator makes the ratio only approximately 2.
    EXPECT_NEAR(b[i], 2.0 * a[i], 1e-5 * std::max(1.0f, b[i]));
  }
}

TEST(SsmJup, ContractErrors) {
  EXPECT_THROW(ssm_jup_map(Image(8, 8, 1), Image(3, 2, 1)), ContractError);
  EXPECT_THROW(ssm_jup_map(Image(8, 8, 3), Image(2, 2, 1)), ContractError);
  EXPECT_THROW(ssm_jup_map(Image(8, 8, 1), Image(2, 2, 1), 6), ContractError);
  EXPECT_NO_THROW(ssm_jup_map(Image(6, 6, 1), Image(2, 2, 1), 7, 3));
}

// ---- bd_jup and the stack -----------------------------------------------------------------

TEST(BdJup, FixedPointsAndDirectEvaluation) {
  for (const auto held = bd_jup_combine(Heatmap(3, 3, 0.0f), Heatmap(3, 3, 1.0f)); float v : held.data()) EXPECT_EQ(v, 0.0f);
  for (const auto held = bd_jup_combine(Heatmap(3, 3, 1.0f), Heatmap(3, 3, 1.0f)); float v : held.data()) EXPECT_FLOAT_EQ(v, 0.6f);
  for (const auto held = bd_jup_combine(Heatmap(3, 3, 0.5f), Heatmap(3, 3, 0.5f)); float v : held.data()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(BdJup, IsConvexCombination) {
  Rng rng(6);
  const Heatmap lp = testing::random_heatmap(10, 10, rng);
  const Heatmap er = testing::random_heatmap(10, 10, rng);
  const Heatmap out = bd_jup_combine(lp, er);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float d = 1.0f - er[i];
    EXPECT_GE(out[i], std::min(lp[i], d) - 1e-6f);
    EXPECT_LE(out[i], std::max(lp[i], d) + 1e-6f);
  }
}

TEST(BdJup, Errors) {
  EXPECT_THROW(bd_jup_combine(Heatmap(2, 2), Heatmap(2, 3)), ContractError);
  EXPECT_THROW(bd_jup_combine(Heatmap(2, 2, 1.5f), Heatmap(2, 2)), DataError);
}

TEST(FeatureConfig, EnforcesThreeToTwoWeights) {
  FeatureConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_NEAR(cfg.lpips_weight / cfg.erqa_weight, 1.5, 1e-12);
  EXPECT_DOUBLE_EQ(cfg.lpips_weight + cfg.erqa_weight, 1.0);
  cfg.lpips_weight = 0.5;
  cfg.erqa_weight = 0.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.lpips_weight = 1.2;
  cfg.erqa_weight = 0.8;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(FeatureStack, CleanImageIsAllZero) {
  Rng rng(9);
  const Image lr = testing::random_image(8, 8, 3, rng);
  const Image sr = upscale_bicubic(lr, 4);
  const FeatureStack s = build_feature_stack(sr, sr, lr, Heatmap(32, 32), Heatmap(32, 32));
  for (const Heatmap* m : {&s.dists, &s.ssm_jup, &s.bd_jup}) {
    for (float v : m->data()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(FeatureStack, MissingDistsFileNamesIt) {
  testing::TempDir dir;
  write_fmap(Heatmap(8, 8), dir / "lpips.fmap");
  try {
    build_feature_stack(Image(8, 8, 1), Image(8, 8, 1), Image(2, 2, 1), dir / "dists.fmap", dir / "lpips.fmap");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("dists"), std::string::npos);
  }
}

TEST(FeatureStack, MismatchNamesTheFeature) {
  try {
    build_feature_stack(Image(8, 8, 1), Image(8, 8, 1), Image(2, 2, 1), Heatmap(8, 8), Heatmap(8, 4));
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("lpips"), std::string::npos);
  }
}

TEST(FeatureStack, DimensionsFollowSrAndAreDeterministic) {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t w = 4 * testing::pick(rng, 2, 6);
    const std::size_t h = 4 * testing::pick(rng, 2, 6);
    const Image lr = testing::random_image(w / 4, h / 4, 3, rng);
    const Image sr = testing::random_image(w, h, 3, rng);
    const Image ref = testing::random_image(w, h, 3, rng);
    const Heatmap d = testing::random_heatmap(w, h, rng);
    const Heatmap l = testing::random_heatmap(w, h, rng);
    const FeatureStack s = build_feature_stack(sr, ref, lr, d, l);
    EXPECT_EQ(s.width(), w);
    EXPECT_EQ(s.height(), h);
    EXPECT_EQ(s.ssm_jup.width(), w);
    EXPECT_EQ(s.bd_jup.height(), h);
    const FeatureStack again = build_feature_stack(sr, ref, lr, d, l);
    EXPECT_EQ(again.ssm_jup, s.ssm_jup);
    EXPECT_EQ(again.bd_jup, s.bd_jup);
  }
}

TEST(FeatureStack, SaveLoadRoundTrip) {
  testing::TempDir dir;
  Rng rng(13);
  const FeatureStack s = testing::random_stack(6, 5, rng);
  save_feature_stack(s, dir.path());
  const FeatureStack back = load_feature_stack(dir.path());
  EXPECT_EQ(back.dists, s.dists);
  EXPECT_EQ(back.ssm_jup, s.ssm_jup);
  EXPECT_EQ(back.bd_jup, s.bd_jup);
}

TEST(FeatureStack, ValidateChecksRanges) {
  FeatureStack s{Heatmap(2, 2), Heatmap(2, 2, -0.1f), Heatmap(2, 2)};
  EXPECT_THROW(s.validate(), DataError);
  s.ssm_jup = Heatmap(2, 2, 4.0f);
  EXPECT_NO_THROW(s.validate());
  s.bd_jup = Heatmap(3, 2);
  EXPECT_THROW(s.validate(), ContractError);
}

}  // namespace
}  // namespace promkit
