#include <gtest/gtest.h>

#include <vector>

#include "promkit/error.hpp"
#include "promkit/finetune.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace promkit {
namespace {

using testing::Rng;

BinaryMask full(std::size_t w, std::size_t h) {
  BinaryMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, true);
  return m;
}

FinetunePair random_pair(Rng& rng, std::size_t w, std::size_t h) {
  const auto pick_mask = [&] {
    const double r = testing::uniform(rng);
    if (r < 0.1) return BinaryMask(w, h);
    if (r < 0.55) return testing::blob_mask(w, h, rng);
    return testing::noise_mask(w, h, rng, testing::uniform(rng, 0.02, 0.5));
  };
  FinetunePair p{pick_mask(), pick_mask(), pick_mask()};
  if (testing::uniform(rng) < 0.15) p.after = p.before;
  return p;
}

// ---- artificial GT --------------------------------------------------------------------------

TEST(ArtificialGt, EmptyAndFullMasks) {
  Rng rng(1);
  const Image sr = testing::random_image(10, 8, 3, rng);
  const Image fb = testing::random_image(10, 8, 3, rng);
  EXPECT_EQ(artificial_gt(sr, fb, BinaryMask(10, 8)), sr);
  EXPECT_EQ(artificial_gt(sr, fb, full(10, 8)), fb);
  EXPECT_EQ(artificial_gt(sr, fb, BinaryMask(10, 8), StructuringElement::disc(21)), sr);
}

TEST(ArtificialGt, PerPixelSelect) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Image sr = testing::random_image(16, 12, 3, rng);
    const Image fb = testing::random_image(16, 12, 3, rng);
    const BinaryMask mask = testing::noise_mask(16, 12, rng, 0.5);
    const bool dilated = trial % 2 == 1;
    const Image out = dilated ? artificial_gt(sr, fb, mask, StructuringElement::disc(5)) : artificial_gt(sr, fb, mask);
    const BinaryMask region = dilated ? oracle::dilate(mask, {true, 5}) : mask;
    for (std::size_t y = 0; y < 12; ++y) {
      for (std::size_t x = 0; x < 16; ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          ASSERT_EQ(out.at(x, y, c), region.at(x, y) ? fb.at(x, y, c) : sr.at(x, y, c));
        }
      }
    }
  }
}

TEST(ArtificialGt, Idempotent) {
  Rng rng(3);
  const Image sr = testing::random_image(12, 12, 3, rng);
  const Image fb = testing::random_image(12, 12, 3, rng);
  const BinaryMask mask = testing::blob_mask(12, 12, rng);
  const auto se = StructuringElement::disc(kDefaultGtDilation);
  const Image once = artificial_gt(sr, fb, mask, se);
  EXPECT_EQ(artificial_gt(once, fb, mask, se), once);
}

TEST(ArtificialGt, ShapeMismatch) {
  EXPECT_THROW(artificial_gt(Image(4, 4, 3), Image(4, 4, 1), BinaryMask(4, 4)), ContractError);
  EXPECT_THROW(artificial_gt(Image(4, 4, 3), Image(4, 4, 3), BinaryMask(4, 5)), ContractError);
}

// ---- delta IoU ------------------------------------------------------------------------------

TEST(DeltaIou, Examples) {
  Rng rng(4);
  const BinaryMask gt = testing::split_mask(8, 8, rng);
  EXPECT_EQ(delta_iou({gt, BinaryMask(8, 8), gt}), 100.0);
  const BinaryMask b = testing::noise_mask(8, 8, rng);
  EXPECT_EQ(delta_iou({b, b, gt}), 0.0);
  EXPECT_EQ(iou_or_zero(BinaryMask(8, 8), BinaryMask(8, 8)), 0.0);
  EXPECT_THROW(delta_iou({gt, BinaryMask(8, 7), gt}), ContractError);
}

TEST(DeltaIou, BoundedAndMatchesSetArithmetic) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const FinetunePair p = random_pair(rng, 12, 9);
    const double d = delta_iou(p);
    EXPECT_GE(d, -100.0);
    EXPECT_LE(d, 100.0);
    EXPECT_EQ(d, oracle::finetune_triple(p.before, p.after, p.gt).delta_iou);
  }
}

// ---- image-level add / remove ---------------------------------------------------------------

TEST(AddRemImg, Examples) {
  Rng rng(6);
  std::vector<FinetunePair> cleaned, unchanged;
  for (int i = 0; i < 4; ++i) {
    const BinaryMask b = testing::split_mask(6, 6, rng);
    cleaned.push_back({b, BinaryMask(6, 6), b});
    unchanged.push_back({b, b, b});
  }
  ImageRates r = add_rem_img(cleaned);
  EXPECT_EQ(r.rem_img, 100.0);
  EXPECT_EQ(r.add_img, 0.0);
  r = add_rem_img(unchanged);
  EXPECT_EQ(r.rem_img, 0.0);
  EXPECT_EQ(r.add_img, 0.0);
  EXPECT_THROW(add_rem_img({}), ContractError);
}

TEST(AddRemImg, MatchesPredicates) {
  Rng rng(7);
  std::vector<FinetunePair> pairs;
  std::size_t added = 0, removed = 0;
  for (int i = 0; i < 40; ++i) {
    pairs.push_back(random_pair(rng, 10, 10));
    const auto t = oracle::finetune_triple(pairs.back().before, pairs.back().after, pairs.back().gt);
    added += t.added;
    removed += t.removed;
  }
  const ImageRates r = add_rem_img(pairs);
  EXPECT_EQ(r.add_img, static_cast<double>(added) / 40.0 * 100.0);
  EXPECT_EQ(r.rem_img, static_cast<double>(removed) / 40.0 * 100.0);
}

// ---- pixel-level add / remove ---------------------------------------------------------------

TEST(AddRemPix, Examples) {
  Rng rng(8);
  const BinaryMask b = testing::split_mask(7, 7, rng);
  PixelRates r = add_rem_pix({b, BinaryMask(7, 7), b});
  EXPECT_EQ(*r.add_pix, 0.0);
  EXPECT_EQ(*r.rem_pix, 100.0);
  r = add_rem_pix({b, b, b});
  EXPECT_EQ(*r.add_pix, 0.0);
  EXPECT_EQ(*r.rem_pix, 0.0);
  r = add_rem_pix({BinaryMask(7, 7), b, b});
  EXPECT_FALSE(r.rem_pix);
  r = add_rem_pix({full(7, 7), b, b});
  EXPECT_FALSE(r.add_pix);
}

TEST(AddRemPix, Characterisations) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const FinetunePair p = random_pair(rng, 9, 9);
    const PixelRates r = add_rem_pix(p);
    const auto a = oracle::pixel_set(p.after), b = oracle::pixel_set(p.before);
    const bool subset = oracle::intersection_size(a, b) == a.size();
    const bool disjoint = oracle::intersection_size(a, b) == 0;
    if (r.add_pix) {
      EXPECT_EQ(*r.add_pix == 0.0, subset);
    }
    if (r.rem_pix) {
      EXPECT_EQ(*r.rem_pix == 100.0, disjoint);
    }
    const auto t = oracle::finetune_triple(p.before, p.after, p.gt);
    EXPECT_EQ(r.add_pix, t.add_pix);
    EXPECT_EQ(r.rem_pix, t.rem_pix);
  }
}

// ---- aggregate ------------------------------------------------------------------------------

TEST(ScoreFinetune, CleanupOfEveryArtifact) {
  Rng rng(10);
  std::vector<FinetunePair> pairs;
  for (int i = 0; i < 5; ++i) {
    const BinaryMask gt = testing::split_mask(8, 8, rng);
    pairs.push_back({gt, BinaryMask(8, 8), gt});
  }
  const FinetuneScores s = score_finetune(pairs);
  EXPECT_EQ(s.pairs, 5u);
  EXPECT_EQ(*s.delta_iou, 100.0);
  EXPECT_EQ(s.delta_iou_skipped, 0u);
  EXPECT_EQ(s.rem_img, 100.0);
  EXPECT_EQ(s.add_img, 0.0);
  EXPECT_EQ(*s.add_pix, 0.0);
  EXPECT_EQ(*s.rem_pix, 100.0);
}

TEST(ScoreFinetune, SkipsDegenerateIouPairs) {
  Rng rng(11);
  const BinaryMask gt = testing::split_mask(8, 8, rng);
  const std::vector<FinetunePair> pairs = {{gt, BinaryMask(8, 8), gt},
                                           {BinaryMask(8, 8), BinaryMask(8, 8), BinaryMask(8, 8)}};
  const FinetuneScores s = score_finetune(pairs);
  EXPECT_EQ(*s.delta_iou, 100.0);
  EXPECT_EQ(s.delta_iou_skipped, 1u);
  EXPECT_THROW(score_finetune({}), ContractError);
}

TEST(ScoreFinetune, MatchesBruteForce) {
  Rng rng(12);
  std::vector<FinetunePair> pairs;
  for (int i = 0; i < 50; ++i) pairs.push_back(random_pair(rng, 32, 32));
  double diou = 0.0, add = 0.0, rem = 0.0;
  std::size_t n_diou = 0, n_add = 0, n_rem = 0, skipped = 0;
  for (const FinetunePair& p : pairs) {
    const auto t = oracle::finetune_triple(p.before, p.after, p.gt);
    if (t.delta_iou_defined) {
      diou += t.delta_iou;
      ++n_diou;
    } else {
      ++skipped;
    }
    if (t.add_pix) {
      add += *t.add_pix;
      ++n_add;
    }
    if (t.rem_pix) {
      rem += *t.rem_pix;
      ++n_rem;
    }
  }
  const FinetuneScores s = score_finetune(pairs);
  EXPECT_EQ(*s.delta_iou, diou / static_cast<double>(n_diou));
  EXPECT_EQ(s.delta_iou_skipped, skipped);
  EXPECT_EQ(*s.add_pix, add / static_cast<double>(n_add));
  EXPECT_EQ(*s.rem_pix, rem / static_cast<double>(n_rem));
}

}  // namespace
}  // namespace promkit
