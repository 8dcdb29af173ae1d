#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "promkit/image.hpp"
#include "promkit/morphology.hpp"

namespace promkit {

inline constexpr std::size_t kDefaultGtDilation = 21;

// Detections before (B) and after (A) fine-tuning, with the GT mask.
struct FinetunePair {
  BinaryMask before;
  BinaryMask after;
  BinaryMask gt;

  void validate() const;
};

// Replaces the (optionally dilated) masked region of `sr` with `fallback`.
Image artificial_gt(const Image& sr, const Image& fallback, const BinaryMask& mask,
                    const std::optional<StructuringElement>& dilation = std::nullopt);

// IoU with an empty union counts as 0.
double iou_or_zero(const BinaryMask& a, const BinaryMask& b);

// (IoU(B, GT) - IoU(A, GT)) * 100.
double delta_iou(const FinetunePair& pair);

struct ImageRates {
  double add_img = 0.0;  // % of pairs with |A u B| > |B|
  double rem_img = 0.0;  // % of pairs with |A n B| = 0 and |B| != 0
};

ImageRates add_rem_img(std::span<const FinetunePair> pairs);

struct PixelRates {
  std::optional<double> add_pix;  // |A n not B| / |not B| * 100
  std::optional<double> rem_pix;  // |not A n B| / |B| * 100
};

PixelRates add_rem_pix(const FinetunePair& pair);

struct FinetuneScores {
  std::size_t pairs = 0;
  std::optional<double> delta_iou;  // mean over pairs with both unions non-empty
  std::size_t delta_iou_skipped = 0;
  double add_img = 0.0;
  double rem_img = 0.0;
  std::optional<double> add_pix;  // mean over pairs where defined
  std::optional<double> rem_pix;
};

FinetuneScores score_finetune(std::span<const FinetunePair> pairs);

}  // namespace promkit
