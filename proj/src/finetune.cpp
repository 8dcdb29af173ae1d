#include "promkit/finetune.hpp"

#include "promkit/error.hpp"

namespace promkit {
namespace {

struct SetCounts {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t both = 0;
  std::size_t either = 0;
};

SetCounts count(const BinaryMask& a, const BinaryMask& b) {
  SetCounts c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i];
    const bool y = b[i];
    c.a += x;
    c.b += y;
    c.both += x && y;
    c.either += x || y;
  }
  return c;
}

}  // namespace

void FinetunePair::validate() const {
  if (!same_dims(before, after) || !same_dims(before, gt)) {
    throw ContractError("finetune pair: masks differ in size");
  }
}

Image artificial_gt(const Image& sr, const Image& fallback, const BinaryMask& mask,
                    const std::optional<StructuringElement>& dilation) {
  if (!sr.same_shape(fallback)) throw ContractError("artificial_gt: sr and fallback differ in shape");
  if (!same_dims(sr, mask)) throw ContractError("artificial_gt: mask does not match the images");
  const BinaryMask region = dilation ? dilate(mask, *dilation) : mask;
  Image out = sr;
  const std::size_t c = sr.channels();
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (!region[i]) continue;
    for (std::size_t ch = 0; ch < c; ++ch) out.data()[i * c + ch] = fallback.data()[i * c + ch];
  }
  return out;
}

double iou_or_zero(const BinaryMask& a, const BinaryMask& b) {
  if (!same_dims(a, b)) throw ContractError("iou: masks differ in size");
  const SetCounts c = count(a, b);
  return c.either == 0 ? 0.0 : static_cast<double>(c.both) / static_cast<double>(c.either);
}

double delta_iou(const FinetunePair& pair) {
  pair.validate();
  return (iou_or_zero(pair.before, pair.gt) - iou_or_zero(pair.after, pair.gt)) * 100.0;
}

ImageRates add_rem_img(std::span<const FinetunePair> pairs) {
  if (pairs.empty()) throw ContractError("add_rem_img: no pairs");
  std::size_t added = 0;
  std::size_t removed = 0;
  for (const FinetunePair& p : pairs) {
    p.validate();
    const SetCounts c = count(p.after, p.before);
    if (c.either > c.b) ++added;
    if (c.both == 0 && c.b != 0) ++removed;
  }
  const auto n = static_cast<double>(pairs.size());
  return {static_cast<double>(added) / n * 100.0, static_cast<double>(removed) / n * 100.0};
}

PixelRates add_rem_pix(const FinetunePair& pair) {
  pair.validate();
  const SetCounts c = count(pair.after, pair.before);
  const std::size_t total = pair.before.size();
  PixelRates r;
  const std::size_t not_b = total - c.b;
  if (not_b > 0) r.add_pix = static_cast<double>(c.a - c.both) / static_cast<double>(not_b) * 100.0;
  if (c.b > 0) r.rem_pix = static_cast<double>(c.b - c.both) / static_cast<double>(c.b) * 100.0;
  return r;
}

FinetuneScores score_finetune(std::span<const FinetunePair> pairs) {
  FinetuneScores s;
  s.pairs = pairs.size();
  const ImageRates rates = add_rem_img(pairs);
  s.add_img = rates.add_img;
  s.rem_img = rates.rem_img;

  double diou = 0.0;
  std::size_t diou_n = 0;
  double add = 0.0;
  double rem = 0.0;
  std::size_t add_n = 0;
  std::size_t rem_n = 0;
  for (const FinetunePair& p : pairs) {
    const SetCounts before_gt = count(p.before, p.gt);
    const SetCounts after_gt = count(p.after, p.gt);
    if (before_gt.either > 0 && after_gt.either > 0) {
      diou += delta_iou(p);
      ++diou_n;
    } else {
      ++s.delta_iou_skipped;
    }
    const PixelRates pr = add_rem_pix(p);
    if (pr.add_pix) {
      add += *pr.add_pix;
      ++add_n;
    }
    if (pr.rem_pix) {
      rem += *pr.rem_pix;
      ++rem_n;
    }
  }
  if (diou_n) s.delta_iou = diou / static_cast<double>(diou_n);
  if (add_n) s.add_pix = add / static_cast<double>(add_n);
  if (rem_n) s.rem_pix = rem / static_cast<double>(rem_n);
  return s;
}

}  // namespace promkit
