#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promkit/image.hpp"
#include "promkit/manifest.hpp"

namespace promkit {

// Pixel counts of one binarized prediction against its GT mask.
struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt);

struct ImageConfusion {
  Confusion counts;
  double prominence = 0.0;
};

// Prominence-weighted precision/recall. Both share the numerator
// sum_i TP_i * (p_i - kappa); denominators are sum_i (TP_i + FP_i) and
// sum_i (TP_i + FN_i). A zero denominator leaves the value unset.
struct ProminencePr {
  double numerator = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
};

ProminencePr prominence_pr(std::span<const ImageConfusion> images, double kappa);

// Harmonic mean; 0 when both are 0, unset if either input is unset or
// they cancel to zero.
std::optional<double> f1(std::optional<double> precision, std::optional<double> recall);

struct PrPoint {
  std::optional<double> recall;
  std::optional<double> precision;
};

// Trapezoidal area under precision over recall. Undefined points are
// dropped, the rest stably sorted by recall. Unset with < 2 points.
std::optional<double> pr_auc(std::span<const PrPoint> points);

// Plain pixel precision/recall/IoU, no prominence weighting.
struct BinaryScores {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> product;  // precision * recall
  std::optional<double> iou;
};

BinaryScores binary_scores(const Confusion& summed);

// One record's inputs to evaluation.
struct EvalItem {
  std::string id;
  double prominence = 0.0;
  BinaryMask gt;
  Heatmap heatmap;
};

// Binary scores at `threshold` over items with prominence > cutoff.
// Everything unset when the subset is empty.
BinaryScores prominent_subset_eval(std::span<const EvalItem> items, double cutoff, double threshold);

// Grid value with the largest precision*recall on the prominent subset;
// ties go to the smaller threshold. Throws ValidationError when no
// threshold yields a defined product.
double select_threshold(std::span<const EvalItem> items, std::span<const double> grid, double cutoff);

// mean prominence x confident masks / 100.
double combined_score(double mean_prominence, std::int64_t confident_masks);

struct EvalConfig {
  double kappa = 0.3;
  double cutoff = 0.5;
  double grid_step = 0.05;

  void validate() const;
  // i * step for i = 0..1/step, computed as i / n so the last value is 1.
  std::vector<double> grid() const;
};

struct ThresholdRow {
  double threshold = 0.0;
  ProminencePr pr;
  std::optional<double> f1;
  BinaryScores prominent;
};

struct EvalReport {
  EvalConfig config;
  std::size_t image_count = 0;
  std::size_t prominent_count = 0;
  std::vector<ThresholdRow> rows;
  std::optional<double> pr_auc;            // over (Rec^pr, Prec^pr)
  std::optional<double> prominent_pr_auc;  // over binary (recall, precision)
  std::optional<double> selected_threshold;
  std::optional<double> best_f1;
  std::optional<double> best_f1_threshold;
};

EvalReport evaluate(std::span<const EvalItem> items, const EvalConfig& cfg);

// Loads GT masks from the records and heatmaps from <heatmap_dir>/<id>.fmap.
std::vector<EvalItem> load_eval_items(std::span<const ArtifactRecord> records,
                                      const std::filesystem::path& heatmap_dir);

// Deterministic serialisations; undefined values become null / empty cells.
std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

}  // namespace promkit
