#include "promkit/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "promkit/error.hpp"
#include "promkit/fmap.hpp"
#include "promkit/morphology.hpp"
#include "promkit/png_io.hpp"

namespace promkit {

Confusion confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (!same_dims(pred, gt)) throw ContractError("confusion: prediction and GT differ in size");
  Confusion c;
  const auto p = pred.bits();
  const auto g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) {
      g[i] ? ++c.tp : ++c.fp;
    } else {
      g[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

ProminencePr prominence_pr(std::span<const ImageConfusion> images, double kappa) {
  ProminencePr out;
  std::uint64_t detected = 0;
  std::uint64_t actual = 0;
  for (const ImageConfusion& img : images) {
    out.numerator += static_cast<double>(img.counts.tp) * (img.prominence - kappa);
    detected += img.counts.tp + img.counts.fp;
    actual += img.counts.tp + img.counts.fn;
  }
  if (detected > 0) out.precision = out.numerator / static_cast<double>(detected);
  if (actual > 0) out.recall = out.numerator / static_cast<double>(actual);
  return out;
}

std::optional<double> f1(std::optional<double> precision, std::optional<double> recall) {
  if (!precision || !recall) return std::nullopt;
  if (*precision == 0.0 && *recall == 0.0) return 0.0;
  const double sum = *precision + *recall;
  if (sum == 0.0) return std::nullopt;
  return 2.0 * *precision * *recall / sum;
}

std::optional<double> pr_auc(std::span<const PrPoint> points) {
  std::vector<std::pair<double, double>> pts;
  for (const PrPoint& p : points) {
    if (p.recall && p.precision) pts.emplace_back(*p.recall, *p.precision);
  }
  if (pts.size() < 2) return std::nullopt;
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
  }
  return area;
}

BinaryScores binary_scores(const Confusion& c) {
  BinaryScores s;
  const auto tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) s.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) s.recall = tp / static_cast<double>(c.tp + c.fn);
  if (s.precision && s.recall) s.product = *s.precision * *s.recall;
  if (c.tp + c.fp + c.fn > 0) s.iou = tp / static_cast<double>(c.tp + c.fp + c.fn);
  return s;
}

namespace {

Confusion& operator+=(Confusion& a, const Confusion& b) {
  a.tp += b.tp;
  a.fp += b.fp;
  a.fn += b.fn;
  a.tn += b.tn;
  return a;
}

void check_item(const EvalItem& item) {
  if (!same_dims(item.gt, item.heatmap)) {
    throw ContractError("record '" + item.id + "': heatmap and GT mask differ in size");
  }
}

std::optional<Confusion> prominent_confusion(std::span<const EvalItem> items, double cutoff,
                                             double threshold) {
  Confusion sum;
  bool any = false;
  for (const EvalItem& item : items) {
    if (!(item.prominence > cutoff)) continue;
    check_item(item);
    sum += confusion(binarize(item.heatmap, threshold), item.gt);
    any = true;
  }
  if (!any) return std::nullopt;
  return sum;
}

}  // namespace

BinaryScores prominent_subset_eval(std::span<const EvalItem> items, double cutoff, double threshold) {
  const auto sum = prominent_confusion(items, cutoff, threshold);
  return sum ? binary_scores(*sum) : BinaryScores{};
}

double select_threshold(std::span<const EvalItem> items, std::span<const double> grid, double cutoff) {
  if (grid.empty()) throw ValidationError("threshold search: empty grid");
  std::optional<double> best_t;
  double best = 0.0;
  for (double t : grid) {
    const auto product = prominent_subset_eval(items, cutoff, t).product;
    if (product && (!best_t || *product > best)) {
      best = *product;
      best_t = t;
    }
  }
  if (!best_t) throw ValidationError("threshold search: precision*recall undefined at every threshold");
  return *best_t;
}

double combined_score(double mean_prominence, std::int64_t confident_masks) {
  if (confident_masks < 0) throw ContractError("combined score: negative mask count");
  return mean_prominence * static_cast<double>(confident_masks) / 100.0;
}

void EvalConfig::validate() const {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ValidationError("kappa must lie in [0,1)");
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw ValidationError("cutoff must lie in [0,1]");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw ValidationError("grid step must lie in (0,1]");
  const double n = std::round(1.0 / grid_step);
  if (std::abs(n * grid_step - 1.0) > 1e-9) throw ValidationError("grid step must divide 1");
}

std::vector<double> EvalConfig::grid() const {
  validate();
  const auto n = static_cast<int>(std::round(1.0 / grid_step));
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(static_cast<double>(i) / n);
  return g;
}

EvalReport evaluate(std::span<const EvalItem> items, const EvalConfig& cfg) {
  cfg.validate();
  if (items.empty()) throw ValidationError("evaluate: no records");
  for (const EvalItem& item : items) {
    check_item(item);
    if (!(item.prominence >= 0.0 && item.prominence <= 1.0)) {
      throw ValidationError("record '" + item.id + "': prominence outside [0,1]");
    }
  }

  EvalReport report;
  report.config = cfg;
  report.image_count = items.size();
  report.prominent_count = static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const EvalItem& it) { return it.prominence > cfg.cutoff; }));

  std::vector<PrPoint> weighted;
  std::vector<PrPoint> binary;
  std::vector<ImageConfusion> per_image(items.size());
  for (double t : cfg.grid()) {
    ThresholdRow row;
    row.threshold = t;
    Confusion prominent_sum;
    for (std::size_t i = 0; i < items.size(); ++i) {
      per_image[i].counts = confusion(binarize(items[i].heatmap, t), items[i].gt);
      per_image[i].prominence = items[i].prominence;
      if (items[i].prominence > cfg.cutoff) prominent_sum += per_image[i].counts;
    }
    row.pr = prominence_pr(per_image, cfg.kappa);
    row.f1 = f1(row.pr.precision, row.pr.recall);
    if (report.prominent_count > 0) row.prominent = binary_scores(prominent_sum);

    weighted.push_back({row.pr.recall, row.pr.precision});
    binary.push_back({row.prominent.recall, row.prominent.precision});
    if (row.f1 && (!report.best_f1 || *row.f1 > *report.best_f1)) {
      report.best_f1 = row.f1;
      report.best_f1_threshold = t;
    }
    report.rows.push_back(row);
  }
  report.pr_auc = pr_auc(weighted);
  report.prominent_pr_auc = pr_auc(binary);

  // Same rule as select_threshold, reusing the rows already computed.
  double best_product = 0.0;
  for (const ThresholdRow& row : report.rows) {
    if (row.prominent.product && (!report.selected_threshold || *row.prominent.product > best_product)) {
      best_product = *row.prominent.product;
      report.selected_threshold = row.threshold;
    }
  }
  return report;
}

std::vector<EvalItem> load_eval_items(std::span<const ArtifactRecord> records,
                                      const std::filesystem::path& heatmap_dir) {
  std::vector<EvalItem> items;
  items.reserve(records.size());
  for (const ArtifactRecord& rec : records) {
    if (!rec.prominence) throw ValidationError("record '" + rec.id + "' has no prominence");
    const auto heatmap_path = heatmap_dir / (rec.id + ".fmap");
    if (!std::filesystem::exists(heatmap_path)) {
      throw IoError("record '" + rec.id + "': heatmap " + heatmap_path.string() + " not found");
    }
    EvalItem item;
    item.id = rec.id;
    item.prominence = *rec.prominence;
    item.heatmap = read_fmap(heatmap_path);
    item.gt = load_mask(rec.mask_path);
    check_item(item);
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json scores_json(const BinaryScores& s) {
  return {{"precision", opt(s.precision)},
          {"recall", opt(s.recall)},
          {"precision_x_recall", opt(s.product)},
          {"iou", opt(s.iou)}};
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  const ThresholdRow* selected = nullptr;
  for (const ThresholdRow& row : report.rows) {
    rows.push_back({{"threshold", row.threshold},
                    {"numerator", row.pr.numerator},
                    {"precision_pr", opt(row.pr.precision)},
                    {"recall_pr", opt(row.pr.recall)},
                    {"f1", opt(row.f1)},
                    {"prominent", scores_json(row.prominent)}});
    if (report.selected_threshold && row.threshold == *report.selected_threshold) selected = &row;
  }
  nlohmann::json doc = {
      {"config", {{"kappa", report.config.kappa}, {"cutoff", report.config.cutoff}, {"grid_step", report.config.grid_step}}},
      {"image_count", report.image_count},
      {"prominent_count", report.prominent_count},
      {"pr_auc", opt(report.pr_auc)},
      {"prominent_pr_auc", opt(report.prominent_pr_auc)},
      {"best_f1", opt(report.best_f1)},
      {"best_f1_threshold", opt(report.best_f1_threshold)},
      {"selected_threshold", opt(report.selected_threshold)},
      {"selected", selected ? scores_json(selected->prominent) : nlohmann::json()},
      {"thresholds", rows},
  };
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "threshold,precision_pr,recall_pr,f1,prominent_precision,prominent_recall,"
         "prominent_precision_x_recall,prominent_iou\n";
  for (const ThresholdRow& row : report.rows) {
    out << cell(row.threshold) << ',' << cell(row.pr.precision) << ',' << cell(row.pr.recall) << ','
        << cell(row.f1) << ',' << cell(row.prominent.precision) << ',' << cell(row.prominent.recall) << ','
        << cell(row.prominent.product) << ',' << cell(row.prominent.iou) << '\n';
  }
  return out.str();
}

}  // namespace promkit
