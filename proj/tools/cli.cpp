#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "promkit/annotation.hpp"
#include "promkit/erqa.hpp"
#include "promkit/error.hpp"
#include "promkit/evaluation.hpp"
#include "promkit/features.hpp"
#include "promkit/finetune.hpp"
#include "promkit/fmap.hpp"
#include "promkit/manifest.hpp"
#include "promkit/morphology.hpp"
#include "promkit/png_io.hpp"
#include "promkit/regressor.hpp"
#include "promkit/ssm_jup.hpp"

#ifndef PROMKIT_VERSION
#define PROMKIT_VERSION "0.0.0"
#endif

namespace promkit::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string version_text() {
  return std::string("promkit ") + PROMKIT_VERSION + " (FMAP v" + std::to_string(kFmapVersion) +
         ", PROM v" + std::to_string(kCheckpointVersion) + ")";
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

fs::path sibling(const fs::path& out, const char* extension) {
  fs::path p = out;
  return p.replace_extension(extension);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

// Sidecar describing one run: enough to repeat it and check its inputs.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  json& config() { return config_; }
  void seed(std::uint64_t s) { seed_ = s; }

  void input(const std::string& role, const fs::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.generic_string()},
                       {"sha256", sha256_hex(read_file_bytes(path))}});
  }

  void write(const fs::path& path) const {
    json doc;
    doc["subcommand"] = subcommand_;
    doc["config"] = config_;
    doc["inputs"] = inputs_;
    doc["tool_version"] = PROMKIT_VERSION;
    doc["formats"] = {{"fmap", kFmapVersion}, {"prom", kCheckpointVersion}};
    doc["seed"] = seed_ ? json(*seed_) : json(nullptr);
    write_text(path, doc.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  json config_ = json::object();
  json inputs_ = json::array();
  std::optional<std::uint64_t> seed_;
};

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_num(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, res.ptr);
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---- features --------------------------------------------------------------

struct FeaturesArgs {
  std::string sr, ref, lr, dists, lpips;
  std::string manifest, neural;
  std::string out;
  FeatureConfig cfg;
};

void write_features(const Image& sr, const Image& ref, const Image& lr, const Heatmap& dists,
                    const Heatmap& lpips, const FeatureConfig& cfg, const fs::path& dir) {
  const FeatureStack stack = build_feature_stack(sr, ref, lr, dists, lpips, cfg);
  ensure_dir(dir);
  save_feature_stack(stack, dir);
  write_fmap(erqa_map(sr, ref, cfg.erqa_grid, cfg.edge_match_radius), dir / "erqa.fmap");
}

json feature_config_json(const FeatureConfig& cfg) {
  auto grid = [](const BlockGrid& g) {
    return json{{"block_w", g.block_w}, {"block_h", g.block_h}, {"stride_x", g.stride_x},
                {"stride_y", g.stride_y}};
  };
  return {{"dists_grid", grid(cfg.dists_grid)}, {"lpips_grid", grid(cfg.lpips_grid)},
          {"erqa_grid", grid(cfg.erqa_grid)}, {"lpips_weight", cfg.lpips_weight},
          {"erqa_weight", cfg.erqa_weight}, {"ssm_window", cfg.ssm_window},
          {"edge_match_radius", cfg.edge_match_radius}, {"scale", cfg.scale}};
}

void run_features(const FeaturesArgs& a, std::ostream& out) {
  a.cfg.validate();
  RunManifest run("features");
  run.config() = feature_config_json(a.cfg);
  const fs::path out_dir = a.out;

  if (!a.manifest.empty()) {
    if (a.neural.empty()) throw ValidationError("features: --manifest requires --neural");
    const auto records = load_manifest(a.manifest);
    run.input("manifest", a.manifest);
    for (const ArtifactRecord& r : records) {
      const fs::path neural = fs::path(a.neural) / r.id;
      run.input(r.id + "/sr", r.sr_path);
      run.input(r.id + "/reference", r.reference_path);
      run.input(r.id + "/lr", r.lr_path);
      run.input(r.id + "/dists", neural / "dists.fmap");
      run.input(r.id + "/lpips", neural / "lpips.fmap");
      write_features(load_image(r.sr_path), load_image(r.reference_path), load_image(r.lr_path),
                     read_fmap(neural / "dists.fmap"), read_fmap(neural / "lpips.fmap"), a.cfg,
                     out_dir / r.id);
    }
    out << "wrote features for " << records.size() << " records to " << out_dir.string() << "\n";
  } else {
    for (const auto& [flag, value] : {std::pair{"--sr", &a.sr}, {"--ref", &a.ref}, {"--lr", &a.lr},
                                      {"--dists", &a.dists}, {"--lpips", &a.lpips}}) {
      if (value->empty()) throw ValidationError(std::string("features: ") + flag + " is required");
    }
    run.input("sr", a.sr);
    run.input("reference", a.ref);
    run.input("lr", a.lr);
    run.input("dists", a.dists);
    run.input("lpips", a.lpips);
    write_features(load_image(a.sr), load_image(a.ref), load_image(a.lr), read_fmap(a.dists),
                   read_fmap(a.lpips), a.cfg, out_dir);
    out << "wrote features to " << out_dir.string() << "\n";
  }
  run.write(out_dir / "run.json");
}

// ---- train / predict ---------------------------------------------------------

struct TrainArgs {
  std::string manifest, features, out;
  TrainConfig cfg;
};

void record_stack_inputs(RunManifest& run, const std::string& prefix, const fs::path& dir) {
  for (const char* name : {"dists", "ssm_jup", "bd_jup"}) {
    run.input(prefix + name, dir / (std::string(name) + ".fmap"));
  }
}

void run_train(const TrainArgs& a, std::ostream& out) {
  a.cfg.validate();
  RunManifest run("train");
  run.config() = {{"learning_rate", a.cfg.learning_rate}, {"beta1", a.cfg.beta1},
                  {"beta2", a.cfg.beta2}, {"epsilon", a.cfg.epsilon}, {"epochs", a.cfg.epochs},
                  {"layers", kLayerSizes}};
  run.seed(a.cfg.seed);

  const auto records = load_manifest(a.manifest);
  run.input("manifest", a.manifest);
  std::vector<FeatureStack> stacks;
  stacks.reserve(records.size());
  for (const ArtifactRecord& r : records) {
    const fs::path dir = fs::path(a.features) / r.id;
    record_stack_inputs(run, r.id + "/", dir);
    run.input(r.id + "/mask", r.mask_path);
    stacks.push_back(load_feature_stack(dir));
  }

  const TrainResult result = train(records, stacks, a.cfg);
  save_checkpoint(result.params, a.out);

  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    csv << e + 1 << ',' << csv_num(result.epoch_loss[e]) << '\n';
  }
  write_text(sibling(a.out, ".loss.csv"), csv.str());
  run.write(sibling(a.out, ".run.json"));
  out << "trained " << a.cfg.epochs << " epochs on " << records.size()
      << " images, final loss " << csv_num(result.final_loss) << "\n";
}

struct PredictArgs {
  std::string model, features, out, manifest, render, sr;
};

Image render_overlay(const Image& sr, const Heatmap& map) {
  if (!same_dims(sr, map)) throw ContractError("render: heatmap does not match the SR image");
  Image out(sr.width(), sr.height(), 3);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float a = 0.6f * std::clamp(map[i], 0.0f, 1.0f);
    for (std::size_t c = 0; c < 3; ++c) {
      const float base = sr.data()[i * sr.channels() + (sr.channels() == 3 ? c : 0)];
      const float tint = c == 0 ? 1.0f : 0.0f;
      out.data()[i * 3 + c] = (1.0f - a) * base + a * tint;
    }
  }
  return out;
}

void run_predict(const PredictArgs& a, unsigned threads, std::ostream& out) {
  RunManifest run("predict");
  run.input("model", a.model);
  const RegressorParams params = load_checkpoint(a.model);

  if (!a.manifest.empty()) {
    if (!a.render.empty()) throw ValidationError("predict: --render needs a single image, not --manifest");
    const auto records = load_manifest(a.manifest);
    run.input("manifest", a.manifest);
    const fs::path out_dir = a.out;
    ensure_dir(out_dir);
    for (const ArtifactRecord& r : records) {
      const fs::path dir = fs::path(a.features) / r.id;
      record_stack_inputs(run, r.id + "/", dir);
      write_fmap(predict(params, load_feature_stack(dir), threads), out_dir / (r.id + ".fmap"));
    }
    run.write(out_dir / "run.json");
    out << "wrote " << records.size() << " heatmaps to " << out_dir.string() << "\n";
    return;
  }

  record_stack_inputs(run, "", a.features);
  const Heatmap map = predict(params, load_feature_stack(a.features), threads);
  write_fmap(map, a.out);
  if (!a.render.empty()) {
    if (a.sr.empty()) throw ValidationError("predict: --render requires --sr");
    run.input("sr", a.sr);
    save_image(render_overlay(load_image(a.sr), map), a.render);
    run.config()["render"] = a.render;
  }
  run.write(sibling(a.out, ".run.json"));
  out << "wrote " << a.out << "\n";
}

// ---- masks ---------------------------------------------------------------------

struct MaskArgs {
  std::string mask, heatmap, out;
  std::optional<double> threshold;
  PostprocessSettings post;
  std::size_t min_area = 1;
};

// Mask from --mask, or from --heatmap binarized at --threshold.
BinaryMask input_mask(const MaskArgs& a, RunManifest& run, const char* cmd) {
  if (!a.mask.empty()) {
    run.input("mask", a.mask);
    return load_mask(a.mask);
  }
  if (a.heatmap.empty() || !a.threshold) {
    throw ValidationError(std::string(cmd) + ": give --mask, or --heatmap with --threshold");
  }
  run.input("heatmap", a.heatmap);
  return binarize(read_fmap(a.heatmap), *a.threshold);
}

void run_postprocess(const MaskArgs& a, std::ostream& out) {
  RunManifest run("postprocess");
  auto element = [](const StructuringElement& se) {
    return json{{"shape", se.shape() == ElementShape::kDisc ? "disc" : "square"},
                {"requested_size", se.requested_size()},
                {"size", se.size()}};
  };
  run.config() = {{"open", element(StructuringElement::square(a.post.open_size))},
                  {"dilate", element(StructuringElement::disc(a.post.dilate_diameter))},
                  {"close", element(StructuringElement::square(a.post.close_size))},
                  {"threshold", opt(a.threshold)}};
  const BinaryMask mask = input_mask(a, run, "postprocess");
  save_mask(postprocess_mask(mask, a.post), a.out);
  run.write(sibling(a.out, ".run.json"));
  out << "wrote " << a.out << "\n";
}

void run_components(const MaskArgs& a, std::ostream& out) {
  RunManifest run("components");
  run.config() = {{"min_area", a.min_area}, {"threshold", opt(a.threshold)}};
  const BinaryMask mask = input_mask(a, run, "components");
  std::optional<Heatmap> strength;
  if (!a.heatmap.empty()) {
    if (!a.mask.empty()) run.input("heatmap", a.heatmap);
    strength = read_fmap(a.heatmap);
    if (!same_dims(*strength, mask)) throw ContractError("components: heatmap does not match the mask");
  }
  const auto comps = components(mask, strength ? &*strength : nullptr, a.min_area);
  json doc = json::array();
  for (const Component& c : comps) {
    doc.push_back({{"bbox", {{"x0", c.bbox.x0}, {"y0", c.bbox.y0}, {"x1", c.bbox.x1}, {"y1", c.bbox.y1}}},
                   {"area", c.area},
                   {"strength", c.strength}});
  }
  write_text(a.out, doc.dump(2) + "\n");
  run.write(sibling(a.out, ".run.json"));
  out << "wrote " << comps.size() << " components to " << a.out << "\n";
}

// ---- evaluation ----------------------------------------------------------------

struct EvalArgs {
  std::string manifest, heatmaps, out;
  EvalConfig cfg;
};

std::vector<EvalItem> eval_inputs(const EvalArgs& a, RunManifest& run) {
  a.cfg.validate();
  const auto records = load_manifest(a.manifest);
  run.input("manifest", a.manifest);
  for (const ArtifactRecord& r : records) {
    run.input(r.id + "/mask", r.mask_path);
    run.input(r.id + "/heatmap", fs::path(a.heatmaps) / (r.id + ".fmap"));
  }
  return load_eval_items(records, a.heatmaps);
}

void run_evaluate(const EvalArgs& a, std::ostream& out) {
  RunManifest run("evaluate");
  run.config() = {{"kappa", a.cfg.kappa}, {"cutoff", a.cfg.cutoff}, {"grid_step", a.cfg.grid_step}};
  const auto items = eval_inputs(a, run);
  const EvalReport report = evaluate(items, a.cfg);
  write_text(a.out, report_to_json(report));
  write_text(sibling(a.out, ".csv"), report_to_csv(report));
  run.write(sibling(a.out, ".run.json"));
  out << "evaluated " << report.image_count << " images, PR-AUC " << csv_num(report.pr_auc) << "\n";
}

void run_threshold_search(const EvalArgs& a, std::ostream& out) {
  RunManifest run("threshold-search");
  run.config() = {{"cutoff", a.cfg.cutoff}, {"grid_step", a.cfg.grid_step}};
  const auto items = eval_inputs(a, run);
  const auto grid = a.cfg.grid();
  const double t = select_threshold(items, grid, a.cfg.cutoff);
  const BinaryScores s = prominent_subset_eval(items, a.cfg.cutoff, t);
  const auto prominent = std::count_if(items.begin(), items.end(),
                                       [&](const EvalItem& i) { return i.prominence > a.cfg.cutoff; });
  json doc = {{"threshold", t},
              {"prominent_count", prominent},
              {"precision", opt(s.precision)},
              {"recall", opt(s.recall)},
              {"precision_x_recall", opt(s.product)},
              {"iou", opt(s.iou)}};
  write_text(a.out, doc.dump(2) + "\n");
  run.write(sibling(a.out, ".run.json"));
  out << "selected threshold " << csv_num(t) << "\n";
}

// ---- fine-tuning -------------------------------------------------------------

struct FinetuneGtArgs {
  std::string sr, fallback, mask, out;
  std::size_t dilate = kDefaultGtDilation;
};

void run_finetune_gt(const FinetuneGtArgs& a, std::ostream& out) {
  RunManifest run("finetune-gt");
  run.config() = {{"dilate", a.dilate}};
  run.input("sr", a.sr);
  run.input("fallback", a.fallback);
  run.input("mask", a.mask);
  std::optional<StructuringElement> se;
  if (a.dilate > 0) se = StructuringElement::disc(a.dilate);
  save_image(artificial_gt(load_image(a.sr), load_image(a.fallback), load_mask(a.mask), se), a.out);
  run.write(sibling(a.out, ".run.json"));
  out << "wrote " << a.out << "\n";
}

struct FinetuneScoreArgs {
  std::string triples, out;
};

void run_finetune_score(const FinetuneScoreArgs& a, std::ostream& out) {
  RunManifest run("finetune-score");
  run.input("triples", a.triples);
  json doc;
  try {
    doc = json::parse(read_text(a.triples));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("triples file is not valid JSON: ") + e.what());
  }
  if (!doc.is_array() || doc.empty()) throw ValidationError("triples file must be a non-empty JSON array");
  const fs::path base = fs::path(a.triples).parent_path();
  std::vector<FinetunePair> pairs;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& t = doc[i];
    const std::string label = t.is_object() && t.contains("id") && t["id"].is_string()
                                  ? t["id"].get<std::string>()
                                  : "#" + std::to_string(i);
    auto path = [&](const char* key) {
      if (!t.is_object() || !t.contains(key) || !t[key].is_string()) {
        throw ValidationError("triple '" + label + "': missing or non-string key '" + key + "'");
      }
      const fs::path p = t[key].get<std::string>();
      const fs::path full = p.is_absolute() ? p : base / p;
      run.input(label + "/" + key, full);
      return load_mask(full);
    };
    FinetunePair pair{path("before"), path("after"), path("gt")};
    pair.validate();
    pairs.push_back(std::move(pair));
  }
  const FinetuneScores s = score_finetune(pairs);
  json result = {{"pairs", s.pairs},
                 {"delta_iou", opt(s.delta_iou)},
                 {"delta_iou_skipped", s.delta_iou_skipped},
                 {"add_img", s.add_img},
                 {"rem_img", s.rem_img},
                 {"add_pix", opt(s.add_pix)},
                 {"rem_pix", opt(s.rem_pix)}};
  write_text(a.out, result.dump(2) + "\n");
  write_text(sibling(a.out, ".csv"),
             "pairs,delta_iou,add_img,rem_img,add_pix,rem_pix\n" + std::to_string(s.pairs) + "," +
                 csv_num(s.delta_iou) + "," + csv_num(s.add_img) + "," + csv_num(s.rem_img) + "," +
                 csv_num(s.add_pix) + "," + csv_num(s.rem_pix) + "\n");
  run.write(sibling(a.out, ".run.json"));
  out << "scored " << s.pairs << " pairs\n";
}

// ---- annotation ----------------------------------------------------------------

struct BootstrapArgs {
  std::string votes, out;
  BootstrapConfig cfg;
  bool keep_flagged = false;
};

void run_bootstrap(const BootstrapArgs& a, std::ostream& out) {
  a.cfg.validate();
  RunManifest run("bootstrap");
  run.config() = {{"k_max", a.cfg.k_max}, {"resamples", a.cfg.resamples}, {"level", a.cfg.level},
                  {"keep_flagged", a.keep_flagged}};
  run.seed(a.cfg.seed);
  run.input("votes", a.votes);
  std::vector<BootstrapCurve> curves;
  for (const VoteSet& v : load_votes(a.votes)) {
    curves.push_back(bootstrap_ci(a.keep_flagged ? v : filter_votes(v), a.cfg));
  }
  write_text(a.out, curves_to_csv(curves));
  run.write(sibling(a.out, ".run.json"));
  out << "wrote " << curves.size() << " curves to " << a.out << "\n";
}

void run_filter_votes(const std::string& votes, const std::string& to, std::ostream& out) {
  RunManifest run("filter-votes");
  run.input("votes", votes);
  std::vector<VoteSet> sets;
  std::size_t dropped = 0;
  for (const VoteSet& v : load_votes(votes)) {
    sets.push_back(filter_votes(v));
    dropped += v.votes.size() - sets.back().votes.size();
  }
  write_text(to, votes_to_json(sets));
  run.write(sibling(to, ".run.json"));
  out << "dropped " << dropped << " flagged answers\n";
}

// ---- fmap --------------------------------------------------------------------------

void run_fmap_inspect(const std::string& path, std::ostream& out) {
  const auto bytes = read_file_bytes(path);
  const Heatmap map = decode_fmap(bytes);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sum = 0.0;
  for (float v : map.data()) {
    lo = std::min<double>(lo, v);
    hi = std::max<double>(hi, v);
    sum += v;
  }
  json doc = {{"version", kFmapVersion},
              {"width", map.width()},
              {"height", map.height()},
              {"channels", 1},
              {"min", map.size() ? json(lo) : json(nullptr)},
              {"max", map.size() ? json(hi) : json(nullptr)},
              {"mean", map.size() ? json(sum / static_cast<double>(map.size())) : json(nullptr)},
              {"sha256", sha256_hex(bytes)}};
  out << doc.dump(2) << "\n";
}

void run_fmap_convert(const std::string& in, const std::string& to, std::ostream& out) {
  const auto ext = [](const std::string& p) { return fs::path(p).extension().string(); };
  RunManifest run("fmap convert");
  run.input("in", in);
  if (ext(in) == ".fmap" && ext(to) == ".png") {
    save_heatmap_png(read_fmap(in), to);
  } else if (ext(in) == ".png" && ext(to) == ".fmap") {
    const Image luma = to_luma(load_image(in));
    write_fmap(Heatmap(luma.width(), luma.height(), std::vector<float>(luma.data().begin(), luma.data().end())),
               to);
  } else {
    throw ValidationError("fmap convert: supported conversions are .fmap -> .png and .png -> .fmap");
  }
  run.write(sibling(to, ".run.json"));
  out << "wrote " << to << "\n";
}

// Runs `fn`, translating library errors into exit codes.
int guarded(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Super-resolution artifact prominence toolkit"};
  app.name("promkit");
  app.require_subcommand(1);
  app.set_version_flag("--version", version_text());
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->envname("PROMKIT_THREADS");

  std::function<void()> action;

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Compute regressor feature maps");
  features->add_option("--sr", fa.sr, "SR image (PNG)");
  features->add_option("--ref", fa.ref, "Reference image (PNG)");
  features->add_option("--lr", fa.lr, "Low-resolution input (PNG)");
  features->add_option("--dists", fa.dists, "Block-wise DISTS map (FMAP)");
  features->add_option("--lpips", fa.lpips, "Block-wise LPIPS map (FMAP)");
  features->add_option("--manifest", fa.manifest, "Dataset manifest; processes every record");
  features->add_option("--neural", fa.neural, "Directory with <id>/dists.fmap and <id>/lpips.fmap");
  features->add_option("--scale", fa.cfg.scale, "SR upscaling factor")->capture_default_str();
  features->add_option("--ssm-window", fa.cfg.ssm_window, "ssm_jup window")->capture_default_str();
  features->add_option("--edge-radius", fa.cfg.edge_match_radius, "ERQA match radius")->capture_default_str();
  features->add_option("--out", fa.out, "Output directory")->required();
  features->callback([&] { action = [&] { run_features(fa, out); }; });

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the prominence regressor");
  train_cmd->add_option("--manifest", ta.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--features", ta.features, "Directory with <id>/ feature maps")->required();
  train_cmd->add_option("--out", ta.out, "Checkpoint path")->required();
  train_cmd->add_option("--epochs", ta.cfg.epochs)->capture_default_str();
  train_cmd->add_option("--lr", ta.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--seed", ta.cfg.seed)->capture_default_str();
  train_cmd->callback([&] { action = [&] { run_train(ta, out); }; });

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Predict a prominence heatmap");
  predict_cmd->add_option("--model", pa.model, "Checkpoint (PROM)")->required();
  predict_cmd->add_option("--features", pa.features, "Feature directory")->required();
  predict_cmd->add_option("--out", pa.out, "Heatmap path, or directory with --manifest")->required();
  predict_cmd->add_option("--manifest", pa.manifest, "Predict every record; features from <dir>/<id>");
  predict_cmd->add_option("--render", pa.render, "Also write a red overlay PNG");
  predict_cmd->add_option("--sr", pa.sr, "SR image underneath the overlay");
  predict_cmd->callback([&] { action = [&] { run_predict(pa, resolve_threads(threads), out); }; });

  MaskArgs ma;
  auto add_mask_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--mask", ma.mask, "Mask PNG (0/255)");
    cmd->add_option("--heatmap", ma.heatmap, "Heatmap (FMAP)");
    cmd->add_option("--threshold", ma.threshold, "Binarization threshold for --heatmap");
    cmd->add_option("--out", ma.out)->required();
  };
  auto* post_cmd = app.add_subcommand("postprocess", "Open, dilate and close a detection mask");
  add_mask_inputs(post_cmd);
  post_cmd->add_option("--open", ma.post.open_size, "Opening square size")->capture_default_str();
  post_cmd->add_option("--dilate", ma.post.dilate_diameter, "Dilation disc diameter")->capture_default_str();
  post_cmd->add_option("--close", ma.post.close_size, "Closing square size")->capture_default_str();
  post_cmd->callback([&] { action = [&] { run_postprocess(ma, out); }; });

  auto* comp_cmd = app.add_subcommand("components", "List connected components as JSON");
  add_mask_inputs(comp_cmd);
  comp_cmd->add_option("--min-area", ma.min_area)->capture_default_str();
  comp_cmd->callback([&] { action = [&] { run_components(ma, out); }; });

  EvalArgs ea;
  auto add_eval_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", ea.manifest, "Dataset manifest")->required();
    cmd->add_option("--heatmaps", ea.heatmaps, "Directory with <id>.fmap")->required();
    cmd->add_option("--cutoff", ea.cfg.cutoff, "Prominent-subset cutoff")->capture_default_str();
    cmd->add_option("--grid-step", ea.cfg.grid_step, "Threshold grid step")->capture_default_str();
    cmd->add_option("--out", ea.out)->required();
  };
  auto* eval_cmd = app.add_subcommand("evaluate", "Prominence-weighted evaluation report");
  add_eval_inputs(eval_cmd);
  eval_cmd->add_option("--kappa", ea.cfg.kappa, "Prominence margin")->capture_default_str();
  eval_cmd->callback([&] { action = [&] { run_evaluate(ea, out); }; });

  auto* thr_cmd = app.add_subcommand("threshold-search", "Pick the binarization threshold");
  add_eval_inputs(thr_cmd);
  thr_cmd->callback([&] { action = [&] { run_threshold_search(ea, out); }; });

  FinetuneGtArgs ga;
  auto* gt_cmd = app.add_subcommand("finetune-gt", "Build an artificial fine-tuning target");
  gt_cmd->add_option("--sr", ga.sr)->required();
  gt_cmd->add_option("--fallback", ga.fallback, "Pseudo-GT image")->required();
  gt_cmd->add_option("--mask", ga.mask)->required();
  gt_cmd->add_option("--dilate", ga.dilate, "Disc diameter, 0 = none")->capture_default_str();
  gt_cmd->add_option("--out", ga.out)->required();
  gt_cmd->callback([&] { action = [&] { run_finetune_gt(ga, out); }; });

  FinetuneScoreArgs sa;
  auto* score_cmd = app.add_subcommand("finetune-score", "Score detections before/after fine-tuning");
  score_cmd->add_option("--triples", sa.triples, "JSON array of {id, before, after, gt}")->required();
  score_cmd->add_option("--out", sa.out)->required();
  score_cmd->callback([&] { action = [&] { run_finetune_score(sa, out); }; });

  BootstrapArgs ba;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Confidence intervals versus assessor count");
  boot_cmd->add_option("--votes", ba.votes)->required();
  boot_cmd->add_option("--kmax", ba.cfg.k_max)->capture_default_str();
  boot_cmd->add_option("--n", ba.cfg.resamples, "Resamples per k")->capture_default_str();
  boot_cmd->add_option("--seed", ba.cfg.seed)->capture_default_str();
  boot_cmd->add_option("--level", ba.cfg.level)->capture_default_str();
  boot_cmd->add_flag("--keep-flagged", ba.keep_flagged, "Keep answers of flagged participants");
  boot_cmd->add_option("--out", ba.out)->required();
  boot_cmd->callback([&] { action = [&] { run_bootstrap(ba, out); }; });

  std::string fv_votes, fv_out;
  auto* fv_cmd = app.add_subcommand("filter-votes", "Drop answers of flagged participants");
  fv_cmd->add_option("--votes", fv_votes)->required();
  fv_cmd->add_option("--out", fv_out)->required();
  fv_cmd->callback([&] { action = [&] { run_filter_votes(fv_votes, fv_out, out); }; });

  std::string fmap_path, fmap_in, fmap_out;
  auto* fmap_cmd = app.add_subcommand("fmap", "Inspect or convert FMAP files");
  fmap_cmd->require_subcommand(1);
  auto* inspect = fmap_cmd->add_subcommand("inspect", "Print header and statistics as JSON");
  inspect->add_option("file", fmap_path)->required();
  inspect->callback([&] { action = [&] { run_fmap_inspect(fmap_path, out); }; });
  auto* convert = fmap_cmd->add_subcommand("convert", "FMAP <-> grayscale PNG");
  convert->add_option("--in", fmap_in)->required();
  convert->add_option("--out", fmap_out)->required();
  convert->callback([&] { action = [&] { run_fmap_convert(fmap_in, fmap_out, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion&) {
    out << version_text() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    while (!failing->get_subcommands().empty()) failing = failing->get_subcommands().front();
    err << failing->help();
    return kExitInvalid;
  }
  if (!action) {
    err << app.help();
    return kExitInvalid;
  }
  return guarded(action, err);
}

}  // namespace promkit::cli
