#include "promkit/features.hpp"

#include <cmath>
#include <string>

#include "promkit/erqa.hpp"
#include "promkit/error.hpp"
#include "promkit/fmap.hpp"
#include "promkit/ssm_jup.hpp"

namespace promkit {
namespace {

std::string dims(std::size_t w, std::size_t h) { return std::to_string(w) + "x" + std::to_string(h); }

void check_range(const Heatmap& map, const char* name, double lo, double hi) {
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = map[i];
    if (!std::isfinite(v) || v < lo || v > hi) {
      throw DataError(std::string(name) + ": value " + std::to_string(v) + " at index " +
                      std::to_string(i) + " outside its valid range");
    }
  }
}

Heatmap read_named_fmap(const std::filesystem::path& path, const char* name) {
  if (!std::filesystem::exists(path)) {
    throw IoError(std::string(name) + ": feature map " + path.string() + " not found");
  }
  try {
    return read_fmap(path);
  } catch (const IoError& e) {
    throw IoError(std::string(name) + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  }
}

}  // namespace

void FeatureConfig::validate() const {
  dists_grid.validate();
  lpips_grid.validate();
  erqa_grid.validate();
  if (std::abs(lpips_weight + erqa_weight - 1.0) > 1e-12 ||
      std::abs(lpips_weight * 2.0 - erqa_weight * 3.0) > 1e-12) {
    throw ValidationError("feature config: LPIPS/ERQA weights must be 3:2 and sum to 1");
  }
  if (ssm_window == 0 || ssm_window % 2 == 0) throw ValidationError("feature config: ssm window must be odd");
  if (!(edge_match_radius >= 0.0)) throw ValidationError("feature config: negative edge radius");
  if (scale == 0) throw ValidationError("feature config: scale must be positive");
}

void FeatureStack::validate() const {
  if (!same_dims(dists, ssm_jup) || !same_dims(dists, bd_jup)) {
    throw ContractError("feature stack: maps differ in size");
  }
  check_range(dists, "dists", 0.0, 1.0);
  check_range(ssm_jup, "ssm_jup", 0.0, HUGE_VAL);
  check_range(bd_jup, "bd_jup", 0.0, 1.0);
}

Heatmap bd_jup_combine(const Heatmap& lpips, const Heatmap& erqa, const FeatureConfig& cfg) {
  if (!same_dims(lpips, erqa)) {
    throw ContractError("bd_jup: lpips is " + dims(lpips.width(), lpips.height()) + " but erqa is " +
                        dims(erqa.width(), erqa.height()));
  }
  check_range(lpips, "lpips", 0.0, 1.0);
  check_range(erqa, "erqa", 0.0, 1.0);
  Heatmap out(lpips.width(), lpips.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = cfg.lpips_weight * lpips[i] + cfg.erqa_weight * (1.0 - static_cast<double>(erqa[i]));
    out[i] = static_cast<float>(v);
  }
  return out;
}

FeatureStack build_feature_stack(const Image& sr, const Image& reference, const Image& lr,
                                 const Heatmap& dists, const Heatmap& lpips, const FeatureConfig& cfg) {
  cfg.validate();
  const auto want = dims(sr.width(), sr.height());
  if (!same_dims(dists, sr)) {
    throw ContractError("dists: map is " + dims(dists.width(), dists.height()) + ", SR image is " + want);
  }
  if (!same_dims(lpips, sr)) {
    throw ContractError("lpips: map is " + dims(lpips.width(), lpips.height()) + ", SR image is " + want);
  }
  if (!same_dims(reference, sr)) {
    throw ContractError("reference: image is " + dims(reference.width(), reference.height()) +
                        ", SR image is " + want);
  }
  check_range(dists, "dists", 0.0, 1.0);

  FeatureStack stack;
  stack.dists = dists;
  stack.ssm_jup = ssm_jup_map(sr, lr, cfg.ssm_window, cfg.scale);
  const Heatmap erqa = erqa_map(sr, reference, cfg.erqa_grid, cfg.edge_match_radius);
  stack.bd_jup = bd_jup_combine(lpips, erqa, cfg);
  stack.validate();
  return stack;
}

FeatureStack build_feature_stack(const Image& sr, const Image& reference, const Image& lr,
                                 const std::filesystem::path& dists_path,
                                 const std::filesystem::path& lpips_path, const FeatureConfig& cfg) {
  const Heatmap dists = read_named_fmap(dists_path, "dists");
  const Heatmap lpips = read_named_fmap(lpips_path, "lpips");
  return build_feature_stack(sr, reference, lr, dists, lpips, cfg);
}

FeatureStack load_feature_stack(const std::filesystem::path& dir) {
  FeatureStack stack;
  stack.dists = read_named_fmap(dir / "dists.fmap", "dists");
  stack.ssm_jup = read_named_fmap(dir / "ssm_jup.fmap", "ssm_jup");
  stack.bd_jup = read_named_fmap(dir / "bd_jup.fmap", "bd_jup");
  stack.validate();
  return stack;
}

void save_feature_stack(const FeatureStack& stack, const std::filesystem::path& dir) {
  write_fmap(stack.dists, dir / "dists.fmap");
  write_fmap(stack.ssm_jup, dir / "ssm_jup.fmap");
  write_fmap(stack.bd_jup, dir / "bd_jup.fmap");
}

}  // namespace promkit
