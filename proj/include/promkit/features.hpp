#pragma once

#include <cstddef>
#include <filesystem>

#include "promkit/image.hpp"

namespace promkit {

struct FeatureConfig {
  BlockGrid dists_grid = BlockGrid::square(16, 16);
  BlockGrid lpips_grid = BlockGrid::square(32, 16);
  BlockGrid erqa_grid = BlockGrid::square(8, 8);
  // LPIPS : ERQA = 3 : 2, normalised so bd_jup stays in [0,1].
  double lpips_weight = 0.6;
  double erqa_weight = 0.4;
  std::size_t ssm_window = 7;
  double edge_match_radius = 2.0;
  std::size_t scale = 4;

  void validate() const;
};

// Regressor inputs, all at SR resolution.
struct FeatureStack {
  Heatmap dists;
  Heatmap ssm_jup;
  Heatmap bd_jup;

  std::size_t width() const { return dists.width(); }
  std::size_t height() const { return dists.height(); }
  std::size_t pixel_count() const { return dists.size(); }

  // Checks shared dimensions and the documented value ranges.
  void validate() const;
};

// lpips_weight * lpips + erqa_weight * (1 - erqa), per pixel.
Heatmap bd_jup_combine(const Heatmap& lpips, const Heatmap& erqa, const FeatureConfig& cfg = {});

// Assembles the stack for one SR output. `reference` is the HR frame or a
// pseudo-GT upscale; DISTS and LPIPS come pre-computed as FMAP files.
FeatureStack build_feature_stack(const Image& sr, const Image& reference, const Image& lr,
                                 const std::filesystem::path& dists_path,
                                 const std::filesystem::path& lpips_path, const FeatureConfig& cfg = {});

// Same, with the neural maps already in memory.
FeatureStack build_feature_stack(const Image& sr, const Image& reference, const Image& lr,
                                 const Heatmap& dists, const Heatmap& lpips, const FeatureConfig& cfg = {});

// Reads <dir>/dists.fmap, <dir>/ssm_jup.fmap and <dir>/bd_jup.fmap.
FeatureStack load_feature_stack(const std::filesystem::path& dir);
void save_feature_stack(const FeatureStack& stack, const std::filesystem::path& dir);

}  // namespace promkit
