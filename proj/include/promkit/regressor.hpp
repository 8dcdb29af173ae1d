#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "promkit/features.hpp"
#include "promkit/image.hpp"
#include "promkit/manifest.hpp"

namespace promkit {

// Pixel-wise prominence regressor: 3 -> 16 -> 16 -> 1, ReLU on the hidden
// layers, logistic sigmoid on the output.
inline constexpr std::array<std::size_t, 4> kLayerSizes = {3, 16, 16, 1};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> biases;   // outputs

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct RegressorParams {
  std::vector<DenseLayer> layers;

  // All-zero network of the standard shape.
  static RegressorParams zeros();
  // Glorot-uniform weights drawn from a seeded mt19937_64, zero biases,
  // rounded to float32 so the result survives a checkpoint round-trip.
  static RegressorParams glorot(std::uint64_t seed);

  std::size_t parameter_count() const;
  // Per layer: weights then biases.
  std::vector<double> flatten() const;
  void assign(std::span<const double> values);
  // Rounds every parameter to the nearest float32.
  void quantize();
  // Shape chain 3 -> ... -> 1 and finite values; throws ContractError.
  void validate() const;

  friend bool operator==(const RegressorParams&, const RegressorParams&) = default;
};

// Forward pass for one pixel's features {dists, ssm_jup, bd_jup}.
double forward_pixel(const RegressorParams& params, std::array<double, 3> features);

// Per-pixel prediction, clamped into the open interval (0,1) of float32.
Heatmap predict(const RegressorParams& params, const FeatureStack& stack, unsigned threads = 1);

// One training image: its features, artifact mask and crowd prominence.
struct TrainingExample {
  std::string id;
  FeatureStack features;
  BinaryMask mask;
  double prominence = 0.0;
};

// (mean prediction inside mask - prominence)^2 + (mean prediction outside)^2
double loss(const RegressorParams& params, const FeatureStack& stack, const BinaryMask& mask,
            double gt_prominence);

struct LossGradient {
  double loss = 0.0;
  RegressorParams gradient;  // same shapes as the parameters
};

LossGradient loss_and_grad(const RegressorParams& params, const FeatureStack& stack,
                           const BinaryMask& mask, double gt_prominence);

inline RegressorParams grad(const RegressorParams& params, const FeatureStack& stack,
                            const BinaryMask& mask, double gt_prominence) {
  return loss_and_grad(params, stack, mask, gt_prominence).gradient;
}

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 30;
  std::uint64_t seed = 0;

  void validate() const;
};

class AdamState {
 public:
  explicit AdamState(std::size_t parameter_count)
      : first_(parameter_count, 0.0), second_(parameter_count, 0.0) {}

  // One bias-corrected Adam update of `params` in place.
  void step(RegressorParams& params, const RegressorParams& gradient, const TrainConfig& cfg);

  std::uint64_t steps() const { return t_; }
  std::span<const double> first_moment() const { return first_; }
  std::span<const double> second_moment() const { return second_; }

 private:
  std::vector<double> first_;
  std::vector<double> second_;
  std::uint64_t t_ = 0;
};

struct TrainResult {
  RegressorParams params;
  std::vector<double> epoch_loss;  // mean pre-update loss per epoch
  double final_loss = 0.0;         // mean loss of the returned params
};

// One Adam step per image, image order reshuffled every epoch from the
// seed. Deterministic for identical inputs.
TrainResult train(std::span<const TrainingExample> examples, const TrainConfig& cfg);

// Manifest-driven variant; masks are read from each record's mask_path.
// Throws ValidationError naming a record without prominence.
TrainResult train(std::span<const ArtifactRecord> records, std::span<const FeatureStack> features,
                  const TrainConfig& cfg);

// PROM v1 checkpoint, little-endian:
//   "PROM" | u32 version=1 | u32 layer count | per layer u32 in, u32 out |
//   per layer float32 weights (out x in, row-major) then float32 biases
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const RegressorParams& params);
RegressorParams decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const RegressorParams& params, const std::filesystem::path& path);
RegressorParams load_checkpoint(const std::filesystem::path& path);

}  // namespace promkit
