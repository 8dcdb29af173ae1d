#include "promkit/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "promkit/byte_io.hpp"
#include "promkit/error.hpp"
#include "promkit/fmap.hpp"
#include "promkit/parallel.hpp"
#include "promkit/png_io.hpp"

namespace promkit {
namespace {

constexpr std::size_t kMaxWidth = 64;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

DenseLayer make_layer(std::size_t in, std::size_t out) {
  return {in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)};
}

// Activations of one pixel. pre[l] and post[l] hold layer l's output
// before and after its nonlinearity.
struct Trace {
  std::array<std::array<double, kMaxWidth>, 3> pre{};
  std::array<std::array<double, kMaxWidth>, 3> post{};
};

double forward(const RegressorParams& p, const std::array<double, 3>& x, Trace& t) {
  const double* in = x.data();
  const std::size_t n_layers = p.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = p.layers[l];
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double z = layer.biases[o];
      const double* w = &layer.weights[o * layer.inputs];
      for (std::size_t i = 0; i < layer.inputs; ++i) z += w[i] * in[i];
      t.pre[l][o] = z;
      t.post[l][o] = (l + 1 == n_layers) ? sigmoid(z) : std::max(0.0, z);
    }
    in = t.post[l].data();
  }
  return t.post[n_layers - 1][0];
}

// Accumulates d(loss)/d(params) for one pixel given d(loss)/d(output).
void backward(const RegressorParams& p, const std::array<double, 3>& x, const Trace& t,
              double upstream, RegressorParams& g) {
  const std::size_t n_layers = p.layers.size();
  std::array<double, kMaxWidth> delta{};
  std::array<double, kMaxWidth> next{};
  const double y = t.post[n_layers - 1][0];
  delta[0] = upstream * y * (1.0 - y);

  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& layer = p.layers[l];
    DenseLayer& gl = g.layers[l];
    const double* in = l == 0 ? x.data() : t.post[l - 1].data();
    std::fill(next.begin(), next.begin() + static_cast<long>(layer.inputs), 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gl.biases[o] += d;
      double* gw = &gl.weights[o * layer.inputs];
      const double* w = &layer.weights[o * layer.inputs];
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        gw[i] += d * in[i];
        next[i] += d * w[i];
      }
    }
    if (l == 0) break;
    for (std::size_t i = 0; i < layer.inputs; ++i) {
      delta[i] = t.pre[l - 1][i] > 0.0 ? next[i] : 0.0;
    }
  }
}

std::array<double, 3> pixel_features(const FeatureStack& s, std::size_t i) {
  return {s.dists[i], s.ssm_jup[i], s.bd_jup[i]};
}

struct RegionMeans {
  double inside = 0.0;
  double outside = 0.0;
  std::size_t n_inside = 0;
  std::size_t n_outside = 0;
};

void check_loss_inputs(const FeatureStack& stack, const BinaryMask& mask, double gt) {
  if (!same_dims(stack, mask)) throw ContractError("loss: mask does not match feature stack");
  if (!(gt >= 0.0 && gt <= 1.0)) throw ContractError("loss: prominence outside [0,1]");
}

RegionMeans region_means(const RegressorParams& p, const FeatureStack& stack, const BinaryMask& mask) {
  RegionMeans m;
  Trace t;
  for (std::size_t i = 0; i < stack.pixel_count(); ++i) {
    const double y = forward(p, pixel_features(stack, i), t);
    if (mask[i]) {
      m.inside += y;
      ++m.n_inside;
    } else {
      m.outside += y;
      ++m.n_outside;
    }
  }
  if (m.n_inside == 0) throw ContractError("loss: mask has no inside pixels");
  if (m.n_outside == 0) throw ContractError("loss: mask has no outside pixels");
  m.inside /= static_cast<double>(m.n_inside);
  m.outside /= static_cast<double>(m.n_outside);
  return m;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

RegressorParams RegressorParams::zeros() {
  RegressorParams p;
  for (std::size_t l = 0; l + 1 < kLayerSizes.size(); ++l) {
    p.layers.push_back(make_layer(kLayerSizes[l], kLayerSizes[l + 1]));
  }
  return p;
}

RegressorParams RegressorParams::glorot(std::uint64_t seed) {
  RegressorParams p = zeros();
  std::uint64_t state = seed;
  std::mt19937_64 rng(splitmix64(state));
  for (DenseLayer& layer : p.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    for (double& w : layer.weights) w = (2.0 * unit_uniform(rng) - 1.0) * limit;
  }
  p.quantize();
  return p;
}

std::size_t RegressorParams::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<double> RegressorParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const DenseLayer& l : layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.biases.begin(), l.biases.end());
  }
  return out;
}

void RegressorParams::assign(std::span<const double> values) {
  if (values.size() != parameter_count()) throw ContractError("parameter count mismatch");
  std::size_t k = 0;
  for (DenseLayer& l : layers) {
    for (double& w : l.weights) w = values[k++];
    for (double& b : l.biases) b = values[k++];
  }
}

void RegressorParams::quantize() {
  for (DenseLayer& l : layers) {
    for (double& w : l.weights) w = static_cast<float>(w);
    for (double& b : l.biases) b = static_cast<float>(b);
  }
}

void RegressorParams::validate() const {
  if (layers.empty() || layers.size() > 3) throw ContractError("regressor: 1 to 3 layers expected");
  if (layers.front().inputs != 3) throw ContractError("regressor: first layer must take 3 features");
  if (layers.back().outputs != 1) throw ContractError("regressor: last layer must have 1 output");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (l > 0 && layer.inputs != layers[l - 1].outputs) throw ContractError("regressor: layer shapes do not chain");
    if (layer.outputs > kMaxWidth || layer.inputs > kMaxWidth) throw ContractError("regressor: layer too wide");
    if (layer.weights.size() != layer.inputs * layer.outputs || layer.biases.size() != layer.outputs) {
      throw ContractError("regressor: parameter arrays have the wrong size");
    }
    for (double v : layer.weights) {
      if (!std::isfinite(v)) throw ContractError("regressor: non-finite weight");
    }
    for (double v : layer.biases) {
      if (!std::isfinite(v)) throw ContractError("regressor: non-finite bias");
    }
  }
}

double forward_pixel(const RegressorParams& params, std::array<double, 3> features) {
  Trace t;
  return forward(params, features, t);
}

Heatmap predict(const RegressorParams& params, const FeatureStack& stack, unsigned threads) {
  params.validate();
  constexpr float kLo = std::numeric_limits<float>::denorm_min();
  constexpr float kHi = 1.0f - std::numeric_limits<float>::epsilon() / 2.0f;
  Heatmap out(stack.width(), stack.height());
  parallel_for(stack.pixel_count(), threads, [&](std::size_t begin, std::size_t end) {
    Trace t;
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = std::clamp(static_cast<float>(forward(params, pixel_features(stack, i), t)), kLo, kHi);
    }
  });
  return out;
}

double loss(const RegressorParams& params, const FeatureStack& stack, const BinaryMask& mask,
            double gt_prominence) {
  params.validate();
  check_loss_inputs(stack, mask, gt_prominence);
  const RegionMeans m = region_means(params, stack, mask);
  const double di = m.inside - gt_prominence;
  return di * di + m.outside * m.outside;
}

LossGradient loss_and_grad(const RegressorParams& params, const FeatureStack& stack,
                           const BinaryMask& mask, double gt_prominence) {
  params.validate();
  check_loss_inputs(stack, mask, gt_prominence);
  const RegionMeans m = region_means(params, stack, mask);
  const double di = m.inside - gt_prominence;

  LossGradient out;
  out.loss = di * di + m.outside * m.outside;
  out.gradient = params;
  for (DenseLayer& l : out.gradient.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.biases.begin(), l.biases.end(), 0.0);
  }
  const double up_in = 2.0 * di / static_cast<double>(m.n_inside);
  const double up_out = 2.0 * m.outside / static_cast<double>(m.n_outside);
  Trace t;
  for (std::size_t i = 0; i < stack.pixel_count(); ++i) {
    const auto x = pixel_features(stack, i);
    forward(params, x, t);
    backward(params, x, t, mask[i] ? up_in : up_out, out.gradient);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("train: learning rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("train: Adam betas must lie in [0,1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("train: epsilon must be positive");
  if (epochs < 0) throw ValidationError("train: epochs must be non-negative");
}

void AdamState::step(RegressorParams& params, const RegressorParams& gradient, const TrainConfig& cfg) {
  std::vector<double> theta = params.flatten();
  const std::vector<double> g = gradient.flatten();
  if (theta.size() != first_.size() || g.size() != first_.size()) {
    throw ContractError("adam: state does not match parameter count");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    first_[i] = cfg.beta1 * first_[i] + (1.0 - cfg.beta1) * g[i];
    second_[i] = cfg.beta2 * second_[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = first_[i] / c1;
    const double v_hat = second_[i] / c2;
    theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
  params.assign(theta);
}

TrainResult train(std::span<const TrainingExample> examples, const TrainConfig& cfg) {
  cfg.validate();
  if (examples.empty()) throw ValidationError("train: no training examples");
  for (const TrainingExample& ex : examples) {
    if (!same_dims(ex.features, ex.mask)) {
      throw ValidationError("train: record '" + ex.id + "' mask does not match its features");
    }
    if (!(ex.prominence >= 0.0 && ex.prominence <= 1.0)) {
      throw ValidationError("train: record '" + ex.id + "' prominence outside [0,1]");
    }
    const std::size_t inside = ex.mask.count();
    if (inside == 0 || inside == ex.mask.size()) {
      throw ValidationError("train: record '" + ex.id + "' mask must have inside and outside pixels");
    }
  }

  TrainResult result;
  result.params = RegressorParams::glorot(cfg.seed);
  AdamState adam(result.params.parameter_count());

  std::uint64_t state = cfg.seed ^ 0x5DEECE66Dull;
  std::mt19937_64 rng(splitmix64(state));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    double total = 0.0;
    for (std::size_t idx : order) {
      const TrainingExample& ex = examples[idx];
      const LossGradient lg = loss_and_grad(result.params, ex.features, ex.mask, ex.prominence);
      total += lg.loss;
      adam.step(result.params, lg.gradient, cfg);
    }
    result.epoch_loss.push_back(total / static_cast<double>(examples.size()));
  }

  result.params.quantize();
  double total = 0.0;
  for (const TrainingExample& ex : examples) total += loss(result.params, ex.features, ex.mask, ex.prominence);
  result.final_loss = total / static_cast<double>(examples.size());
  return result;
}

TrainResult train(std::span<const ArtifactRecord> records, std::span<const FeatureStack> features,
                  const TrainConfig& cfg) {
  if (records.size() != features.size()) {
    throw ContractError("train: record and feature counts differ");
  }
  std::vector<TrainingExample> examples;
  examples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ArtifactRecord& rec = records[i];
    if (!rec.prominence) throw ValidationError("train: record '" + rec.id + "' has no prominence");
    if (rec.mask_path.empty()) throw ValidationError("train: record '" + rec.id + "' has no mask");
    examples.push_back({rec.id, features[i], load_mask(rec.mask_path), *rec.prominence});
  }
  return train(examples, cfg);
}

std::vector<std::uint8_t> encode_checkpoint(const RegressorParams& params) {
  params.validate();
  detail::ByteWriter w;
  w.raw("PROM", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.layers.size()));
  for (const DenseLayer& l : params.layers) {
    w.u32(static_cast<std::uint32_t>(l.inputs));
    w.u32(static_cast<std::uint32_t>(l.outputs));
  }
  for (const DenseLayer& l : params.layers) {
    for (double v : l.weights) w.f32(static_cast<float>(v));
    for (double v : l.biases) w.f32(static_cast<float>(v));
  }
  return w.take();
}

RegressorParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.magic("PROM")) throw FormatError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t n_layers = r.u32();
  if (n_layers == 0 || n_layers > 3) throw FormatError("checkpoint: bad layer count");
  RegressorParams p;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    if (in == 0 || out == 0 || in > kMaxWidth || out > kMaxWidth) {
      throw FormatError("checkpoint: bad layer dimensions");
    }
    p.layers.push_back(make_layer(in, out));
  }
  for (DenseLayer& l : p.layers) {
    for (double& v : l.weights) v = r.f32();
    for (double& v : l.biases) v = r.f32();
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  try {
    p.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

void save_checkpoint(const RegressorParams& params, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(params));
}

RegressorParams load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace promkit
