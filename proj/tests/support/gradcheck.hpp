#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "promkit/regressor.hpp"
#include "support/generators.hpp"

namespace promkit::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences on every parameter. Relative error is taken against
// max(|a|, |n|, floor) so vanishing components compare absolutely.
inline GradCheck check_gradient(const RegressorParams& params, const FeatureStack& stack, const BinaryMask& mask,
                                double target, double h = 1e-4, double floor = 1e-6) {
  const std::vector<double> g = grad(params, stack, mask, target).flatten();
  std::vector<double> theta = params.flatten();
  RegressorParams probe = params;
  GradCheck out;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + h;
    probe.assign(theta);
    const double up = loss(probe, stack, mask, target);
    theta[k] = saved - h;
    probe.assign(theta);
    const double down = loss(probe, stack, mask, target);
    theta[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double rel = std::abs(g[k] - numeric) / std::max({std::abs(g[k]), std::abs(numeric), floor});
    if (rel > out.max_rel_error) out = {rel, k, g[k], numeric};
  }
  return out;
}

struct GradInstance {
  RegressorParams params;
  FeatureStack stack;
  BinaryMask mask;
  double target = 0.0;
};

// Smallest |pre-activation| of any hidden unit over all pixels.
inline double kink_margin(const RegressorParams& p, const FeatureStack& s) {
  double margin = INFINITY;
  for (std::size_t i = 0; i < s.pixel_count(); ++i) {
    std::vector<double> act = {s.dists[i], s.ssm_jup[i], s.bd_jup[i]};
    for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
      const DenseLayer& layer = p.layers[l];
      std::vector<double> next(layer.outputs);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        double z = layer.biases[o];
        for (std::size_t k = 0; k < layer.inputs; ++k) z += layer.weights[o * layer.inputs + k] * act[k];
        margin = std::min(margin, std::abs(z));
        next[o] = std::max(z, 0.0);
      }
      act = std::move(next);
    }
  }
  return margin;
}

// Glorot weights with small random biases. Instances with a hidden unit
// close enough to its kink for a +-h step to flip it are redrawn, since a
// central difference across a kink does not estimate the derivative.
inline GradInstance random_grad_instance(Rng& rng, std::size_t w = 6, std::size_t h = 6, double margin = 1e-3) {
  for (;;) {
    GradInstance inst;
    inst.params = RegressorParams::glorot(rng());
    for (DenseLayer& layer : inst.params.layers) {
      for (double& b : layer.biases) b = uniform(rng, -0.1, 0.1);
    }
    inst.stack = random_stack(w, h, rng);
    inst.mask = split_mask(w, h, rng);
    inst.target = uniform(rng);
    if (kink_margin(inst.params, inst.stack) >= margin) return inst;
  }
}

}  // namespace promkit::testing
