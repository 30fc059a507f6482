#pragma once

#include "antiadv/common.hpp"

#include <utility>
#include <vector>

namespace antiadv {

enum class Activation { Relu };

// Fully connected network: logits = W_L a_{L-1} + b_L with ReLU between
// layers. All parameters are finite 64-bit floats; dimensions must chain.
struct MlpParams {
  struct Layer {
    Mat weight;  // rows = fan_out, cols = fan_in
    Vec bias;
  };

  std::vector<Layer> layers;
  Activation activation = Activation::Relu;

  Eigen::Index input_dim() const {
    return layers.empty() ? 0 : layers.front().weight.cols();
  }
  Eigen::Index class_count() const {
    return layers.empty() ? 0 : layers.back().weight.rows();
  }

  void validate() const;
};

// Activations recorded by a forward pass, enough to run one backward pass.
struct ForwardCache {
  std::vector<Vec> inputs;  // inputs[l] = activation fed into layer l; inputs[0] = x
  std::vector<Vec> pre;     // pre[l] = W_l inputs[l] + b_l
  Vec logits;               // == pre.back()
};

Vec mlp_forward(const MlpParams& params, const Vec& x);
ForwardCache mlp_forward_cached(const MlpParams& params, const Vec& x);

// Numerically stabilized softmax (max subtraction).
Vec softmax(const Vec& logits);

// Returns (probabilities, cross-entropy loss for `label`). The loss is
// computed fused as logsumexp(logits) - logits[label].
std::pair<Vec, double> softmax_ce(const Vec& logits, Eigen::Index label);

// Exact reverse-mode gradient of the cross-entropy loss w.r.t. the input.
Vec input_gradient(const MlpParams& params, const Vec& x, Eigen::Index label);

// Backward-only variant reusing a cached forward pass.
Vec input_gradient_from_cache(const MlpParams& params, const ForwardCache& cache,
                              Eigen::Index label);

}  // namespace antiadv
