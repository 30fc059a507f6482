#pragma once

#include "antiadv/mlp.hpp"

#include <vector>

namespace antiadv {

enum class AntiMode { SignedGd, SingleStp, SingleGd };

// Settings of the input-space solver that is prepended to a classifier.
// signed-gd is the deployable layer: K signed gradient-descent steps of
// size alpha on the loss of the classifier's own pseudo-label. The two
// single-step modes exist for the closed-form robustness analysis and are
// driven by the theory module.
struct AntiAdvConfig {
  double alpha = 0.15;
  long k = 2;
  bool guard = true;  // accept a step only if it keeps the pseudo-label and lowers its loss
  AntiMode mode = AntiMode::SignedGd;
  double eps_g = 0.0;            // single-stp step size
  double alpha_g_over_L = 0.0;   // single-gd step size, already divided by L
  bool clip_unit_box = false;    // clamp x + gamma to [0, 1] (image-style inputs)

  void validate() const;
};

// Record of one forward pass through the layer: the accepted gamma iterates
// (always K+1 entries in signed-gd mode), the pseudo-label loss at each,
// and the exact number of network passes spent.
struct AntiAdvTrace {
  Eigen::Index pseudo_label = 0;
  std::vector<Vec> gamma;        // gamma[0] = 0
  std::vector<double> loss;      // pseudo-label loss at each accepted iterate
  long forward_passes = 0;
  long backward_passes = 0;
};

struct AntiAdvResult {
  Vec probs;
  AntiAdvTrace trace;
};

// argmax_i of the classifier's probabilities at x (equivalently its logits);
// ties go to the lowest class index.
Eigen::Index pseudo_label(const MlpParams& f, const Vec& x);

// The wrapped classifier: run cfg.k signed gradient-descent steps on the
// pseudo-label loss starting from gamma = 0, then classify x + gamma.
// Costs exactly (K+1) forward and K backward passes; the last candidate
// evaluation doubles as the output pass. Requires cfg.mode == SignedGd.
AntiAdvResult anti_forward(const MlpParams& f, const Vec& x, const AntiAdvConfig& cfg);

// Single STP update of the pseudo-label loss: the displacement among
// {+eps_g q, -eps_g q, 0} with the smallest loss. Ties prefer 0, then +.
// q must be a signed canonical basis vector.
Vec anti_single_stp(const MlpParams& f, const Vec& x, const Vec& q, double eps_g,
                    Eigen::Index label);

// Single gradient-descent update: gamma = -alpha_g_over_L * grad L(f(x), label).
Vec anti_single_gd(const MlpParams& f, const Vec& x, double alpha_g_over_L,
                   Eigen::Index label);

}  // namespace antiadv
