#pragma once

#include "antiadv/attacks.hpp"
#include "antiadv/dataset.hpp"
#include "antiadv/mlp.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace antiadv {

// Plain SGD by default; momentum is opt-in. Everything is seeded so a rerun
// reproduces the parameters bit for bit.
struct TrainConfig {
  long epochs = 60;
  long batch_size = 32;
  double learning_rate = 0.2;
  double weight_decay = 0.0;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  std::vector<Eigen::Index> hidden = {16, 16};

  void validate() const;
};

struct TrainResult {
  MlpParams params;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
};

MlpParams init_mlp(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
                   Eigen::Index classes, std::uint64_t seed);

TrainResult train_nominal(const Dataset& data, const TrainConfig& cfg);

// Adversarial training: every minibatch example is replaced by its
// white-box PGD perturbation against the current parameters before the
// gradient step. The inner attack is deterministic (zero-initialized PGD),
// so an eps of 0 reproduces nominal training exactly.
TrainResult train_adversarial(const Dataset& data, const TrainConfig& cfg,
                              const AttackSpec& attack);

double evaluate(const MlpParams& params, const Dataset& data);

}  // namespace antiadv
