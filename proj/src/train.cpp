#include "antiadv/train.hpp"

#include <cmath>
#include <numeric>

namespace antiadv {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("TrainConfig: epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be positive");
  if (learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("TrainConfig: momentum must be in [0,1)");
}

MlpParams init_mlp(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
                   Eigen::Index classes, std::uint64_t seed) {
  if (input_dim < 1 || classes < 2) throw ConfigError("init_mlp: bad dimensions");
  Rng rng(mix_seed(seed, 0x1817));
  MlpParams params;
  Eigen::Index fan_in = input_dim;
  std::vector<Eigen::Index> widths = hidden;
  widths.push_back(classes);
  for (Eigen::Index width : widths) {
    if (width < 1) throw ConfigError("init_mlp: layer width must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + width));
    MlpParams::Layer layer;
    layer.weight.resize(width, fan_in);
    for (Eigen::Index r = 0; r < width; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    layer.bias = Vec::Zero(width);
    params.layers.push_back(std::move(layer));
    fan_in = width;
  }
  params.validate();
  return params;
}

namespace {

struct Gradients {
  std::vector<Mat> weight;
  std::vector<Vec> bias;

  explicit Gradients(const MlpParams& params) {
    for (const auto& layer : params.layers) {
      weight.emplace_back(Mat::Zero(layer.weight.rows(), layer.weight.cols()));
      bias.emplace_back(Vec::Zero(layer.bias.size()));
    }
  }

  void reset() {
    for (auto& w : weight) w.setZero();
    for (auto& b : bias) b.setZero();
  }
};

// Accumulates parameter gradients for one example; returns its loss.
double backprop_example(const MlpParams& params, const Vec& x, Eigen::Index label,
                        Gradients& grads) {
  const ForwardCache cache = mlp_forward_cached(params, x);
  auto [probs, loss] = softmax_ce(cache.logits, label);
  Vec delta = std::move(probs);
  delta[label] -= 1.0;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    grads.weight[l].noalias() += delta * cache.inputs[l].transpose();
    grads.bias[l] += delta;
    if (l == 0) break;
    Vec g = params.layers[l].weight.transpose() * delta;
    delta = g.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

TrainResult run_training(const Dataset& data, const TrainConfig& cfg,
                         const std::optional<AttackSpec>& inner_attack) {
  cfg.validate();
  if (data.size() < 1) throw ConfigError("train: empty dataset");

  TrainResult result;
  result.params = init_mlp(data.dim(), cfg.hidden, data.class_count, cfg.seed);
  MlpParams& params = result.params;

  Rng shuffle_rng(mix_seed(cfg.seed, 0x5151));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  Gradients grads(params);
  std::optional<Gradients> velocity;
  if (cfg.momentum > 0.0) velocity.emplace(params);

  double epoch_loss = 0.0;
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates on the deterministic stream.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_index(i));
      std::swap(order[i - 1], order[j]);
    }

    epoch_loss = 0.0;
    for (Eigen::Index begin = 0; begin < data.size(); begin += cfg.batch_size) {
      const Eigen::Index end = std::min<Eigen::Index>(begin + cfg.batch_size, data.size());
      grads.reset();
      for (Eigen::Index b = begin; b < end; ++b) {
        const Eigen::Index idx = order[static_cast<std::size_t>(b)];
        Vec x = data.sample(idx);
        const Eigen::Index label = data.labels[static_cast<std::size_t>(idx)];
        if (inner_attack && inner_attack->eps > 0.0) {
          const AttackOutcome adv = pgd_attack(params, x, label, *inner_attack);
          x += adv.delta;
        }
        epoch_loss += backprop_example(params, x, label, grads);
      }
      const double scale = cfg.learning_rate / static_cast<double>(end - begin);
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Mat step_w = scale * grads.weight[l] +
                     cfg.learning_rate * cfg.weight_decay * params.layers[l].weight;
        Vec step_b = scale * grads.bias[l];
        if (velocity) {
          velocity->weight[l] = cfg.momentum * velocity->weight[l] + step_w;
          velocity->bias[l] = cfg.momentum * velocity->bias[l] + step_b;
          step_w = velocity->weight[l];
          step_b = velocity->bias[l];
        }
        params.layers[l].weight -= step_w;
        params.layers[l].bias -= step_b;
      }
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("training diverged (non-finite loss) at epoch " +
                                std::to_string(epoch),
                            epoch);
  }

  result.final_loss = epoch_loss;
  result.train_accuracy = evaluate(params, data);
  return result;
}

}  // namespace

TrainResult train_nominal(const Dataset& data, const TrainConfig& cfg) {
  return run_training(data, cfg, std::nullopt);
}

TrainResult train_adversarial(const Dataset& data, const TrainConfig& cfg,
                              const AttackSpec& attack) {
  attack.validate();
  if (attack.norm != NormKind::LInf)
    throw ConfigError("train_adversarial: inner attack must be l-infinity PGD");
  return run_training(data, cfg, attack);
}

double evaluate(const MlpParams& params, const Dataset& data) {
  if (data.dim() != params.input_dim())
    throw DimensionError("evaluate: dataset dimension does not match the model");
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (argmax_lowest(mlp_forward(params, data.sample(i))) ==
        data.labels[static_cast<std::size_t>(i)])
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace antiadv
