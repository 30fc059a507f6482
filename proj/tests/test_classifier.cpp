#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "antiadv/checkpoint.hpp"
#include "antiadv/train.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

using namespace antiadv;

namespace {

bool same_params(const MlpParams& a, const MlpParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].weight.rows() != b.layers[l].weight.rows() ||
        a.layers[l].weight.cols() != b.layers[l].weight.cols())
      return false;
    if (std::memcmp(a.layers[l].weight.data(), b.layers[l].weight.data(),
                    sizeof(double) * a.layers[l].weight.size()) != 0)
      return false;
    if (std::memcmp(a.layers[l].bias.data(), b.layers[l].bias.data(),
                    sizeof(double) * a.layers[l].bias.size()) != 0)
      return false;
  }
  return true;
}

TrainConfig small_train() {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.3;
  cfg.seed = 1;
  cfg.hidden = {16, 16};
  return cfg;
}

}  // namespace

TEST_CASE("two-gaussians with zero noise repeats the class means exactly") {
  const Dataset data = make_dataset("two-gaussians", 10, 0.0, 3);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Vec x = data.sample(i);
    if (data.labels[static_cast<std::size_t>(i)] == 0) {
      CHECK(x[0] == -0.5);
      CHECK(x[1] == -0.5);
    } else {
      CHECK(x[0] == 0.5);
      CHECK(x[1] == 0.5);
    }
  }
}

TEST_CASE("dataset regeneration is bit-identical") {
  for (const char* name : {"two-gaussians", "two-moons", "rings"}) {
    const Dataset a = make_dataset(name, 101, 0.15, 42);
    const Dataset b = make_dataset(name, 101, 0.15, 42);
    CHECK(std::memcmp(a.samples.data(), b.samples.data(),
                      sizeof(double) * a.samples.size()) == 0);
    CHECK(a.labels == b.labels);
  }
}

TEST_CASE("dataset classes are balanced to within one sample") {
  for (const Eigen::Index m : {10, 11, 201}) {
    const Dataset data = make_dataset("two-moons", m, 0.1, 9);
    long count0 = 0;
    for (const int label : data.labels) count0 += label == 0 ? 1 : 0;
    const long count1 = static_cast<long>(data.labels.size()) - count0;
    CHECK(std::abs(count0 - count1) <= 1);
  }
}

TEST_CASE("unknown dataset name is rejected") {
  CHECK_THROWS_AS(make_dataset("spiral", 10, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(make_dataset("two-moons", 1, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(make_dataset("two-moons", 10, -0.1, 1), ConfigError);
}

TEST_CASE("two-moons fixture trains to high accuracy") {
  const Dataset data = make_dataset("two-moons", 200, 0.1, 7);
  const TrainResult result = train_nominal(data, small_train());
  CHECK(result.train_accuracy >= 0.95);
}

TEST_CASE("linearly separable two-gaussians reach 99 percent") {
  const Dataset data = make_dataset("two-gaussians", 200, 0.1, 5);
  const TrainResult result = train_nominal(data, small_train());
  CHECK(result.train_accuracy >= 0.99);
}

TEST_CASE("zero epochs returns the initialization unchanged") {
  const Dataset data = make_dataset("two-moons", 50, 0.1, 7);
  TrainConfig cfg = small_train();
  cfg.epochs = 0;
  const TrainResult result = train_nominal(data, cfg);
  const MlpParams init = init_mlp(data.dim(), cfg.hidden, data.class_count, cfg.seed);
  CHECK(same_params(result.params, init));
}

TEST_CASE("training is reproducible from the seed") {
  const Dataset data = make_dataset("two-moons", 120, 0.1, 7);
  const TrainConfig cfg = small_train();
  const TrainResult a = train_nominal(data, cfg);
  const TrainResult b = train_nominal(data, cfg);
  CHECK(same_params(a.params, b.params));
}

TEST_CASE("momentum is opt-in, changes the trajectory, and stays reproducible") {
  const Dataset data = make_dataset("two-moons", 120, 0.1, 7);
  TrainConfig cfg = small_train();
  cfg.epochs = 10;
  const TrainResult plain = train_nominal(data, cfg);
  cfg.momentum = 0.9;
  const TrainResult momentum_a = train_nominal(data, cfg);
  const TrainResult momentum_b = train_nominal(data, cfg);
  CHECK(!same_params(plain.params, momentum_a.params));
  CHECK(same_params(momentum_a.params, momentum_b.params));
}

TEST_CASE("adversarial training with zero eps reproduces nominal training") {
  const Dataset data = make_dataset("two-moons", 80, 0.1, 7);
  const TrainConfig cfg = small_train();
  AttackSpec inner;
  inner.eps = 0.0;
  inner.step = 0.0;
  inner.budget = 10;
  const TrainResult nominal = train_nominal(data, cfg);
  const TrainResult adversarial = train_adversarial(data, cfg, inner);
  CHECK(same_params(nominal.params, adversarial.params));
}

TEST_CASE("adversarial training is reproducible and more robust under PGD") {
  const Dataset data = make_dataset("two-moons", 400, 0.1, 7);
  TrainConfig cfg = small_train();
  cfg.epochs = 60;
  AttackSpec inner;
  inner.eps = 0.1;
  inner.step = 0.025;
  inner.budget = 10;

  const TrainResult robust_a = train_adversarial(data, cfg, inner);
  const TrainResult robust_b = train_adversarial(data, cfg, inner);
  CHECK(same_params(robust_a.params, robust_b.params));

  const TrainResult nominal = train_nominal(data, cfg);

  AttackSpec eval_attack;
  eval_attack.eps = 0.1;
  eval_attack.step = 0.025;
  eval_attack.budget = 20;

  const Dataset test = make_dataset("two-moons", 200, 0.1, 1007);
  long nominal_robust = 0, at_robust = 0;
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    const Vec x = test.sample(i);
    const int y = test.labels[static_cast<std::size_t>(i)];
    nominal_robust += pgd_attack(nominal.params, x, y, eval_attack).success ? 0 : 1;
    at_robust += pgd_attack(robust_a.params, x, y, eval_attack).success ? 0 : 1;
  }
  CHECK(at_robust > nominal_robust);
}

TEST_CASE("divergent training reports the failing epoch") {
  const Dataset data = make_dataset("two-moons", 60, 0.1, 7);
  TrainConfig cfg = small_train();
  // lr * weight_decay > 2 multiplies every weight geometrically per batch,
  // so the loss reaches non-finite territory within a few epochs.
  cfg.learning_rate = 1000.0;
  cfg.weight_decay = 1000.0;
  cfg.epochs = 40;
  try {
    train_nominal(data, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch >= 0);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("evaluate matches an independent per-sample recount") {
  const Dataset data = make_dataset("two-moons", 150, 0.1, 7);
  const TrainResult result = train_nominal(data, small_train());

  long correct = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Vec logits = mlp_forward(result.params, data.sample(i));
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < logits.size(); ++j)
      if (logits[j] > logits[best]) best = j;
    if (best == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  CHECK(evaluate(result.params, data) ==
        doctest::Approx(static_cast<double>(correct) / static_cast<double>(data.size()))
            .epsilon(1e-15));
}

TEST_CASE("constant classifier scores one half on a balanced set") {
  MlpParams p;
  MlpParams::Layer l;
  l.weight = Mat::Zero(2, 2);
  l.bias.resize(2);
  l.bias << 1.0, 0.0;  // always predicts class 0
  p.layers = {l};
  const Dataset data = make_dataset("two-moons", 100, 0.1, 3);
  CHECK(evaluate(p, data) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  const Dataset data = make_dataset("two-moons", 60, 0.1, 7);
  const TrainResult result = train_nominal(data, small_train());

  const std::string path = "test_checkpoint_roundtrip.json";
  save_checkpoint(result.params, path, R"({"note":"fixture"})");
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(same_params(result.params, loaded.params));
  std::remove(path.c_str());
}

TEST_CASE("repeated checkpoint saves produce identical bytes") {
  const MlpParams p = init_mlp(2, {4}, 2, 9);
  save_checkpoint(p, "ckpt_a.json");
  save_checkpoint(p, "ckpt_b.json");
  std::ifstream fa("ckpt_a.json"), fb("ckpt_b.json");
  const std::string a((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string b((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(a == b);
  CHECK(!a.empty());
  std::remove("ckpt_a.json");
  std::remove("ckpt_b.json");
}
