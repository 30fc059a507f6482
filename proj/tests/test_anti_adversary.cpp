#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "antiadv/anti_adversary.hpp"
#include "antiadv/train.hpp"
#include "test_util.hpp"

#include <cstring>

using namespace antiadv;
using namespace antiadv::testutil;

namespace {

MlpParams moons_model() {
  const Dataset data = make_dataset("two-moons", 300, 0.1, 7);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.3;
  cfg.seed = 1;
  return train_nominal(data, cfg).params;
}

}  // namespace

TEST_CASE("pseudo_label follows the lowest-index argmax") {
  MlpParams p;
  MlpParams::Layer l;
  l.weight = Mat::Zero(2, 2);
  l.bias = Vec::Zero(2);  // both probabilities 0.5
  p.layers = {l};
  Vec x(2);
  x << 0.3, -0.2;
  CHECK(pseudo_label(p, x) == 0);

  l.bias << 0.0, 1.0;  // class 1 wins
  p.layers = {l};
  CHECK(pseudo_label(p, x) == 1);
}

TEST_CASE("pseudo_label agrees with an independent recount on a trained model") {
  const MlpParams f = moons_model();
  const Dataset data = make_dataset("two-moons", 40, 0.1, 19);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Vec logits = mlp_forward(f, data.sample(i));
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < logits.size(); ++j)
      if (logits[j] > logits[best]) best = j;
    CHECK(pseudo_label(f, data.sample(i)) == best);
  }
}

TEST_CASE("k zero leaves the probabilities bit-identical to the base model") {
  const MlpParams f = moons_model();
  AntiAdvConfig cfg;
  cfg.k = 0;
  cfg.alpha = 0.15;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_x(2, rng);
    const AntiAdvResult r = anti_forward(f, x, cfg);
    const Vec base = softmax(mlp_forward(f, x));
    CHECK(std::memcmp(r.probs.data(), base.data(), sizeof(double) * base.size()) == 0);
    CHECK(r.trace.gamma.size() == 1);
    CHECK(r.trace.forward_passes == 1);
    CHECK(r.trace.backward_passes == 0);
  }
}

TEST_CASE("guarded output keeps the pseudo-label on every input") {
  const MlpParams f = moons_model();
  AntiAdvConfig cfg;
  cfg.k = 2;
  cfg.alpha = 0.15;
  cfg.guard = true;
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Vec x = random_x(2, rng);
    const AntiAdvResult r = anti_forward(f, x, cfg);
    CHECK(argmax_lowest(r.probs) == pseudo_label(f, x));
  }
}

TEST_CASE("guarded loss trace is non-increasing") {
  const MlpParams f = moons_model();
  AntiAdvConfig cfg;
  cfg.k = 5;
  cfg.alpha = 0.1;
  cfg.guard = true;
  Rng rng(61);
  for (int i = 0; i < 30; ++i) {
    const AntiAdvResult r = anti_forward(f, random_x(2, rng), cfg);
    for (std::size_t k = 1; k < r.trace.loss.size(); ++k)
      CHECK(r.trace.loss[k] <= r.trace.loss[k - 1]);
  }
}

TEST_CASE("single signed step matches a finite-difference sign oracle") {
  const MlpParams f = moons_model();
  AntiAdvConfig cfg;
  cfg.k = 1;
  cfg.alpha = 0.15;
  cfg.guard = false;
  Rng rng(13);
  int checked = 0;
  while (checked < 10) {
    const Vec x = random_x(2, rng);
    if (!fd_safe(f, x)) continue;
    const Eigen::Index y_hat = pseudo_label(f, x);
    const Vec fd = fd_input_gradient(f, x, y_hat);
    // Skip coordinates whose gradient is too small to trust the sign.
    if (fd.cwiseAbs().minCoeff() < 1e-6) continue;

    const AntiAdvResult r = anti_forward(f, x, cfg);
    const Vec expected_gamma = -0.15 * sign_of(fd);
    CHECK(r.trace.gamma.size() == 2);
    for (Eigen::Index j = 0; j < 2; ++j)
      CHECK(r.trace.gamma[1][j] == doctest::Approx(expected_gamma[j]).epsilon(1e-12));

    // Output equals a fresh evaluation at the shifted point.
    const Vec reeval = softmax(mlp_forward(f, x + r.trace.gamma[1]));
    CHECK(std::memcmp(r.probs.data(), reeval.data(), sizeof(double) * reeval.size()) == 0);
    ++checked;
  }
}

TEST_CASE("trace accounting is exactly K+1 forwards and K backwards") {
  const MlpParams f = moons_model();
  Rng rng(17);
  for (const long k : {0L, 1L, 2L, 3L, 7L}) {
    for (const bool guard : {false, true}) {
      AntiAdvConfig cfg;
      cfg.k = k;
      cfg.alpha = 0.15;
      cfg.guard = guard;
      const AntiAdvResult r = anti_forward(f, random_x(2, rng), cfg);
      CHECK(r.trace.forward_passes == k + 1);
      CHECK(r.trace.backward_passes == k);
      CHECK(r.trace.gamma.size() == static_cast<std::size_t>(k) + 1);
      CHECK(r.trace.loss.size() == static_cast<std::size_t>(k) + 1);
    }
  }
}

TEST_CASE("unit-box clipping keeps shifted points inside [0, 1]") {
  const MlpParams f = moons_model();
  AntiAdvConfig cfg;
  cfg.k = 3;
  cfg.alpha = 0.5;
  cfg.guard = false;
  cfg.clip_unit_box = true;
  Vec x(2);
  x << 0.05, 0.95;
  const AntiAdvResult r = anti_forward(f, x, cfg);
  const Vec shifted = x + r.trace.gamma.back();
  CHECK(shifted.minCoeff() >= 0.0);
  CHECK(shifted.maxCoeff() <= 1.0);
}

TEST_CASE("single STP update with zero step returns zero") {
  const MlpParams f = moons_model();
  Vec q = Vec::Zero(2);
  q[0] = 1.0;
  Vec x(2);
  x << 0.2, -0.4;
  const Vec gamma = anti_single_stp(f, x, q, 0.0, pseudo_label(f, x));
  CHECK(gamma.isZero(0.0));
}

TEST_CASE("single STP update picks the descending candidate") {
  // Linear model: loss in +e0 strictly increases, in -e0 strictly decreases.
  MlpParams p;
  MlpParams::Layer l;
  l.weight.resize(2, 2);
  l.weight << 1.0, 0.0, -1.0, 0.0;  // logit margin 2*x0
  l.bias = Vec::Zero(2);
  p.layers = {l};
  Vec x(2);
  x << 0.5, 0.0;  // pseudo-label 0; loss decreases as x0 grows
  Vec q = Vec::Zero(2);
  q[0] = 1.0;
  const Vec gamma = anti_single_stp(p, x, q, 0.1, 0);
  CHECK(gamma[0] == doctest::Approx(0.1).epsilon(1e-15));

  // Flip the pseudo-label target: now the loss decreases toward -e0.
  const Vec gamma_flipped = anti_single_stp(p, x, q, 0.1, 1);
  CHECK(gamma_flipped[0] == doctest::Approx(-0.1).epsilon(1e-15));
}

TEST_CASE("single STP update equals brute-force enumeration on a trained model") {
  const MlpParams f = moons_model();
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = random_x(2, rng);
    const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_index(2));
    Vec q = Vec::Zero(2);
    q[i] = 1.0;
    const double eps_g = rng.uniform(0.01, 0.3);
    const Eigen::Index label = pseudo_label(f, x);

    const Vec gamma = anti_single_stp(f, x, q, eps_g, label);

    // Independent enumeration of the three candidates with the tie rule.
    const double l0 = softmax_ce(mlp_forward(f, x), label).second;
    const double lp = softmax_ce(mlp_forward(f, x + eps_g * q), label).second;
    const double lm = softmax_ce(mlp_forward(f, x - eps_g * q), label).second;
    Vec expected = Vec::Zero(2);
    if (!(l0 <= lp && l0 <= lm)) expected = lp <= lm ? Vec(eps_g * q) : Vec(-eps_g * q);
    CHECK(std::memcmp(gamma.data(), expected.data(), sizeof(double) * 2) == 0);

    const double achieved = softmax_ce(mlp_forward(f, x + gamma), label).second;
    CHECK(achieved <= std::min({l0, lp, lm}) + 1e-15);
  }
}

TEST_CASE("single STP rejects malformed directions") {
  const MlpParams f = moons_model();
  Vec x(2);
  x << 0.1, 0.2;
  Vec bad(2);
  bad << 0.5, 0.0;
  CHECK_THROWS_AS(anti_single_stp(f, x, bad, 0.1, 0), ConfigError);
  Vec two(2);
  two << 1.0, 1.0;
  CHECK_THROWS_AS(anti_single_stp(f, x, two, 0.1, 0), ConfigError);
}

TEST_CASE("single gradient-descent update matches the closed form") {
  // Linear softmax model has gradient W^T (p - e_y).
  const MlpParams p = random_mlp({3, 2}, 77);
  Rng rng(31);
  const Vec x = random_x(3, rng);
  const Eigen::Index label = 0;
  const double step = 0.37;

  const Vec logits = p.layers[0].weight * x + p.layers[0].bias;
  Vec residual = softmax(logits);
  residual[label] -= 1.0;
  const Vec expected = -step * (p.layers[0].weight.transpose() * residual);

  const Vec gamma = anti_single_gd(p, x, step, label);
  CHECK(max_rel_err(gamma, expected) < 1e-12);

  // Norm scales exactly with the step size.
  const Vec grad = input_gradient(p, x, label);
  CHECK(gamma.norm() == doctest::Approx(step * grad.norm()).epsilon(1e-12));

  CHECK(anti_single_gd(p, x, 0.0, label).isZero(0.0));
}

TEST_CASE("non-finite intermediates are reported with the iterate index") {
  // A gradient step of overflow scale drives the shifted logits to infinity
  // while the starting point itself is perfectly healthy.
  MlpParams p;
  MlpParams::Layer l;
  l.weight.resize(2, 2);
  l.weight << 1.5, 1.5, -1.5, -1.5;
  l.bias = Vec::Zero(2);
  p.layers = {l};
  Vec x(2);
  x << 0.3, 0.4;
  AntiAdvConfig cfg;
  cfg.alpha = 1e308;
  cfg.k = 3;
  cfg.guard = false;
  try {
    anti_forward(p, x, cfg);
    FAIL("expected a non-finite iterate error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("anti_forward validates its configuration") {
  const MlpParams f = moons_model();
  Vec x(2);
  x << 0.0, 0.0;
  AntiAdvConfig cfg;
  cfg.mode = AntiMode::SingleStp;
  CHECK_THROWS_AS(anti_forward(f, x, cfg), ConfigError);
  cfg.mode = AntiMode::SignedGd;
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(anti_forward(f, x, cfg), ConfigError);
  cfg.alpha = 0.15;
  cfg.k = -1;
  CHECK_THROWS_AS(anti_forward(f, x, cfg), ConfigError);
}
