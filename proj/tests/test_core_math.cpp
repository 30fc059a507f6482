#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "antiadv/mlp.hpp"
#include "test_util.hpp"

#include <cmath>
#include <cstring>

using namespace antiadv;
using namespace antiadv::testutil;

namespace {

MlpParams fixture_232() {
  MlpParams p;
  MlpParams::Layer l1, l2;
  l1.weight.resize(3, 2);
  l1.weight << 1.0, 2.0, -1.0, 0.5, 0.25, -0.75;
  l1.bias.resize(3);
  l1.bias << 0.1, -0.2, 0.3;
  l2.weight.resize(2, 3);
  l2.weight << 0.5, -1.0, 2.0, 1.5, 0.6, -0.3;
  l2.bias.resize(2);
  l2.bias << 0.05, -0.05;
  p.layers = {l1, l2};
  return p;
}

}  // namespace

TEST_CASE("zero-weight network maps any input to zero logits") {
  MlpParams p;
  MlpParams::Layer l;
  l.weight = Mat::Zero(3, 4);
  l.bias = Vec::Zero(3);
  p.layers = {l};
  Rng rng(11);
  for (int i = 0; i < 5; ++i) {
    const Vec logits = mlp_forward(p, random_x(4, rng));
    CHECK(logits.isZero(0.0));
  }
}

TEST_CASE("identity single layer passes the input through") {
  MlpParams p;
  MlpParams::Layer l;
  l.weight = Mat::Identity(2, 2);
  l.bias = Vec::Zero(2);
  p.layers = {l};
  Vec x(2);
  x << 1.0, 2.0;
  const Vec logits = mlp_forward(p, x);
  CHECK(logits[0] == 1.0);
  CHECK(logits[1] == 2.0);
}

TEST_CASE("fixed 2-3-2 network matches a manual forward evaluation") {
  const MlpParams p = fixture_232();
  Vec x(2);
  x << 0.5, -0.5;

  // Independent scalar evaluation of the same weights.
  const double z1 = 1.0 * 0.5 + 2.0 * -0.5 + 0.1;
  const double z2 = -1.0 * 0.5 + 0.5 * -0.5 + -0.2;
  const double z3 = 0.25 * 0.5 + -0.75 * -0.5 + 0.3;
  const double a1 = z1 > 0 ? z1 : 0.0, a2 = z2 > 0 ? z2 : 0.0, a3 = z3 > 0 ? z3 : 0.0;
  const double logit0 = 0.5 * a1 + -1.0 * a2 + 2.0 * a3 + 0.05;
  const double logit1 = 1.5 * a1 + 0.6 * a2 + -0.3 * a3 + -0.05;

  const Vec logits = mlp_forward(p, x);
  CHECK(logits[0] == doctest::Approx(logit0).epsilon(1e-15));
  CHECK(logits[1] == doctest::Approx(logit1).epsilon(1e-15));
  CHECK(logits[0] == doctest::Approx(1.65).epsilon(1e-12));
  CHECK(logits[1] == doctest::Approx(-0.29).epsilon(1e-12));
}

TEST_CASE("mlp_forward rejects dimension mismatches") {
  const MlpParams p = fixture_232();
  CHECK_THROWS_AS(mlp_forward(p, Vec::Zero(3)), DimensionError);
}

TEST_CASE("softmax_ce on symmetric logits") {
  Vec logits(2);
  logits << 0.0, 0.0;
  const auto [probs, loss] = softmax_ce(logits, 0);
  CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("softmax_ce stays accurate for well-separated logits") {
  Vec logits(2);
  logits << 10.0, -10.0;
  const auto [probs, loss] = softmax_ce(logits, 0);
  // High-precision route: -log sigma(20) = log1p(exp(-20)).
  const double expected = std::log1p(std::exp(-20.0));
  CHECK(loss == doctest::Approx(expected).epsilon(1e-6));
  CHECK(loss == doctest::Approx(2.061153622e-9).epsilon(1e-6));
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("uniform logits give loss ln k") {
  for (const Eigen::Index k : {2, 3, 7, 11}) {
    const Vec logits = Vec::Constant(k, 0.73);
    const auto [probs, loss] = softmax_ce(logits, k - 1);
    CHECK(loss == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-14));
  }
}

TEST_CASE("softmax_ce rejects out-of-range labels") {
  Vec logits(3);
  logits << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(softmax_ce(logits, 3), DimensionError);
  CHECK_THROWS_AS(softmax_ce(logits, -1), DimensionError);
}

TEST_CASE("softmax normalization holds for random finite logits") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Vec logits(4);
    for (int j = 0; j < 4; ++j) logits[j] = 200.0 * (rng.uniform01() - 0.5);
    CHECK(std::abs(softmax(logits).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("linear softmax gradient matches the closed form") {
  // Single linear layer: grad_x = W^T (p - e_y).
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    MlpParams p = random_mlp({4, 3}, 100 + trial);
    const Vec x = random_x(4, rng);
    const Eigen::Index y = static_cast<Eigen::Index>(rng.uniform_index(3));

    const Vec logits = p.layers[0].weight * x + p.layers[0].bias;
    Vec residual = softmax(logits);
    residual[y] -= 1.0;
    const Vec expected = p.layers[0].weight.transpose() * residual;

    const Vec grad = input_gradient(p, x, y);
    CHECK(max_rel_err(grad, expected) < 1e-12);
  }
}

TEST_CASE("input gradient matches central finite differences") {
  Rng rng(33);
  int done = 0;
  std::uint64_t param_seed = 500;
  while (done < 25) {
    const MlpParams p = random_mlp({3, 8, 8, 3}, param_seed++, 0.8);
    const Vec x = random_x(3, rng);
    if (!fd_safe(p, x)) continue;
    const Eigen::Index y = static_cast<Eigen::Index>(rng.uniform_index(3));
    const Vec analytic = input_gradient(p, x, y);
    const Vec numeric = fd_input_gradient(p, x, y);
    CHECK(max_rel_err(analytic, numeric) < 1e-4);
    ++done;
  }
}

TEST_CASE("constant-output network has zero input gradient") {
  MlpParams p;
  MlpParams::Layer l1, l2;
  l1.weight = Mat::Zero(5, 2);
  l1.bias = Vec::Constant(5, 0.7);
  l2.weight = Mat::Zero(3, 5);
  l2.bias.resize(3);
  l2.bias << 0.3, -0.1, 0.2;
  p.layers = {l1, l2};
  Rng rng(8);
  const Vec grad = input_gradient(p, random_x(2, rng), 1);
  CHECK(grad.isZero(0.0));
}

TEST_CASE("forward and gradient are bit-deterministic") {
  const MlpParams p = fixture_232();
  Vec x(2);
  x << 0.31, -0.64;
  const Vec a1 = mlp_forward(p, x);
  const Vec a2 = mlp_forward(p, x);
  CHECK(std::memcmp(a1.data(), a2.data(), sizeof(double) * a1.size()) == 0);
  const Vec g1 = input_gradient(p, x, 0);
  const Vec g2 = input_gradient(p, x, 0);
  CHECK(std::memcmp(g1.data(), g2.data(), sizeof(double) * g1.size()) == 0);
}

TEST_CASE("argmax tie-break picks the lowest index") {
  Vec v(4);
  v << 0.5, 0.5, 0.2, 0.5;
  CHECK(argmax_lowest(v) == 0);
}

TEST_CASE("sign convention maps zero to zero") {
  Vec v(3);
  v << -2.0, 0.0, 5.0;
  const Vec s = sign_of(v);
  CHECK(s[0] == -1.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == 1.0);
}
