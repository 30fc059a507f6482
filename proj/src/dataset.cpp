#include "antiadv/dataset.hpp"

#include <cmath>
#include <numbers>

namespace antiadv {

namespace {

constexpr double kPi = std::numbers::pi;

Vec two_gaussians_point(int label, double noise, Rng& rng) {
  const double cx = label == 0 ? -0.5 : 0.5;
  const double cy = label == 0 ? -0.5 : 0.5;
  Vec p(2);
  p << cx + noise * rng.normal(), cy + noise * rng.normal();
  return p;
}

Vec two_moons_point(int label, double noise, Rng& rng) {
  const double t = rng.uniform(0.0, kPi);
  double x, y;
  if (label == 0) {
    x = std::cos(t);
    y = std::sin(t);
  } else {
    x = 1.0 - std::cos(t);
    y = 0.5 - std::sin(t);
  }
  // Map the clean crescents from x in [-1,2], y in [-0.5,1] onto [-1,1]^2.
  Vec p(2);
  p << (x - 0.5) / 1.5 + noise * rng.normal(), (y - 0.25) / 0.75 + noise * rng.normal();
  return p;
}

Vec rings_point(int label, double noise, Rng& rng) {
  const double radius = (label == 0 ? 0.4 : 0.85) + noise * rng.normal();
  const double theta = rng.uniform(0.0, 2.0 * kPi);
  Vec p(2);
  p << radius * std::cos(theta), radius * std::sin(theta);
  return p;
}

}  // namespace

Dataset make_dataset(const std::string& name, Eigen::Index m, double noise,
                     std::uint64_t seed) {
  if (m < 2) throw ConfigError("make_dataset: need at least 2 samples");
  if (noise < 0.0) throw ConfigError("make_dataset: noise must be non-negative");

  Vec (*gen)(int, double, Rng&) = nullptr;
  if (name == "two-gaussians") gen = two_gaussians_point;
  else if (name == "two-moons") gen = two_moons_point;
  else if (name == "rings") gen = rings_point;
  else throw ConfigError("make_dataset: unknown dataset name '" + name + "'");

  Dataset data;
  data.samples.resize(m, 2);
  data.labels.resize(static_cast<std::size_t>(m));
  data.class_count = 2;
  data.name = name;
  data.noise = noise;
  data.seed = seed;

  Rng rng(seed);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int label = static_cast<int>(i % 2);
    data.samples.row(i) = gen(label, noise, rng).transpose();
    data.labels[static_cast<std::size_t>(i)] = label;
  }
  return data;
}

}  // namespace antiadv
