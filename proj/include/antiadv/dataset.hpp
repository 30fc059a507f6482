#pragma once

#include "antiadv/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace antiadv {

// Synthetic 2-D classification problem. Samples are regenerated from
// (name, m, noise, seed) and never stored on disk; regeneration is
// bit-identical. Clean geometry lives in [-1, 1] per coordinate; noise
// tails may exceed that range and are not clipped.
struct Dataset {
  Mat samples;                 // m x n
  std::vector<int> labels;     // values < class_count
  int class_count = 0;
  std::string name;
  double noise = 0.0;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
  Vec sample(Eigen::Index i) const { return samples.row(i).transpose(); }
};

// name is one of "two-gaussians", "two-moons", "rings". Classes are
// balanced to within one sample, interleaved by index.
Dataset make_dataset(const std::string& name, Eigen::Index m, double noise,
                     std::uint64_t seed);

}  // namespace antiadv
