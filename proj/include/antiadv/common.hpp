#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace antiadv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Base error for everything raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or size of an input does not match what an operation expects.
struct DimensionError : Error {
  using Error::Error;
};

// Invalid configuration value (bad mode, negative count, unknown name, ...).
struct ConfigError : Error {
  using Error::Error;
};

// A closed-form bound was requested outside the regime where it holds.
struct RegimeError : Error {
  using Error::Error;
};

// A metered oracle was asked to evaluate past its query budget.
struct BudgetError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
  DivergenceError(const std::string& msg, long epoch_index)
      : Error(msg), epoch(epoch_index) {}
  long epoch;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw DimensionError(std::string(what) + ": non-finite entries");
}

// Probability vectors carry entries in [0,1] summing to one within 1e-9.
inline void require_prob_vec(const Vec& p) {
  if (p.size() == 0) throw DimensionError("probability vector is empty");
  if (p.minCoeff() < -1e-12 || p.maxCoeff() > 1.0 + 1e-12)
    throw DimensionError("probability vector has entries outside [0, 1]");
  if (std::abs(p.sum() - 1.0) > 1e-9)
    throw DimensionError("probability vector does not sum to one");
}

// Lowest-index argmax; the tie rule used everywhere in this project.
inline Eigen::Index argmax_lowest(const Vec& v) {
  if (v.size() == 0) throw DimensionError("argmax of empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Elementwise sign with sign(0) = 0.
inline Vec sign_of(const Vec& v) {
  Vec s(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    s[i] = v[i] > 0.0 ? 1.0 : (v[i] < 0.0 ? -1.0 : 0.0);
  return s;
}

// Deterministic random source. All sampling is hand-rolled on top of
// mt19937_64 so that streams are bit-identical across platforms and
// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    // mt19937_64 per the C++ standard; identical output everywhere.
    return state_();
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n) via rejection sampling.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw ConfigError("uniform_index: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  // Standard normal via Box-Muller (the second value of each pair is cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  Vec normal_vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stable 64-bit mix for deriving per-sample / per-trial seeds from a base
// seed, so results do not depend on worker count or scheduling.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t x = base + 0x9E3779B97F4A7C15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

}  // namespace antiadv
