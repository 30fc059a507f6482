#include "antiadv/mlp.hpp"

#include <cmath>

namespace antiadv {

void MlpParams::validate() const {
  if (layers.empty()) throw DimensionError("MlpParams: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rows() <= 0 || layer.weight.cols() <= 0)
      throw DimensionError("MlpParams: layer " + std::to_string(l) + " has empty weight");
    if (layer.bias.size() != layer.weight.rows())
      throw DimensionError("MlpParams: layer " + std::to_string(l) + " bias size mismatch");
    if (!all_finite(layer.weight) || !all_finite(layer.bias))
      throw DimensionError("MlpParams: layer " + std::to_string(l) + " has non-finite entries");
    if (l + 1 < layers.size() && layers[l + 1].weight.cols() != layer.weight.rows())
      throw DimensionError("MlpParams: layers " + std::to_string(l) + " -> " +
                           std::to_string(l + 1) + " do not chain");
  }
}

namespace {

void check_input(const MlpParams& params, const Vec& x) {
  if (params.layers.empty()) throw DimensionError("mlp_forward: empty network");
  if (x.size() != params.input_dim())
    throw DimensionError("mlp_forward: input has dimension " + std::to_string(x.size()) +
                         ", network expects " + std::to_string(params.input_dim()));
}

inline Vec relu(const Vec& z) { return z.cwiseMax(0.0); }

}  // namespace

Vec mlp_forward(const MlpParams& params, const Vec& x) {
  check_input(params, x);
  Vec a = x;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    Vec z = params.layers[l].weight * a + params.layers[l].bias;
    a = (l == last) ? std::move(z) : relu(z);
  }
  return a;
}

ForwardCache mlp_forward_cached(const MlpParams& params, const Vec& x) {
  check_input(params, x);
  ForwardCache cache;
  cache.inputs.reserve(params.layers.size());
  cache.pre.reserve(params.layers.size());
  Vec a = x;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    cache.inputs.push_back(a);
    Vec z = params.layers[l].weight * a + params.layers[l].bias;
    cache.pre.push_back(z);
    a = (l == last) ? std::move(z) : relu(z);
  }
  cache.logits = a;
  return cache;
}

Vec softmax(const Vec& logits) {
  if (logits.size() == 0) throw DimensionError("softmax: empty logits");
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

std::pair<Vec, double> softmax_ce(const Vec& logits, Eigen::Index label) {
  if (label < 0 || label >= logits.size())
    throw DimensionError("softmax_ce: label " + std::to_string(label) +
                         " out of range for " + std::to_string(logits.size()) + " classes");
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  const double sum = e.sum();
  Vec probs = e / sum;
  // loss = logsumexp(logits) - logits[label]; never takes log of a tiny prob.
  const double loss = std::log(sum) + m - logits[label];
  return {std::move(probs), loss};
}

Vec input_gradient_from_cache(const MlpParams& params, const ForwardCache& cache,
                              Eigen::Index label) {
  const Eigen::Index k = params.class_count();
  if (label < 0 || label >= k)
    throw DimensionError("input_gradient: label out of range");
  Vec delta = softmax(cache.logits);
  delta[label] -= 1.0;
  // Walk layers backwards; ReLU subgradient at 0 is taken as 0.
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    Vec g = params.layers[l].weight.transpose() * delta;
    if (l == 0) return g;
    const Vec& z = cache.pre[l - 1];
    delta = g.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
  }
  throw DimensionError("input_gradient: empty network");
}

Vec input_gradient(const MlpParams& params, const Vec& x, Eigen::Index label) {
  const ForwardCache cache = mlp_forward_cached(params, x);
  return input_gradient_from_cache(params, cache, label);
}

}  // namespace antiadv
