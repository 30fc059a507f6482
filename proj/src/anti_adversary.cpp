#include "antiadv/anti_adversary.hpp"

#include <cmath>

namespace antiadv {

void AntiAdvConfig::validate() const {
  switch (mode) {
    case AntiMode::SignedGd:
      if (alpha <= 0.0) throw ConfigError("AntiAdvConfig: alpha must be positive");
      if (k < 0) throw ConfigError("AntiAdvConfig: k must be non-negative");
      break;
    case AntiMode::SingleStp:
      if (eps_g < 0.0) throw ConfigError("AntiAdvConfig: eps_g must be non-negative");
      break;
    case AntiMode::SingleGd:
      if (alpha_g_over_L < 0.0)
        throw ConfigError("AntiAdvConfig: alpha_g_over_L must be non-negative");
      break;
  }
}

Eigen::Index pseudo_label(const MlpParams& f, const Vec& x) {
  return argmax_lowest(mlp_forward(f, x));
}

namespace {

Vec clip_unit(const Vec& v) { return v.cwiseMax(0.0).cwiseMin(1.0); }

void check_finite_iterate(const Vec& v, long k) {
  if (!v.allFinite())
    throw Error("anti_forward: non-finite iterate at step " + std::to_string(k));
}

}  // namespace

AntiAdvResult anti_forward(const MlpParams& f, const Vec& x, const AntiAdvConfig& cfg) {
  cfg.validate();
  if (cfg.mode != AntiMode::SignedGd)
    throw ConfigError("anti_forward: requires signed-gd mode");

  AntiAdvResult r;
  AntiAdvTrace& trace = r.trace;

  // Pseudo-label pass; also yields the loss at gamma^0 = 0.
  ForwardCache cache = mlp_forward_cached(f, x);
  trace.forward_passes = 1;
  const Eigen::Index y_hat = argmax_lowest(cache.logits);
  trace.pseudo_label = y_hat;

  Vec probs;
  double loss;
  std::tie(probs, loss) = softmax_ce(cache.logits, y_hat);

  Vec gamma = Vec::Zero(x.size());
  trace.gamma.push_back(gamma);
  trace.loss.push_back(loss);

  for (long k = 0; k < cfg.k; ++k) {
    const Vec grad = input_gradient_from_cache(f, cache, y_hat);
    trace.backward_passes += 1;

    Vec cand_gamma = gamma - cfg.alpha * sign_of(grad);
    Vec cand_point = x + cand_gamma;
    if (cfg.clip_unit_box) {
      cand_point = clip_unit(cand_point);
      cand_gamma = cand_point - x;
    }
    check_finite_iterate(cand_point, k);

    ForwardCache cand_cache = mlp_forward_cached(f, cand_point);
    trace.forward_passes += 1;
    check_finite_iterate(cand_cache.logits, k);

    Vec cand_probs;
    double cand_loss;
    std::tie(cand_probs, cand_loss) = softmax_ce(cand_cache.logits, y_hat);

    const bool keeps_label = argmax_lowest(cand_cache.logits) == y_hat;
    const bool accept = !cfg.guard || (cand_loss < loss && keeps_label);
    if (accept) {
      gamma = std::move(cand_gamma);
      cache = std::move(cand_cache);
      probs = std::move(cand_probs);
      loss = cand_loss;
    }
    trace.gamma.push_back(gamma);
    trace.loss.push_back(loss);
  }

  r.probs = std::move(probs);
  return r;
}

Vec anti_single_stp(const MlpParams& f, const Vec& x, const Vec& q, double eps_g,
                    Eigen::Index label) {
  if (eps_g < 0.0) throw ConfigError("anti_single_stp: eps_g must be non-negative");
  if (q.size() != x.size()) throw DimensionError("anti_single_stp: direction size mismatch");
  Eigen::Index nonzero = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    ++nonzero;
    if (std::abs(q[i]) != 1.0)
      throw ConfigError("anti_single_stp: q must be a signed canonical basis vector");
  }
  if (nonzero != 1)
    throw ConfigError("anti_single_stp: q must have exactly one nonzero entry");

  const double loss0 = softmax_ce(mlp_forward(f, x), label).second;
  const double loss_plus = softmax_ce(mlp_forward(f, x + eps_g * q), label).second;
  const double loss_minus = softmax_ce(mlp_forward(f, x - eps_g * q), label).second;

  // Minimum of the three; ties resolved zero, then plus.
  if (loss0 <= loss_plus && loss0 <= loss_minus) return Vec::Zero(x.size());
  if (loss_plus <= loss_minus) return eps_g * q;
  return -eps_g * q;
}

Vec anti_single_gd(const MlpParams& f, const Vec& x, double alpha_g_over_L,
                   Eigen::Index label) {
  if (alpha_g_over_L < 0.0)
    throw ConfigError("anti_single_gd: alpha_g_over_L must be non-negative");
  return -alpha_g_over_L * input_gradient(f, x, label);
}

}  // namespace antiadv
