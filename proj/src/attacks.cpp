#include "antiadv/attacks.hpp"

#include <algorithm>
#include <cmath>

namespace antiadv {

void AttackSpec::validate() const {
  if (eps < 0.0) throw ConfigError("AttackSpec: eps must be non-negative");
  if (step < 0.0) throw ConfigError("AttackSpec: step must be non-negative");
  if (budget < 0) throw ConfigError("AttackSpec: budget must be non-negative");
}

double attack_loss(const QueryResponse& response, Eigen::Index y, LossKind kind) {
  const Vec& p = response.probs;
  if (p.size() == 0)
    throw ConfigError("attack_loss: score access required");
  if (p.size() == 1) return p[0];  // raw objective value
  if (y < 0 || y >= p.size()) throw DimensionError("attack_loss: label out of range");
  if (kind == LossKind::CrossEntropy)
    return -std::log(std::max(p[y], 1e-300));
  double best_other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < p.size(); ++j)
    if (j != y) best_other = std::max(best_other, p[j]);
  return best_other - p[y];
}

namespace {

// Clamp an l-infinity perturbation to the ball; identity when unconstrained.
Vec project_linf(const Vec& delta, double eps, bool unconstrained) {
  if (unconstrained) return delta;
  return delta.cwiseMax(-eps).cwiseMin(eps);
}

Vec project_l2(const Vec& delta, double eps, bool unconstrained) {
  if (unconstrained) return delta;
  const double norm = delta.norm();
  if (norm <= eps || norm == 0.0) return delta;
  return delta * (eps / norm);
}

}  // namespace

AttackOutcome simba(QueryOracle& oracle, const Vec& x, Eigen::Index y,
                    const AttackSpec& spec, SimbaVariant variant,
                    const QueryResponse& clean) {
  spec.validate();
  if (!spec.unconstrained && spec.norm != NormKind::LInf)
    throw ConfigError("simba: constrained mode supports the l-infinity ball only");

  const Eigen::Index n = x.size();
  AttackOutcome out;
  out.final_label = clean.label;

  // The current point is tracked directly (not as x + delta) so that the
  // iterate arithmetic coincides with a plain STP run step for step.
  Vec cur = x;
  double loss_cur = attack_loss(clean, y, spec.loss);
  out.loss_trajectory.push_back(loss_cur);
  out.iterates.push_back(cur);
  if (clean.label != y) {  // nothing to do, x is already adversarial
    out.success = true;
    out.delta = Vec::Zero(n);
    return out;
  }

  // Candidate one basis step away, clamped to the ball in constrained mode.
  const auto candidate = [&](Eigen::Index i, double step) {
    Vec cand = cur;
    cand[i] += step;
    if (!spec.unconstrained) {
      const double lo = x[i] - spec.eps, hi = x[i] + spec.eps;
      cand[i] = std::min(hi, std::max(lo, cand[i]));
    }
    return cand;
  };

  DirectionStream stream(spec.seed, n);
  const long start = oracle.queries();
  const auto used = [&] { return oracle.queries() - start; };

  // A zero-radius ball admits no movement at all.
  const bool frozen = !spec.unconstrained && spec.eps == 0.0;

  while (!frozen && used() < spec.budget) {
    const Eigen::Index i = stream.next();
    Vec cand_plus = candidate(i, spec.step);
    Vec cand_minus = candidate(i, -spec.step);
    const bool plus_moves = cand_plus[i] != cur[i];
    const bool minus_moves = cand_minus[i] != cur[i];
    if (!plus_moves && !minus_moves) continue;  // pinned at the ball boundary

    QueryResponse resp_plus, resp_minus;
    double loss_plus = -std::numeric_limits<double>::infinity();
    double loss_minus = -std::numeric_limits<double>::infinity();
    bool have_minus = false;

    if (variant == SimbaVariant::BothDirections) {
      if (used() + 2 > spec.budget) break;
      resp_plus = oracle.query(cand_plus);
      resp_minus = oracle.query(cand_minus);
      loss_plus = plus_moves ? attack_loss(resp_plus, y, spec.loss) : loss_cur;
      loss_minus = minus_moves ? attack_loss(resp_minus, y, spec.loss) : loss_cur;
      have_minus = true;
    } else {
      // Original variant: probe +, keep it on strict improvement and only
      // otherwise spend a query on -.
      if (plus_moves) {
        if (used() + 1 > spec.budget) break;
        resp_plus = oracle.query(cand_plus);
        loss_plus = attack_loss(resp_plus, y, spec.loss);
      }
      if (!(plus_moves && loss_plus > loss_cur) && minus_moves) {
        if (used() + 1 > spec.budget) break;
        resp_minus = oracle.query(cand_minus);
        loss_minus = attack_loss(resp_minus, y, spec.loss);
        have_minus = true;
      }
    }

    const int choice = three_point_max_choice(loss_cur, loss_plus, loss_minus);
    if (choice == +1) {
      cur = std::move(cand_plus);
      loss_cur = loss_plus;
      out.final_label = resp_plus.label;
      ++out.accepted_steps;
    } else if (choice == -1 && have_minus) {
      cur = std::move(cand_minus);
      loss_cur = loss_minus;
      out.final_label = resp_minus.label;
      ++out.accepted_steps;
    }
    out.loss_trajectory.push_back(loss_cur);
    out.iterates.push_back(cur);
    if (out.final_label != y) {
      out.success = true;
      break;
    }
  }

  out.delta = cur - x;
  out.queries = used();
  return out;
}

StpTrajectory stp_maximize(const std::function<double(const Vec&)>& objective,
                           const Vec& x0, double eps, long iters, std::uint64_t seed) {
  if (iters < 0) throw ConfigError("stp_maximize: iters must be non-negative");
  StpTrajectory traj;
  Vec x = x0;
  double value = objective(x);
  ++traj.evaluations;
  traj.iterates.push_back(x);
  traj.values.push_back(value);

  DirectionStream stream(seed, x0.size());
  for (long k = 0; k < iters; ++k) {
    const Eigen::Index i = stream.next();
    Vec x_plus = x;
    x_plus[i] += eps;
    Vec x_minus = x;
    x_minus[i] -= eps;
    const double v_plus = objective(x_plus);
    const double v_minus = objective(x_minus);
    traj.evaluations += 2;

    const int choice = three_point_max_choice(value, v_plus, v_minus);
    if (choice == +1) {
      x = std::move(x_plus);
      value = v_plus;
      ++traj.accepted;
    } else if (choice == -1) {
      x = std::move(x_minus);
      value = v_minus;
      ++traj.accepted;
    }
    traj.chosen.push_back(choice);
    traj.iterates.push_back(x);
    traj.values.push_back(value);
  }
  return traj;
}

AttackOutcome nes_attack(QueryOracle& oracle, const Vec& x, Eigen::Index y,
                         const AttackSpec& spec, double sigma, long samples,
                         const QueryResponse& clean) {
  spec.validate();
  if (sigma <= 0.0) throw ConfigError("nes_attack: sigma must be positive");
  if (samples < 2 || samples % 2 != 0)
    throw ConfigError("nes_attack: samples must be even and at least 2");

  const Eigen::Index n = x.size();
  AttackOutcome out;
  out.delta = Vec::Zero(n);
  out.final_label = clean.label;

  double loss_cur = attack_loss(clean, y, spec.loss);
  out.loss_trajectory.push_back(loss_cur);
  if (clean.label != y) {
    out.success = true;
    return out;
  }

  Rng rng(spec.seed);
  const long start = oracle.queries();
  const auto used = [&] { return oracle.queries() - start; };
  const auto project = [&](const Vec& d) {
    return spec.norm == NormKind::LInf ? project_linf(d, spec.eps, spec.unconstrained)
                                       : project_l2(d, spec.eps, spec.unconstrained);
  };

  while (true) {
    // Pairs that still fit in the budget, keeping one query for the
    // candidate check; a short final round is truncated, not skipped.
    const long remaining = spec.budget - used();
    const long pairs = std::min(samples / 2, (remaining - 1) / 2);
    if (pairs < 1) break;

    Vec grad_est = Vec::Zero(n);
    for (long p = 0; p < pairs; ++p) {
      const Vec u = rng.normal_vec(n);
      const double l_plus =
          attack_loss(oracle.query(x + out.delta + sigma * u), y, spec.loss);
      const double l_minus =
          attack_loss(oracle.query(x + out.delta - sigma * u), y, spec.loss);
      grad_est += (l_plus - l_minus) / (2.0 * sigma) * u;
    }
    grad_est /= static_cast<double>(pairs);

    if (spec.norm == NormKind::LInf) {
      out.delta = project(out.delta + spec.step * sign_of(grad_est));
    } else {
      const double norm = grad_est.norm();
      if (norm > 0.0) out.delta = project(out.delta + spec.step * grad_est / norm);
    }

    const QueryResponse resp = oracle.query(x + out.delta);
    loss_cur = attack_loss(resp, y, spec.loss);
    out.final_label = resp.label;
    ++out.accepted_steps;
    out.loss_trajectory.push_back(loss_cur);
    if (out.final_label != y) {
      out.success = true;
      break;
    }
  }

  out.queries = used();
  return out;
}

AttackOutcome pgd_attack(const MlpParams& f, const Vec& x, Eigen::Index y,
                         const AttackSpec& spec,
                         const std::optional<AntiAdvConfig>& g_cfg, bool clip_unit_box) {
  spec.validate();
  if (spec.norm != NormKind::LInf) throw ConfigError("pgd_attack: l-infinity norm required");
  if (spec.step > spec.eps) throw ConfigError("pgd_attack: step must not exceed eps");
  if (g_cfg) g_cfg->validate();

  // Loss, label and gradient of the attacked classifier at x + delta. For
  // the wrapped classifier the gradient is taken at the layer-shifted point.
  const auto evaluate = [&](const Vec& z, Vec* grad) {
    if (!g_cfg) {
      const ForwardCache cache = mlp_forward_cached(f, z);
      auto [probs, loss] = softmax_ce(cache.logits, y);
      if (grad) *grad = input_gradient_from_cache(f, cache, y);
      return std::make_pair(loss, argmax_lowest(cache.logits));
    }
    const AntiAdvResult r = anti_forward(f, z, *g_cfg);
    const Vec shifted = z + r.trace.gamma.back();
    const double g_loss = -std::log(std::max(r.probs[y], 1e-300));
    if (grad) *grad = input_gradient(f, shifted, y);
    return std::make_pair(g_loss, argmax_lowest(r.probs));
  };

  AttackOutcome out;
  out.delta = Vec::Zero(x.size());

  Vec grad;
  auto [loss0, label0] = evaluate(x, nullptr);
  out.loss_trajectory.push_back(loss0);
  out.final_label = label0;
  if (label0 != y) {
    out.success = true;
    return out;
  }

  for (long t = 0; t < spec.budget; ++t) {
    evaluate(x + out.delta, &grad);
    Vec delta = out.delta + spec.step * sign_of(grad);
    delta = delta.cwiseMax(-spec.eps).cwiseMin(spec.eps);
    if (clip_unit_box) delta = (x + delta).cwiseMax(0.0).cwiseMin(1.0) - x;
    out.delta = std::move(delta);
    ++out.accepted_steps;

    auto [loss_t, label_t] = evaluate(x + out.delta, nullptr);
    out.loss_trajectory.push_back(loss_t);
    out.final_label = label_t;
    if (label_t != y) {
      out.success = true;
      break;
    }
  }
  return out;
}

GradAscentRun gradient_ascent_run(const GradField& field, const Vec& x0, double step,
                                  double anti_step, long iters) {
  if (iters < 0) throw ConfigError("gradient_ascent_run: iters must be non-negative");
  GradAscentRun run;
  Vec x = x0;
  run.iterates.push_back(x);
  run.values.push_back(field.value(x));
  for (long k = 0; k < iters; ++k) {
    const Vec g = field.grad(x);
    x = x + step * g - anti_step * g;
    run.iterates.push_back(x);
    run.values.push_back(field.value(x));
  }
  return run;
}

AttackOutcome gradient_ascent_attack(const MlpParams& f, const Vec& x, Eigen::Index y,
                                     double alpha_over_L, long iters,
                                     double anti_step_over_L) {
  if (alpha_over_L < 0.0) throw ConfigError("gradient_ascent_attack: step must be non-negative");

  AttackOutcome out;
  Vec z = x;
  out.loss_trajectory.push_back(softmax_ce(mlp_forward(f, z), y).second);
  for (long k = 0; k < iters; ++k) {
    const Vec grad_y = input_gradient(f, z, y);
    if (anti_step_over_L > 0.0) {
      const Eigen::Index y_hat = pseudo_label(f, z);
      if (y_hat == y) {
        // Attacker and layer act on the same gradient; their steps merge
        // into one net coefficient, so a matched layer cancels exactly.
        const double net = alpha_over_L - anti_step_over_L;
        if (net != 0.0) z += net * grad_y;
      } else {
        z += alpha_over_L * grad_y - anti_step_over_L * input_gradient(f, z, y_hat);
      }
    } else {
      z += alpha_over_L * grad_y;
    }
    out.loss_trajectory.push_back(softmax_ce(mlp_forward(f, z), y).second);
  }
  out.delta = z - x;
  out.final_label = pseudo_label(f, z);
  out.success = out.final_label != y;
  return out;
}

AttackOutcome adaptive_transfer_attack(const MlpParams& f, const AntiAdvConfig& g_cfg,
                                       const Vec& x, Eigen::Index y,
                                       const AttackSpec& inner) {
  AttackOutcome out = pgd_attack(f, x, y, inner);
  // Replay the crafted perturbation through the full defense.
  const AntiAdvResult r = anti_forward(f, x + out.delta, g_cfg);
  out.final_label = argmax_lowest(r.probs);
  out.success = out.final_label != y;
  return out;
}

}  // namespace antiadv
