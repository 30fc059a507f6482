#pragma once

#include "antiadv/anti_adversary.hpp"
#include "antiadv/oracle.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace antiadv {

enum class NormKind { LInf, L2 };
enum class LossKind { CrossEntropy, Margin };
enum class SimbaVariant { Original, BothDirections };

// Threat-model parameters shared by every attacker. `budget` counts oracle
// queries for black-box attacks and iterations for white-box ones. Theory
// runs set `unconstrained` and ignore the ball radius.
struct AttackSpec {
  NormKind norm = NormKind::LInf;
  double eps = 0.0;
  double step = 0.0;
  long budget = 0;
  LossKind loss = LossKind::CrossEntropy;
  std::uint64_t seed = 0;
  bool unconstrained = false;

  void validate() const;
};

struct AttackOutcome {
  bool success = false;
  long queries = 0;
  Vec delta;
  Eigen::Index final_label = -1;
  std::vector<double> loss_trajectory;
  std::vector<Vec> iterates;  // filled by simba: x + delta after each round
  long accepted_steps = 0;
};

// Loss the attacker maximizes, computed from an oracle response. Size-1
// responses are raw objective values (derivative-free theory runs).
double attack_loss(const QueryResponse& response, Eigen::Index y, LossKind kind);

// Seeded stream of canonical basis indices, sampled uniformly with
// replacement. Attacks and the plain STP optimizer share this stream type
// so equal seeds give equal direction sequences.
class DirectionStream {
 public:
  DirectionStream(std::uint64_t seed, Eigen::Index n) : rng_(seed), n_(n) {
    if (n <= 0) throw ConfigError("DirectionStream: dimension must be positive");
  }
  Eigen::Index next() { return static_cast<Eigen::Index>(rng_.uniform_index(static_cast<std::uint64_t>(n_))); }

 private:
  Rng rng_;
  Eigen::Index n_;
};

// Three-point acceptance shared by SimBA and STP: strict improvement
// required, + preferred over - on equal improvement, ties with the current
// value rejected. Returns +1, -1 or 0.
inline int three_point_max_choice(double cur, double plus, double minus) {
  if (plus > cur && plus >= minus) return +1;
  if (minus > cur) return -1;
  return 0;
}

// Basis-direction black-box attack. The caller supplies the clean-point
// response (the attacker already knows the unattacked prediction); the
// query budget covers only adversarial candidate evaluations, so a budget
// of 2B sustains exactly B both-directions rounds.
AttackOutcome simba(QueryOracle& oracle, const Vec& x, Eigen::Index y,
                    const AttackSpec& spec, SimbaVariant variant,
                    const QueryResponse& clean);

struct StpTrajectory {
  std::vector<Vec> iterates;
  std::vector<double> values;
  std::vector<int> chosen;  // per round: +1, -1 or 0
  long accepted = 0;
  long evaluations = 0;
};

// Generic derivative-free maximizer: per round draw a basis direction and
// keep the best of {x, x + eps q, x - eps q}.
StpTrajectory stp_maximize(const std::function<double(const Vec&)>& objective,
                           const Vec& x0, double eps, long iters, std::uint64_t seed);

// Antithetic Gaussian-smoothing gradient estimate plus signed ascent,
// projected to the eps ball each step. `samples` evaluations per estimate
// (must be even); one further query per round checks the candidate.
AttackOutcome nes_attack(QueryOracle& oracle, const Vec& x, Eigen::Index y,
                         const AttackSpec& spec, double sigma, long samples,
                         const QueryResponse& clean);

// White-box projected gradient ascent on the cross-entropy loss,
// l-infinity ball only. Against the wrapped classifier the gradient flows
// through the unrolled layer: sign() and the pseudo-label are piecewise
// constant in the input, so the exact reverse-mode gradient is the base
// network's gradient at the layer-shifted point.
AttackOutcome pgd_attack(const MlpParams& f, const Vec& x, Eigen::Index y,
                         const AttackSpec& spec,
                         const std::optional<AntiAdvConfig>& g_cfg = std::nullopt,
                         bool clip_unit_box = false);

// Differentiable scalar field for the white-box theory track.
struct GradField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
};

struct GradAscentRun {
  std::vector<Vec> iterates;
  std::vector<double> values;
};

// Unconstrained ascent x <- x + step * grad, with the defender
// simultaneously applying -anti_step * grad at the same point (anti_step 0
// recovers the plain attacker).
GradAscentRun gradient_ascent_run(const GradField& field, const Vec& x0, double step,
                                  double anti_step, long iters);

// Classifier version. The attacker ascends the loss of the true label; the
// defender, when anti_step_over_L > 0, descends the loss of the current
// pseudo-label, matching the single-gd layer.
AttackOutcome gradient_ascent_attack(const MlpParams& f, const Vec& x, Eigen::Index y,
                                     double alpha_over_L, long iters,
                                     double anti_step_over_L = 0.0);

// Tailored attack on the wrapped classifier: craft delta against the base
// model with white-box PGD, then replay it through the full defense.
AttackOutcome adaptive_transfer_attack(const MlpParams& f, const AntiAdvConfig& g_cfg,
                                       const Vec& x, Eigen::Index y,
                                       const AttackSpec& inner);

}  // namespace antiadv
