#pragma once

#include "antiadv/common.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace antiadv {

// Constants entering the query-budget bounds. The black-box track measures
// gradient precision rho in the l1 norm, the white-box track in squared l2;
// the two never mix.
struct TheoryInputs {
  double smoothness = 1.0;  // L
  double rho = 0.1;
  long n = 2;
  double eps = 0.01;
  double c = 0.5;
  double loss_gap = 1.0;
  double alpha = 1.0;  // white-box attacker step, in units of 1/L

  void validate_blackbox() const;  // checks 0 < eps < rho / (n L)
  void validate_whitebox() const;  // checks alpha in (0, 1]
};

// Minimum query budget for the basis-direction attack to drive the loss
// gradient below precision rho on the bare classifier:
//   K_f = loss_gap / ((rho/n - L eps / 2) eps).
double k_base(const TheoryInputs& t);

// Same budget against the wrapped classifier whose layer takes a single
// three-point step of size (1-c) eps in the shared direction:
//   K_g = loss_gap / ((rho/n - L eps c / 2) eps c),  infinite for c <= 0.
double k_anti(const TheoryInputs& t);

// Robustness factor K_g / K_f in closed form, for c in (0, 1).
double g_blackbox(const TheoryInputs& t);

// White-box analogues for the gradient-ascent attacker with step alpha/L.
double k_base_whitebox(const TheoryInputs& t);
double k_anti_whitebox(const TheoryInputs& t);

// (2 - alpha) / ((2 - alpha c) c); infinite for c <= 0.
double g_whitebox(double alpha, double c);

using ScalarField = std::function<double(const Vec&)>;

// Concave quadratic -0.5 (x - x*)^T A (x - x*) + peak with known smoothness
// constant, optimum and gap; the fixture on which every assumption of the
// bounds holds exactly.
class SyntheticObjective {
 public:
  SyntheticObjective(Mat a, Vec optimum, double peak);

  // Random SPD quadratic with eigenvalues in [lambda_min, lambda_max] (the
  // largest is always exactly lambda_max) and optimum inside [-1, 1]^n.
  static SyntheticObjective random(Eigen::Index n, std::uint64_t seed,
                                   double lambda_min = 0.25, double lambda_max = 1.0);

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  double smoothness() const { return smoothness_; }
  const Vec& optimum() const { return optimum_; }
  double peak() const { return peak_; }
  double gap_from(const Vec& x0) const { return peak_ - value(x0); }
  Eigen::Index dim() const { return optimum_.size(); }
  ScalarField field() const;

 private:
  Mat a_;
  Vec optimum_;
  double peak_;
  double smoothness_;
};

// Sampled certificate of the local-monotonicity property: along every
// direction r, improvement at +alpha r must coincide with deterioration at
// -alpha r for all sampled alpha < beta. The grid includes beta * t/(grid+1)
// for t = 1..grid.
bool check_local_monotonicity(const ScalarField& obj, const Vec& x,
                              const std::vector<Vec>& dirs, double beta, long grid);

std::vector<Vec> canonical_directions(Eigen::Index n);

// One round of the coupled attacker/defender dynamic: sample a basis
// direction, let the layer take its three-point minimizing step of size
// eps_g = (1-c) eps and the attacker its three-point maximizing step of
// size eps, both at the current point, and add the two displacements.
struct CoupledStpRun {
  std::vector<Vec> iterates;
  std::vector<double> values;
  std::vector<Eigen::Index> directions;
  std::vector<int> attacker_signs;   // -1 / 0 / +1 per round
  std::vector<int> defender_signs;
  long accepted = 0;                 // rounds where the value strictly rose
  long attacker_queries = 0;         // 2 per round
  long defender_evaluations = 0;     // layer overhead, reported separately
};

CoupledStpRun coupled_stp_attack(const ScalarField& obj, const Vec& x0, double eps,
                                 double c, long rounds, std::uint64_t seed);

// Per-step audit of the proof's iterate identity dx = c eps q against the
// coupled dynamic. Steps whose sampled direction fails the monotonicity
// certificate at the current point are reported, never asserted.
struct IterateIdentityReport {
  struct Step {
    Eigen::Index direction = 0;
    int attacker_sign = 0;
    int defender_sign = 0;
    bool certified = false;
    double residual = 0.0;  // ||dx - c eps q_eff||_inf, q_eff signed by the attacker
  };
  std::vector<Step> steps;
  long certified_steps = 0;
  long violations = 0;  // certified steps with residual > tolerance
  double max_certified_residual = 0.0;
  long accepted = 0;
  double tolerance = 0.0;
};

IterateIdentityReport verify_iterate_identity(const ScalarField& obj, const Vec& x0,
                                              double eps, double c, long steps,
                                              std::uint64_t seed, double tolerance = 1e-12,
                                              long grid = 16);

// Rounds of the (coupled) basis attack until the true gradient first drops
// below precision rho in l1 norm; c = 1 is the bare-classifier baseline.
struct PrecisionRun {
  bool reached = false;
  long rounds = 0;
  long queries = 0;
};

PrecisionRun rounds_to_precision(const SyntheticObjective& obj, const Vec& x0, double eps,
                                 double c, double rho, long max_rounds, std::uint64_t seed);

}  // namespace antiadv
