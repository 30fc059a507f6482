#include "antiadv/theory.hpp"

#include <cmath>
#include <limits>

namespace antiadv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Three-point rules shared by the coupled dynamic. The attacker requires a
// strict improvement (+ preferred); the defender prefers staying put, then +.
int tp_max(double cur, double plus, double minus) {
  if (plus > cur && plus >= minus) return +1;
  if (minus > cur) return -1;
  return 0;
}

int tp_min(double cur, double plus, double minus) {
  if (cur <= plus && cur <= minus) return 0;
  if (plus <= minus) return +1;
  return -1;
}

}  // namespace

void TheoryInputs::validate_blackbox() const {
  if (smoothness <= 0.0) throw RegimeError("theory: smoothness constant L must be positive");
  if (rho <= 0.0) throw RegimeError("theory: precision rho must be positive");
  if (n < 1) throw RegimeError("theory: dimension n must be at least 1");
  if (loss_gap < 0.0) throw RegimeError("theory: loss gap must be non-negative");
  if (!(eps > 0.0) || !(eps < rho / (static_cast<double>(n) * smoothness)))
    throw RegimeError("theory: steps must satisfy 0 < eps < rho / (n L); got eps = " +
                      std::to_string(eps));
}

void TheoryInputs::validate_whitebox() const {
  if (smoothness <= 0.0) throw RegimeError("theory: smoothness constant L must be positive");
  if (rho <= 0.0) throw RegimeError("theory: precision rho must be positive");
  if (loss_gap < 0.0) throw RegimeError("theory: loss gap must be non-negative");
  if (!(alpha > 0.0) || !(alpha <= 1.0))
    throw RegimeError("theory: attacker step alpha must lie in (0, 1]");
}

double k_base(const TheoryInputs& t) {
  t.validate_blackbox();
  const double denom = (t.rho / static_cast<double>(t.n) - t.smoothness * t.eps / 2.0) * t.eps;
  return t.loss_gap / denom;
}

double k_anti(const TheoryInputs& t) {
  t.validate_blackbox();
  if (t.c >= 1.0) throw RegimeError("theory: k_anti requires c < 1");
  if (t.c <= 0.0) return kInf;
  const double denom =
      (t.rho / static_cast<double>(t.n) - t.smoothness * t.eps * t.c / 2.0) * t.eps * t.c;
  return t.loss_gap / denom;
}

double g_blackbox(const TheoryInputs& t) {
  t.validate_blackbox();
  if (!(t.c > 0.0 && t.c < 1.0)) {
    if (t.c <= 0.0) return kInf;
    throw RegimeError("theory: g_blackbox requires c in (0, 1)");
  }
  const double rho_n = t.rho / static_cast<double>(t.n);
  return (rho_n - t.smoothness * t.eps / 2.0) /
         ((rho_n - t.smoothness * t.eps * t.c / 2.0) * t.c);
}

double k_base_whitebox(const TheoryInputs& t) {
  t.validate_whitebox();
  return 2.0 * t.smoothness * t.loss_gap / ((2.0 - t.alpha) * t.alpha * t.rho);
}

double k_anti_whitebox(const TheoryInputs& t) {
  t.validate_whitebox();
  if (t.c >= 1.0) throw RegimeError("theory: k_anti_whitebox requires c < 1");
  if (t.c <= 0.0) return kInf;
  return 2.0 * t.smoothness * t.loss_gap / ((2.0 - t.alpha * t.c) * t.alpha * t.rho * t.c);
}

double g_whitebox(double alpha, double c) {
  if (!(alpha > 0.0) || !(alpha <= 1.0))
    throw RegimeError("theory: attacker step alpha must lie in (0, 1]");
  if (c <= 0.0) return kInf;
  if (c >= 1.0) throw RegimeError("theory: g_whitebox requires c < 1");
  return (2.0 - alpha) / ((2.0 - alpha * c) * c);
}

SyntheticObjective::SyntheticObjective(Mat a, Vec optimum, double peak)
    : a_(std::move(a)), optimum_(std::move(optimum)), peak_(peak) {
  if (a_.rows() != a_.cols() || a_.rows() != optimum_.size())
    throw DimensionError("SyntheticObjective: dimension mismatch");
  if (!a_.isApprox(a_.transpose(), 1e-12))
    throw ConfigError("SyntheticObjective: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(a_);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ConfigError("SyntheticObjective: matrix must be positive definite");
  smoothness_ = es.eigenvalues().maxCoeff();
}

SyntheticObjective SyntheticObjective::random(Eigen::Index n, std::uint64_t seed,
                                              double lambda_min, double lambda_max) {
  if (n < 1) throw ConfigError("SyntheticObjective: dimension must be positive");
  if (!(lambda_min > 0.0) || lambda_max < lambda_min)
    throw ConfigError("SyntheticObjective: need 0 < lambda_min <= lambda_max");
  Rng rng(mix_seed(seed, 0xA11CE));

  Vec eigenvalues(n);
  for (Eigen::Index i = 0; i < n; ++i)
    eigenvalues[i] = rng.uniform(lambda_min, lambda_max);
  eigenvalues[0] = lambda_max;  // the smoothness constant is known exactly

  Mat gaussian(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) gaussian(r, c) = rng.normal();
  const Mat q = Eigen::HouseholderQR<Mat>(gaussian).householderQ();
  Mat a = q * eigenvalues.asDiagonal() * q.transpose();
  a = ((a + a.transpose()) / 2.0).eval();  // kill rounding asymmetry

  Vec optimum(n);
  for (Eigen::Index i = 0; i < n; ++i) optimum[i] = rng.uniform(-1.0, 1.0);
  const double peak = rng.uniform(-1.0, 1.0);
  return SyntheticObjective(std::move(a), std::move(optimum), peak);
}

double SyntheticObjective::value(const Vec& x) const {
  const Vec d = x - optimum_;
  return peak_ - 0.5 * d.dot(a_ * d);
}

Vec SyntheticObjective::gradient(const Vec& x) const { return -(a_ * (x - optimum_)); }

ScalarField SyntheticObjective::field() const {
  return [*this](const Vec& x) { return value(x); };
}

bool check_local_monotonicity(const ScalarField& obj, const Vec& x,
                              const std::vector<Vec>& dirs, double beta, long grid) {
  if (beta <= 0.0) throw ConfigError("check_local_monotonicity: beta must be positive");
  if (grid < 2) throw ConfigError("check_local_monotonicity: grid must be at least 2");
  const double base = obj(x);
  for (const Vec& r : dirs) {
    bool all_up = true, none_up = true, all_down = true, none_down = true;
    for (long t = 1; t <= grid; ++t) {
      const double a = beta * static_cast<double>(t) / static_cast<double>(grid + 1);
      const bool up = base <= obj(x + a * r);     // improvement ahead
      const bool down = base >= obj(x - a * r);   // deterioration behind
      all_up &= up;
      none_up &= !up;
      all_down &= down;
      none_down &= !down;
    }
    // The biconditional holds for every pair iff the forward tests agree
    // unanimously with the backward ones.
    if (!((all_up && all_down) || (none_up && none_down))) return false;
  }
  return true;
}

std::vector<Vec> canonical_directions(Eigen::Index n) {
  std::vector<Vec> dirs;
  dirs.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    dirs.push_back(std::move(e));
  }
  return dirs;
}

CoupledStpRun coupled_stp_attack(const ScalarField& obj, const Vec& x0, double eps,
                                 double c, long rounds, std::uint64_t seed) {
  if (rounds < 0) throw ConfigError("coupled_stp_attack: rounds must be non-negative");
  const double eps_g = (1.0 - c) * eps;
  if (eps_g < 0.0) throw ConfigError("coupled_stp_attack: c must be at most 1");

  CoupledStpRun run;
  Vec x = x0;
  double value = obj(x);
  run.iterates.push_back(x);
  run.values.push_back(value);

  Rng dir_rng(seed);
  const Eigen::Index n = x0.size();
  for (long k = 0; k < rounds; ++k) {
    const Eigen::Index i = static_cast<Eigen::Index>(dir_rng.uniform_index(static_cast<std::uint64_t>(n)));

    int defender = 0;
    if (eps_g > 0.0) {
      Vec xp = x, xm = x;
      xp[i] += eps_g;
      xm[i] -= eps_g;
      defender = tp_min(value, obj(xp), obj(xm));
      run.defender_evaluations += 2;
    }

    Vec ap = x, am = x;
    ap[i] += eps;
    am[i] -= eps;
    const int attacker = tp_max(value, obj(ap), obj(am));
    run.attacker_queries += 2;

    const double shift =
        static_cast<double>(defender) * eps_g + static_cast<double>(attacker) * eps;
    if (shift != 0.0) x[i] += shift;
    const double new_value = obj(x);
    if (new_value > value) ++run.accepted;
    value = new_value;

    run.directions.push_back(i);
    run.attacker_signs.push_back(attacker);
    run.defender_signs.push_back(defender);
    run.iterates.push_back(x);
    run.values.push_back(value);
  }
  return run;
}

IterateIdentityReport verify_iterate_identity(const ScalarField& obj, const Vec& x0,
                                              double eps, double c, long steps,
                                              std::uint64_t seed, double tolerance,
                                              long grid) {
  const double eps_g = (1.0 - c) * eps;
  const double beta =
      std::max(eps, eps_g) * static_cast<double>(grid + 1) / static_cast<double>(grid);

  IterateIdentityReport report;
  report.tolerance = tolerance;

  const CoupledStpRun run = coupled_stp_attack(obj, x0, eps, c, steps, seed);
  report.accepted = run.accepted;
  for (std::size_t k = 0; k < run.directions.size(); ++k) {
    IterateIdentityReport::Step step;
    step.direction = run.directions[k];
    step.attacker_sign = run.attacker_signs[k];
    step.defender_sign = run.defender_signs[k];

    Vec e = Vec::Zero(x0.size());
    e[step.direction] = 1.0;
    step.certified =
        check_local_monotonicity(obj, run.iterates[k], {e}, beta, grid);

    const Vec dx = run.iterates[k + 1] - run.iterates[k];
    const Vec expected = c * eps * static_cast<double>(step.attacker_sign) * e;
    step.residual = (dx - expected).cwiseAbs().maxCoeff();

    if (step.certified) {
      ++report.certified_steps;
      report.max_certified_residual = std::max(report.max_certified_residual, step.residual);
      if (step.residual > tolerance) ++report.violations;
    }
    report.steps.push_back(std::move(step));
  }
  return report;
}

PrecisionRun rounds_to_precision(const SyntheticObjective& obj, const Vec& x0, double eps,
                                 double c, double rho, long max_rounds, std::uint64_t seed) {
  PrecisionRun out;
  const ScalarField field = obj.field();
  // Walk the coupled dynamic round by round, watching the true gradient.
  const double eps_g = (1.0 - c) * eps;
  Vec x = x0;
  double value = field(x);
  Rng dir_rng(seed);
  const Eigen::Index n = x0.size();

  if (obj.gradient(x).lpNorm<1>() < rho) {
    out.reached = true;
    return out;
  }
  for (long k = 0; k < max_rounds; ++k) {
    const Eigen::Index i = static_cast<Eigen::Index>(dir_rng.uniform_index(static_cast<std::uint64_t>(n)));
    int defender = 0;
    if (eps_g > 0.0) {
      Vec xp = x, xm = x;
      xp[i] += eps_g;
      xm[i] -= eps_g;
      defender = tp_min(value, field(xp), field(xm));
    }
    Vec ap = x, am = x;
    ap[i] += eps;
    am[i] -= eps;
    const int attacker = tp_max(value, field(ap), field(am));
    const double shift =
        static_cast<double>(defender) * eps_g + static_cast<double>(attacker) * eps;
    if (shift != 0.0) x[i] += shift;
    value = field(x);
    ++out.rounds;
    out.queries += 2;
    if (obj.gradient(x).lpNorm<1>() < rho) {
      out.reached = true;
      return out;
    }
  }
  return out;
}

}  // namespace antiadv
