#pragma once

#include "antiadv/attacks.hpp"
#include "antiadv/dataset.hpp"
#include "antiadv/results.hpp"
#include "antiadv/theory.hpp"
#include "antiadv/train.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace antiadv {

// Index-sliced worker pool; slot writes keep every aggregation order
// independent of scheduling.
void parallel_for(long total, int jobs, const std::function<void(long)>& fn);

struct DefenseSpec {
  std::string name;  // "f" or "g"
  std::optional<AntiAdvConfig> anti;
};

struct NamedAttack {
  std::string name;  // simba | nes | pgd | adaptive
  AttackSpec spec;
  SimbaVariant variant = SimbaVariant::BothDirections;
  double sigma = 0.05;  // nes
  long samples = 10;    // nes
};

struct SampleRecord {
  std::string defense;
  std::string attack;
  std::uint64_t seed = 0;
  long sample = 0;
  int true_label = 0;
  long clean_label = 0;
  long final_label = 0;
  bool success = false;
  long queries = 0;
  double delta_linf = 0.0;
};

struct CampaignResult {
  ResultsTable table;                 // one row per defense x attack
  std::vector<SampleRecord> records;  // per (defense, attack, seed, sample)
};

// Robust-accuracy protocol: a sample counts as robust when its attacked
// prediction still matches the true label; points the defense already
// misclassifies are immediate attack successes and cost no queries.
CampaignResult run_campaign(const MlpParams& f, const Dataset& test,
                            const std::vector<DefenseSpec>& defenses,
                            const std::vector<NamedAttack>& attacks,
                            const std::vector<std::uint64_t>& seeds, int jobs,
                            const std::string& hash, std::uint64_t provenance_seed);

struct AblationRow {
  double alpha = 0.0;
  long k = 0;
  double clean_f = 0.0;
  double clean_g = 0.0;
  double robust_f = 0.0;
  double robust_g = 0.0;
};

std::vector<AblationRow> run_alpha_sweep(const MlpParams& f, const Dataset& test,
                                         const AntiAdvConfig& base, const NamedAttack& attack,
                                         const std::vector<double>& alpha_grid,
                                         const std::vector<std::uint64_t>& seeds, int jobs);

std::vector<AblationRow> run_k_sweep(const MlpParams& f, const Dataset& test,
                                     const AntiAdvConfig& base, const NamedAttack& attack,
                                     const std::vector<long>& k_grid,
                                     const std::vector<std::uint64_t>& seeds, int jobs);

// ---------------------------------------------------------------------------
// Theory verification suite: closed-form consistency plus the empirical
// bound and ordering experiments on concave quadratics.

struct TheorySuiteConfig {
  TheoryInputs base;                       // in-regime reference point
  std::vector<double> c_grid;              // for monotonicity of G
  long formula_samples = 10000;            // random in-regime consistency draws
  long trials = 50;                        // quadratic trials
  long max_rounds = 200000;
  long identity_steps = 500;
  std::vector<double> c_levels = {0.25, 0.5, 0.75};
  std::uint64_t seed = 3;
  int jobs = 1;
};

struct TheorySuiteReport {
  TheoryInputs regime;  // the in-regime reference parameters used

  // Closed-form checks.
  bool formula_consistency_ok = false;
  double formula_max_rel_err = 0.0;
  bool blackbox_monotone_ok = false;
  bool blackbox_above_one_ok = false;
  bool blackbox_limit_ok = false;
  double blackbox_limit_value = 0.0;
  bool whitebox_consistency_ok = false;
  double whitebox_max_rel_err = 0.0;
  bool whitebox_monotone_ok = false;
  bool whitebox_above_one_ok = false;
  bool whitebox_limit_ok = false;
  double whitebox_limit_value = 0.0;
  std::vector<double> c_grid;
  std::vector<double> g_blackbox_grid;
  std::vector<double> g_whitebox_grid;

  // Empirical bound: mean rounds to reach l1 gradient precision vs K_f.
  bool bound_ok = false;
  double mean_rounds_baseline = 0.0;
  double mean_k_base = 0.0;

  // Empirical ordering of median queries across anti-adversary strengths.
  bool ordering_ok = false;
  std::vector<double> c_levels;
  std::vector<double> median_queries;  // aligned with c_levels
  double median_queries_baseline = 0.0;
  std::vector<double> trial_queries_baseline;               // per trial
  std::vector<std::vector<double>> trial_queries_wrapped;   // per c level, per trial

  // Iterate identity on a linear fixture.
  bool identity_ok = false;
  long identity_certified_steps = 0;
  double identity_max_residual = 0.0;

  bool all_ok() const {
    return formula_consistency_ok && blackbox_monotone_ok && blackbox_above_one_ok &&
           blackbox_limit_ok && whitebox_consistency_ok && whitebox_monotone_ok &&
           whitebox_above_one_ok && whitebox_limit_ok && bound_ok && ordering_ok &&
           identity_ok;
  }
};

TheorySuiteReport run_theory_suite(const TheorySuiteConfig& cfg);

nlohmann::json theory_report_to_json(const TheorySuiteReport& report);

}  // namespace antiadv
