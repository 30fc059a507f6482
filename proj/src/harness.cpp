#include "antiadv/harness.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

namespace antiadv {

void parallel_for(long total, int jobs, const std::function<void(long)>& fn) {
  if (total <= 0) return;
  const int workers = static_cast<int>(std::max<long>(1, std::min<long>(jobs, total)));
  if (workers == 1) {
    for (long i = 0; i < total; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &fn, &first_error, &error_mutex] {
      try {
        for (long i = w; i < total; i += workers) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

SampleRecord attack_one(const MlpParams& f, const DefenseSpec& defense,
                        const NamedAttack& attack, const Dataset& test, long sample,
                        std::uint64_t seed) {
  SampleRecord rec;
  rec.defense = defense.name;
  rec.attack = attack.name;
  rec.seed = seed;
  rec.sample = sample;

  const Vec x = test.sample(sample);
  const int y = test.labels[static_cast<std::size_t>(sample)];
  rec.true_label = y;

  AttackSpec spec = attack.spec;
  spec.seed = mix_seed(seed, static_cast<std::uint64_t>(sample));

  const bool wrapped = defense.anti.has_value();
  AttackOutcome out;

  if (attack.name == "simba" || attack.name == "nes") {
    ProbeFn probe = wrapped ? make_probe(f, *defense.anti) : make_probe(f);
    // One extra evaluation hosts the clean-point response the attacker starts from.
    QueryOracle oracle(std::move(probe), AccessLevel::Score, spec.budget + 1);
    const QueryResponse clean = oracle.query(x);
    rec.clean_label = clean.label;
    out = attack.name == "simba"
              ? simba(oracle, x, y, spec, attack.variant, clean)
              : nes_attack(oracle, x, y, spec, attack.sigma, attack.samples, clean);
  } else if (attack.name == "pgd") {
    out = pgd_attack(f, x, y, spec, defense.anti);
    rec.clean_label = wrapped ? argmax_lowest(anti_forward(f, x, *defense.anti).probs)
                              : argmax_lowest(mlp_forward(f, x));
  } else if (attack.name == "adaptive") {
    // Against the bare model the tailored attack degenerates to its inner PGD.
    out = wrapped ? adaptive_transfer_attack(f, *defense.anti, x, y, spec)
                  : pgd_attack(f, x, y, spec, std::nullopt);
    rec.clean_label = wrapped ? argmax_lowest(anti_forward(f, x, *defense.anti).probs)
                              : argmax_lowest(mlp_forward(f, x));
  } else {
    throw ConfigError("run_campaign: unknown attack '" + attack.name + "'");
  }

  rec.final_label = out.final_label;
  rec.success = out.success;
  rec.queries = out.queries;
  rec.delta_linf = out.delta.size() ? out.delta.cwiseAbs().maxCoeff() : 0.0;
  return rec;
}

double clean_accuracy_of(const MlpParams& f, const std::optional<AntiAdvConfig>& anti,
                         const Dataset& test) {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    const Eigen::Index label =
        anti ? argmax_lowest(anti_forward(f, test.sample(i), *anti).probs)
             : argmax_lowest(mlp_forward(f, test.sample(i)));
    if (label == test.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace

CampaignResult run_campaign(const MlpParams& f, const Dataset& test,
                            const std::vector<DefenseSpec>& defenses,
                            const std::vector<NamedAttack>& attacks,
                            const std::vector<std::uint64_t>& seeds, int jobs,
                            const std::string& hash, std::uint64_t provenance_seed) {
  if (defenses.empty() || attacks.empty() || seeds.empty())
    throw ConfigError("run_campaign: defenses, attacks and seeds must be non-empty");

  const long n_samples = test.size();
  const long per_pair = static_cast<long>(seeds.size()) * n_samples;
  const long total =
      static_cast<long>(defenses.size()) * static_cast<long>(attacks.size()) * per_pair;

  CampaignResult result;
  result.records.resize(static_cast<std::size_t>(total));

  parallel_for(total, jobs, [&](long idx) {
    const long pair = idx / per_pair;
    const long within = idx % per_pair;
    const auto& defense = defenses[static_cast<std::size_t>(pair / static_cast<long>(attacks.size()))];
    const auto& attack = attacks[static_cast<std::size_t>(pair % static_cast<long>(attacks.size()))];
    const std::uint64_t seed = seeds[static_cast<std::size_t>(within / n_samples)];
    const long sample = within % n_samples;
    result.records[static_cast<std::size_t>(idx)] =
        attack_one(f, defense, attack, test, sample, seed);
  });

  // Deterministic aggregation in record order.
  for (std::size_t d = 0; d < defenses.size(); ++d) {
    const double clean = clean_accuracy_of(f, defenses[d].anti, test);
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      const long base = (static_cast<long>(d) * static_cast<long>(attacks.size()) +
                         static_cast<long>(a)) *
                        per_pair;
      double robust = 0.0, queries = 0.0, successes = 0.0;
      for (long i = 0; i < per_pair; ++i) {
        const auto& rec = result.records[static_cast<std::size_t>(base + i)];
        robust += rec.success ? 0.0 : 1.0;
        queries += static_cast<double>(rec.queries);
        successes += rec.success ? 1.0 : 0.0;
      }
      ResultRow row;
      row.defense = defenses[d].name;
      row.attack = attacks[a].name;
      row.clean_accuracy = clean;
      row.robust_accuracy = robust / static_cast<double>(per_pair);
      row.mean_queries = queries / static_cast<double>(per_pair);
      row.success_rate = successes / static_cast<double>(per_pair);
      row.config_hash = hash;
      row.seed = provenance_seed;
      result.table.rows.push_back(std::move(row));
    }
  }
  return result;
}

namespace {

AblationRow sweep_point(const MlpParams& f, const Dataset& test, const AntiAdvConfig& cfg,
                        const NamedAttack& attack, const std::vector<std::uint64_t>& seeds,
                        int jobs) {
  std::vector<DefenseSpec> defenses;
  defenses.push_back({"f", std::nullopt});
  if (cfg.k == 0) {
    // K = 0 leaves the classifier untouched; skip the redundant campaign.
    const CampaignResult r = run_campaign(f, test, defenses, {attack}, seeds, jobs, "", 0);
    AblationRow row;
    row.alpha = cfg.alpha;
    row.k = 0;
    row.clean_f = row.clean_g = r.table.rows[0].clean_accuracy;
    row.robust_f = row.robust_g = r.table.rows[0].robust_accuracy;
    return row;
  }
  defenses.push_back({"g", cfg});
  const CampaignResult r = run_campaign(f, test, defenses, {attack}, seeds, jobs, "", 0);
  AblationRow row;
  row.alpha = cfg.alpha;
  row.k = cfg.k;
  row.clean_f = r.table.rows[0].clean_accuracy;
  row.robust_f = r.table.rows[0].robust_accuracy;
  row.clean_g = r.table.rows[1].clean_accuracy;
  row.robust_g = r.table.rows[1].robust_accuracy;
  return row;
}

}  // namespace

std::vector<AblationRow> run_alpha_sweep(const MlpParams& f, const Dataset& test,
                                         const AntiAdvConfig& base, const NamedAttack& attack,
                                         const std::vector<double>& alpha_grid,
                                         const std::vector<std::uint64_t>& seeds, int jobs) {
  if (alpha_grid.empty()) throw ConfigError("run_alpha_sweep: empty grid");
  std::vector<AblationRow> rows;
  for (const double alpha : alpha_grid) {
    AntiAdvConfig cfg = base;
    cfg.alpha = alpha;
    rows.push_back(sweep_point(f, test, cfg, attack, seeds, jobs));
  }
  return rows;
}

std::vector<AblationRow> run_k_sweep(const MlpParams& f, const Dataset& test,
                                     const AntiAdvConfig& base, const NamedAttack& attack,
                                     const std::vector<long>& k_grid,
                                     const std::vector<std::uint64_t>& seeds, int jobs) {
  if (k_grid.empty()) throw ConfigError("run_k_sweep: empty grid");
  std::vector<AblationRow> rows;
  for (const long k : k_grid) {
    AntiAdvConfig cfg = base;
    cfg.k = k;
    rows.push_back(sweep_point(f, test, cfg, attack, seeds, jobs));
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace

TheorySuiteReport run_theory_suite(const TheorySuiteConfig& cfg) {
  TheorySuiteReport report;
  report.regime = cfg.base;
  report.c_levels = cfg.c_levels;

  // --- Formula consistency: G * K_f == K_g on random in-regime inputs.
  {
    Rng rng(mix_seed(cfg.seed, 0xF0));
    double max_err = 0.0, max_err_wb = 0.0;
    for (long s = 0; s < cfg.formula_samples; ++s) {
      TheoryInputs t;
      t.smoothness = rng.uniform(0.1, 10.0);
      t.n = 1 + static_cast<long>(rng.uniform_index(50));
      t.rho = rng.uniform(0.01, 2.0);
      t.eps = rng.uniform(0.02, 0.98) * t.rho / (static_cast<double>(t.n) * t.smoothness);
      t.c = rng.uniform(0.01, 0.99);
      t.loss_gap = rng.uniform(0.1, 10.0);
      t.alpha = rng.uniform(0.05, 1.0);
      max_err = std::max(max_err, rel_err(g_blackbox(t) * k_base(t), k_anti(t)));
      max_err_wb =
          std::max(max_err_wb, rel_err(g_whitebox(t.alpha, t.c) * k_base_whitebox(t),
                                       k_anti_whitebox(t)));
    }
    report.formula_max_rel_err = max_err;
    report.formula_consistency_ok = max_err < 1e-12;
    report.whitebox_max_rel_err = max_err_wb;
    report.whitebox_consistency_ok = max_err_wb < 1e-12;
  }

  // --- Monotonicity and limits of both robustness factors on the c grid.
  {
    report.c_grid = cfg.c_grid;
    TheoryInputs t = cfg.base;
    bool mono_bb = true, above_bb = true, mono_wb = true, above_wb = true;
    double prev_bb = std::numeric_limits<double>::infinity();
    double prev_wb = std::numeric_limits<double>::infinity();
    for (const double c : cfg.c_grid) {
      t.c = c;
      const double gb = g_blackbox(t);
      const double gw = g_whitebox(t.alpha, c);
      report.g_blackbox_grid.push_back(gb);
      report.g_whitebox_grid.push_back(gw);
      mono_bb &= gb < prev_bb;
      mono_wb &= gw < prev_wb;
      above_bb &= gb > 1.0;
      above_wb &= gw > 1.0;
      prev_bb = gb;
      prev_wb = gw;
    }
    report.blackbox_monotone_ok = mono_bb;
    report.blackbox_above_one_ok = above_bb;
    report.whitebox_monotone_ok = mono_wb;
    report.whitebox_above_one_ok = above_wb;

    t.c = 1.0 - 1e-6;
    report.blackbox_limit_value = g_blackbox(t);
    report.blackbox_limit_ok = std::abs(report.blackbox_limit_value - 1.0) < 1e-3;
    report.whitebox_limit_value = g_whitebox(t.alpha, t.c);
    report.whitebox_limit_ok = std::abs(report.whitebox_limit_value - 1.0) < 1e-3;
  }

  // --- Empirical bound and ordering: one fixed quadratic fixture (the
  // bound is fixture-specific), `trials` independent direction streams.
  if (cfg.trials > 0) {
    const long trials = cfg.trials;
    const TheoryInputs base = cfg.base;
    const SyntheticObjective quad = SyntheticObjective::random(
        base.n, mix_seed(cfg.seed, 0xE0), 0.25 * base.smoothness, base.smoothness);
    Rng x0_rng(mix_seed(cfg.seed, 0xE1));
    Vec x0(base.n);
    for (Eigen::Index i = 0; i < x0.size(); ++i)
      x0[i] = quad.optimum()[i] +
              (x0_rng.uniform01() < 0.5 ? -1.0 : 1.0) * x0_rng.uniform(0.5, 1.0);

    TheoryInputs t = base;
    t.loss_gap = quad.gap_from(x0);
    report.mean_k_base = k_base(t);

    std::vector<double> rounds_base(static_cast<std::size_t>(trials), 0.0);
    std::vector<double> queries_base(static_cast<std::size_t>(trials), 0.0);
    std::vector<std::vector<double>> queries_g(cfg.c_levels.size());
    for (auto& q : queries_g) q.resize(static_cast<std::size_t>(trials));
    std::vector<char> reached_all(static_cast<std::size_t>(trials), 1);

    parallel_for(trials, cfg.jobs, [&](long trial) {
      const std::uint64_t stream = mix_seed(cfg.seed, 0xE2 + static_cast<std::uint64_t>(trial));
      const PrecisionRun run_f =
          rounds_to_precision(quad, x0, t.eps, 1.0, t.rho, cfg.max_rounds, stream);
      rounds_base[static_cast<std::size_t>(trial)] = static_cast<double>(run_f.rounds);
      queries_base[static_cast<std::size_t>(trial)] = static_cast<double>(run_f.queries);
      bool reached = run_f.reached;
      for (std::size_t ci = 0; ci < cfg.c_levels.size(); ++ci) {
        const PrecisionRun run_g =
            rounds_to_precision(quad, x0, t.eps, cfg.c_levels[ci], t.rho, cfg.max_rounds, stream);
        queries_g[ci][static_cast<std::size_t>(trial)] = static_cast<double>(run_g.queries);
        reached &= run_g.reached;
      }
      reached_all[static_cast<std::size_t>(trial)] = reached ? 1 : 0;
    });

    double mean_rounds = 0.0;
    bool reached = true;
    for (long trial = 0; trial < trials; ++trial) {
      mean_rounds += rounds_base[static_cast<std::size_t>(trial)];
      reached = reached && reached_all[static_cast<std::size_t>(trial)] != 0;
    }
    mean_rounds /= static_cast<double>(trials);
    report.mean_rounds_baseline = mean_rounds;
    report.bound_ok = reached && mean_rounds <= report.mean_k_base;

    report.median_queries_baseline = median_of(queries_base);
    for (std::size_t ci = 0; ci < cfg.c_levels.size(); ++ci)
      report.median_queries.push_back(median_of(queries_g[ci]));
    report.trial_queries_baseline = queries_base;
    report.trial_queries_wrapped = queries_g;
    bool ordering = true;
    for (std::size_t ci = 0; ci < report.median_queries.size(); ++ci) {
      ordering &= report.median_queries[ci] >= report.median_queries_baseline;
      if (ci + 1 < report.median_queries.size())
        ordering &= report.median_queries[ci] >= report.median_queries[ci + 1];
    }
    report.ordering_ok = ordering;
  }

  // --- Iterate identity on a strictly monotone linear fixture.
  if (cfg.identity_steps > 0) {
    Rng rng(mix_seed(cfg.seed, 0xD0));
    Vec w(cfg.base.n);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double magnitude = rng.uniform(0.3, 1.0);
      w[i] = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * magnitude;
    }
    const ScalarField linear = [w](const Vec& x) { return w.dot(x); };
    const Vec x0 = Vec::Zero(cfg.base.n);
    const IterateIdentityReport rep = verify_iterate_identity(
        linear, x0, cfg.base.eps, cfg.base.c, cfg.identity_steps, mix_seed(cfg.seed, 0xD1));
    report.identity_certified_steps = rep.certified_steps;
    report.identity_max_residual = rep.max_certified_residual;
    report.identity_ok =
        rep.violations == 0 && rep.certified_steps == static_cast<long>(rep.steps.size());
  }

  return report;
}

nlohmann::json theory_report_to_json(const TheorySuiteReport& r) {
  nlohmann::json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["regime"] = {{"smoothness", r.regime.smoothness}, {"rho", r.regime.rho},
                   {"n", r.regime.n},                   {"eps", r.regime.eps},
                   {"alpha", r.regime.alpha},           {"loss_gap", r.regime.loss_gap}};
  doc["formula_consistency"] = {{"ok", r.formula_consistency_ok},
                                {"max_rel_err", r.formula_max_rel_err}};
  doc["whitebox_consistency"] = {{"ok", r.whitebox_consistency_ok},
                                 {"max_rel_err", r.whitebox_max_rel_err}};
  doc["blackbox_factor"] = {{"monotone", r.blackbox_monotone_ok},
                            {"above_one", r.blackbox_above_one_ok},
                            {"limit_ok", r.blackbox_limit_ok},
                            {"limit_value", r.blackbox_limit_value},
                            {"c_grid", r.c_grid},
                            {"values", r.g_blackbox_grid}};
  doc["whitebox_factor"] = {{"monotone", r.whitebox_monotone_ok},
                            {"above_one", r.whitebox_above_one_ok},
                            {"limit_ok", r.whitebox_limit_ok},
                            {"limit_value", r.whitebox_limit_value},
                            {"c_grid", r.c_grid},
                            {"values", r.g_whitebox_grid}};
  doc["empirical_bound"] = {{"ok", r.bound_ok},
                            {"mean_rounds_baseline", r.mean_rounds_baseline},
                            {"mean_k_base", r.mean_k_base}};
  doc["query_ordering"] = {{"ok", r.ordering_ok},
                           {"c_levels", r.c_levels},
                           {"median_queries", r.median_queries},
                           {"median_queries_baseline", r.median_queries_baseline},
                           {"trial_queries_baseline", r.trial_queries_baseline},
                           {"trial_queries_wrapped", r.trial_queries_wrapped}};
  doc["iterate_identity"] = {{"ok", r.identity_ok},
                             {"certified_steps", r.identity_certified_steps},
                             {"max_residual", r.identity_max_residual}};
  doc["all_ok"] = r.all_ok();
  return doc;
}

}  // namespace antiadv
