// Command-line driver: dataset/model lifecycle, attack campaigns, ablations
// and theory verification, with CSV/JSON result emission.

#include "antiadv/checkpoint.hpp"
#include "antiadv/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace antiadv;

namespace {

// Exit codes: 0 success, 2 configuration error, 3 verification failure,
// 1 unexpected runtime error.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

json load_validated(const CommonArgs& args, const std::string& command) {
  json config = load_json_file(args.config_path);
  validate_config(config, command);
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

Dataset dataset_from(const json& block, std::optional<std::uint64_t> seed_override) {
  const std::string name = block.at("name").get<std::string>();
  const auto m = block.at("m").get<Eigen::Index>();
  const double noise = block.value("noise", 0.0);
  const std::uint64_t seed = seed_override.value_or(block.value("seed", std::uint64_t{7}));
  return make_dataset(name, m, noise, seed);
}

TrainConfig train_config_from(const json& block, const json& model_block,
                              std::optional<std::uint64_t> seed_override) {
  TrainConfig cfg;
  cfg.epochs = block.at("epochs").get<long>();
  cfg.batch_size = block.value("batch_size", 32L);
  cfg.learning_rate = block.at("learning_rate").get<double>();
  cfg.weight_decay = block.value("weight_decay", 0.0);
  cfg.momentum = block.value("momentum", 0.0);
  cfg.seed = seed_override.value_or(block.value("seed", std::uint64_t{1}));
  if (model_block.contains("hidden"))
    cfg.hidden = model_block.at("hidden").get<std::vector<Eigen::Index>>();
  return cfg;
}

AntiAdvConfig anti_config_from(const json& block) {
  AntiAdvConfig cfg;
  cfg.alpha = block.at("alpha").get<double>();
  cfg.k = block.at("k").get<long>();
  cfg.guard = block.value("guard", true);
  cfg.clip_unit_box = block.value("clip_unit_box", false);
  cfg.validate();
  return cfg;
}

NamedAttack attack_from(const json& entry) {
  NamedAttack attack;
  attack.name = entry.at("name").get<std::string>();
  attack.spec.eps = entry.value("eps", 0.3);
  attack.spec.step = entry.value("step", 0.1);
  attack.spec.budget =
      entry.contains("budget") ? entry.at("budget").get<long>() : entry.value("iters", 25L);
  attack.spec.norm = entry.value("norm", std::string("inf")) == "2" ? NormKind::L2 : NormKind::LInf;
  if (entry.value("loss", std::string("cross-entropy")) == "margin")
    attack.spec.loss = LossKind::Margin;
  if (entry.value("variant", std::string("both-directions")) == "original")
    attack.variant = SimbaVariant::Original;
  attack.sigma = entry.value("sigma", 0.05);
  attack.samples = entry.value("samples", 10L);
  attack.spec.validate();
  return attack;
}

Dataset eval_dataset_from(const json& config, std::optional<std::uint64_t> seed_override) {
  const json& data_block = config.at("dataset");
  const json eval_block = config.value("eval", json::object());
  const auto samples = eval_block.value("samples", Eigen::Index{200});
  const std::uint64_t offset = eval_block.value("seed_offset", std::uint64_t{1000003});
  const std::uint64_t base = seed_override.value_or(data_block.value("seed", std::uint64_t{7}));
  return make_dataset(data_block.at("name").get<std::string>(), samples,
                      data_block.value("noise", 0.0), base + offset);
}

std::vector<std::uint64_t> seeds_from(const json& config, std::optional<std::uint64_t> override) {
  if (override) return {*override};
  if (config.contains("seeds")) return config.at("seeds").get<std::vector<std::uint64_t>>();
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
}

int cmd_train(const CommonArgs& args) {
  const json config = load_validated(args, "train");
  const std::string hash = config_hash(config);
  fs::create_directories(args.out_dir);

  const Dataset data = dataset_from(config.at("dataset"), std::nullopt);
  const TrainConfig train_cfg =
      train_config_from(config.at("train"), config.value("model", json::object()), args.seed);

  TrainResult result;
  std::string mode = "nominal";
  if (config.at("train").contains("adversarial")) {
    const json& adv = config.at("train").at("adversarial");
    AttackSpec inner;
    inner.eps = adv.at("eps").get<double>();
    inner.step = adv.at("step").get<double>();
    inner.budget = adv.at("iters").get<long>();
    result = train_adversarial(data, train_cfg, inner);
    mode = "adversarial";
  } else {
    result = train_nominal(data, train_cfg);
  }

  json provenance;
  provenance["config_hash"] = hash;
  provenance["dataset"] = config.at("dataset");
  provenance["train"] = config.at("train");
  provenance["mode"] = mode;

  const fs::path ckpt_path = fs::path(args.out_dir) / "model.json";
  save_checkpoint(result.params, ckpt_path.string(), provenance.dump());

  // Held-out accuracy on a freshly regenerated split of the same family.
  const json& data_block = config.at("dataset");
  const Dataset held_out = make_dataset(
      data_block.at("name").get<std::string>(),
      std::max<Eigen::Index>(50, data.size() / 5), data_block.value("noise", 0.0),
      data_block.value("seed", std::uint64_t{7}) + 1000003);
  const double test_accuracy = evaluate(result.params, held_out);

  json metrics;
  metrics["config_hash"] = hash;
  metrics["final_loss"] = result.final_loss;
  metrics["train_accuracy"] = result.train_accuracy;
  metrics["test_accuracy"] = test_accuracy;
  write_text(fs::path(args.out_dir) / "train_metrics.json", metrics.dump(2) + "\n");
  std::cout << "trained " << mode << " model: train_accuracy="
            << format_double(result.train_accuracy)
            << " test_accuracy=" << format_double(test_accuracy)
            << " loss=" << format_double(result.final_loss)
            << " checkpoint=" << ckpt_path.string() << " config_hash=" << hash << "\n";
  return kExitOk;
}

int cmd_attack(const CommonArgs& args) {
  const json config = load_validated(args, "attack");
  const std::string hash = config_hash(config);
  fs::create_directories(args.out_dir);

  const std::string ckpt_path = config.at("checkpoint").get<std::string>();
  if (!fs::exists(ckpt_path)) throw ConfigError("missing checkpoint: " + ckpt_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);

  const Dataset test = eval_dataset_from(config, args.seed);
  const std::vector<std::uint64_t> seeds = seeds_from(config, args.seed);

  const AntiAdvConfig anti = config.contains("anti_adv")
                                 ? anti_config_from(config.at("anti_adv"))
                                 : AntiAdvConfig{};

  std::vector<DefenseSpec> defenses;
  const auto names = config.value("defenses", std::vector<std::string>{"f", "g"});
  for (const auto& name : names)
    defenses.push_back(name == "f" ? DefenseSpec{"f", std::nullopt} : DefenseSpec{"g", anti});

  std::vector<NamedAttack> attacks;
  for (const auto& entry : config.at("attacks")) attacks.push_back(attack_from(entry));

  const CampaignResult result =
      run_campaign(ckpt.params, test, defenses, attacks, seeds, args.jobs, hash, seeds.front());

  result.table.write_csv((fs::path(args.out_dir) / "results.csv").string());
  write_text(fs::path(args.out_dir) / "results.json", result.table.to_json().dump(2) + "\n");

  json records = json::array();
  for (const auto& rec : result.records) {
    json jr;
    jr["defense"] = rec.defense;
    jr["attack"] = rec.attack;
    jr["seed"] = rec.seed;
    jr["sample"] = rec.sample;
    jr["true_label"] = rec.true_label;
    jr["clean_label"] = rec.clean_label;
    jr["final_label"] = rec.final_label;
    jr["success"] = rec.success;
    jr["queries"] = rec.queries;
    jr["delta_linf"] = rec.delta_linf;
    records.push_back(std::move(jr));
  }
  write_text(fs::path(args.out_dir) / "records.json", records.dump() + "\n");

  for (const auto& row : result.table.rows)
    std::cout << row.defense << " vs " << row.attack
              << ": clean=" << format_double(row.clean_accuracy)
              << " robust=" << format_double(row.robust_accuracy)
              << " mean_queries=" << format_double(row.mean_queries)
              << " success_rate=" << format_double(row.success_rate) << "\n";
  return kExitOk;
}

int cmd_ablate(const CommonArgs& args) {
  const json config = load_validated(args, "ablate");
  const std::string hash = config_hash(config);
  fs::create_directories(fs::path(args.out_dir) / "plotdata");

  const std::string ckpt_path = config.at("checkpoint").get<std::string>();
  if (!fs::exists(ckpt_path)) throw ConfigError("missing checkpoint: " + ckpt_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);

  const Dataset test = eval_dataset_from(config, args.seed);
  const std::vector<std::uint64_t> seeds = seeds_from(config, args.seed);
  const AntiAdvConfig base = config.contains("anti_adv")
                                 ? anti_config_from(config.at("anti_adv"))
                                 : AntiAdvConfig{};
  const NamedAttack attack = attack_from(config.at("attacks").at(0));

  const json& sweep = config.at("sweep");
  json table = json::array();
  std::ostringstream csv;
  csv << "sweep,value,clean_f,clean_g,robust_f,robust_g\n";

  const auto emit = [&](const std::string& kind, const std::vector<AblationRow>& rows,
                        const std::string& file) {
    std::ostringstream plot;
    plot << "value,clean_f,clean_g,robust_f,robust_g\n";
    for (const auto& row : rows) {
      const double value = kind == "alpha" ? row.alpha : static_cast<double>(row.k);
      plot << format_double(value) << ',' << format_double(row.clean_f) << ','
           << format_double(row.clean_g) << ',' << format_double(row.robust_f) << ','
           << format_double(row.robust_g) << "\n";
      csv << kind << ',' << format_double(value) << ',' << format_double(row.clean_f) << ','
          << format_double(row.clean_g) << ',' << format_double(row.robust_f) << ','
          << format_double(row.robust_g) << "\n";
      json jr;
      jr["sweep"] = kind;
      jr["value"] = value;
      jr["clean_f"] = row.clean_f;
      jr["clean_g"] = row.clean_g;
      jr["robust_f"] = row.robust_f;
      jr["robust_g"] = row.robust_g;
      jr["config_hash"] = hash;
      table.push_back(std::move(jr));
    }
    write_text(fs::path(args.out_dir) / "plotdata" / file, plot.str());
  };

  if (sweep.contains("alpha") && !sweep.at("alpha").empty()) {
    const auto grid = sweep.at("alpha").get<std::vector<double>>();
    emit("alpha", run_alpha_sweep(ckpt.params, test, base, attack, grid, seeds, args.jobs),
         "alpha_sweep.csv");
  }
  if (sweep.contains("k") && !sweep.at("k").empty()) {
    const auto grid = sweep.at("k").get<std::vector<long>>();
    emit("k", run_k_sweep(ckpt.params, test, base, attack, grid, seeds, args.jobs),
         "k_sweep.csv");
  }

  write_text(fs::path(args.out_dir) / "sweep.csv", csv.str());
  write_text(fs::path(args.out_dir) / "sweep.json",
             json({{"schema_version", kConfigSchemaVersion}, {"rows", table}}).dump(2) + "\n");
  std::cout << "ablation sweep written to " << args.out_dir << " (config_hash=" << hash << ")\n";
  return kExitOk;
}

int cmd_theory(const CommonArgs& args) {
  const json config = load_validated(args, "theory");
  const std::string hash = config_hash(config);
  fs::create_directories(args.out_dir);
  const json block = config.at("theory");

  TheorySuiteConfig suite;
  suite.base.smoothness = block.value("smoothness", 1.0);
  suite.base.rho = block.value("rho", 0.2);
  suite.base.n = block.value("n", 2L);
  suite.base.eps = block.value("eps", 0.05);
  suite.base.alpha = block.value("alpha", 1.0);
  suite.base.c = 0.5;
  if (block.contains("c_grid")) {
    suite.c_grid = block.at("c_grid").get<std::vector<double>>();
  } else {
    for (int i = 1; i <= 19; ++i) suite.c_grid.push_back(0.05 * i);
  }
  suite.formula_samples = block.value("formula_samples", 10000L);
  suite.trials = block.value("trials", 50L);
  suite.max_rounds = block.value("max_rounds", 200000L);
  suite.identity_steps = block.value("identity_steps", 500L);
  if (block.contains("c_levels")) suite.c_levels = block.at("c_levels").get<std::vector<double>>();
  suite.seed = args.seed.value_or(block.value("seed", std::uint64_t{3}));
  suite.jobs = args.jobs;

  if (suite.trials < 1 || suite.identity_steps < 1 || suite.formula_samples < 1)
    throw ConfigError("theory: trials, identity_steps and formula_samples must be positive");

  // Regime violations surface as errors before any verification runs.
  suite.base.validate_blackbox();
  suite.base.validate_whitebox();

  const TheorySuiteReport report = run_theory_suite(suite);
  json doc = theory_report_to_json(report);
  doc["config_hash"] = hash;
  write_text(fs::path(args.out_dir) / "report.json", doc.dump(2) + "\n");

  const auto line = [](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
  };
  line("formula-consistency (black-box)", report.formula_consistency_ok);
  line("formula-consistency (white-box)", report.whitebox_consistency_ok);
  line("factor-monotone-decreasing (black-box)", report.blackbox_monotone_ok);
  line("factor-above-one (black-box)", report.blackbox_above_one_ok);
  line("factor-limit-at-c-1 (black-box)", report.blackbox_limit_ok);
  line("factor-monotone-decreasing (white-box)", report.whitebox_monotone_ok);
  line("factor-above-one (white-box)", report.whitebox_above_one_ok);
  line("factor-limit-at-c-1 (white-box)", report.whitebox_limit_ok);
  line("empirical-bound", report.bound_ok);
  line("query-ordering", report.ordering_ok);
  line("iterate-identity", report.identity_ok);
  return report.all_ok() ? kExitOk : kExitVerification;
}

int cmd_report(const CommonArgs& args) {
  const json config = load_validated(args, "report");
  fs::create_directories(args.out_dir);

  ResultsTable merged;
  for (const auto& entry : config.at("inputs")) {
    const std::string path = entry.get<std::string>();
    if (!fs::exists(path)) throw ConfigError("report: missing input " + path);
    const ResultsTable table = ResultsTable::from_json(load_json_file(path));
    merged.rows.insert(merged.rows.end(), table.rows.begin(), table.rows.end());
  }

  json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["config_hash"] = config_hash(config);
  doc["rows"] = merged.to_json().at("rows");
  write_text(fs::path(args.out_dir) / "report.json", doc.dump(2) + "\n");

  std::cout << "defense      attack     clean    robust   queries  success\n";
  for (const auto& row : merged.rows) {
    std::printf("%-12s %-10s %-8.4f %-8.4f %-8.1f %-8.4f\n", row.defense.c_str(),
                row.attack.c_str(), row.clean_accuracy, row.robust_accuracy, row.mean_queries,
                row.success_rate);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial-robustness laboratory for small classifiers"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "JSON run configuration")->required();
    sub->add_option("--out", args.out_dir, "Output directory");
    sub->add_option("--jobs", args.jobs, "Worker threads for per-sample evaluation");
    sub->add_option("--seed", [&args](const CLI::results_t& vals) {
      args.seed = std::stoull(vals.at(0));
      return true;
    }, "Override the configured seed(s)");
  };

  CLI::App* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  CLI::App* attack = app.add_subcommand("attack", "Run an attack evaluation campaign");
  CLI::App* ablate = app.add_subcommand("ablate", "Sweep layer parameters");
  CLI::App* theory = app.add_subcommand("theory", "Verify the closed-form bounds");
  CLI::App* report = app.add_subcommand("report", "Merge result tables into a report");
  for (CLI::App* sub : {train, attack, ablate, theory, report}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(args);
    if (attack->parsed()) return cmd_attack(args);
    if (ablate->parsed()) return cmd_ablate(args);
    if (theory->parsed()) return cmd_theory(args);
    if (report->parsed()) return cmd_report(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RegimeError& e) {
    std::cerr << "regime violation: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
