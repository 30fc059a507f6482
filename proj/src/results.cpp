#include "antiadv/results.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace antiadv {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string config_hash(const json& config) {
  const std::string canonical = config.dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

void check_keys(const json& obj, const std::string& where,
                const std::vector<std::string>& allowed,
                const std::vector<std::string>& required) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const auto& k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
  for (const auto& k : required)
    if (!obj.contains(k)) throw ConfigError(where + ": missing required key '" + k + "'");
}

namespace {

void validate_dataset_block(const json& block, const std::string& where) {
  check_keys(block, where, {"name", "m", "noise", "seed"}, {"name", "m"});
}

void validate_train_block(const json& block) {
  check_keys(block, "train",
             {"epochs", "batch_size", "learning_rate", "weight_decay", "momentum", "seed",
              "adversarial"},
             {"epochs", "learning_rate"});
  if (block.contains("adversarial"))
    check_keys(block.at("adversarial"), "train.adversarial", {"eps", "step", "iters"},
               {"eps", "step", "iters"});
}

void validate_anti_block(const json& block) {
  check_keys(block, "anti_adv", {"alpha", "k", "guard", "clip_unit_box"}, {"alpha", "k"});
}

void validate_attack_entry(const json& entry, const std::string& where) {
  check_keys(entry, where,
             {"name", "eps", "step", "budget", "iters", "variant", "loss", "sigma", "samples",
              "norm"},
             {"name"});
  const std::string name = entry.at("name").get<std::string>();
  if (name != "simba" && name != "nes" && name != "pgd" && name != "adaptive")
    throw ConfigError(where + ": unknown attack name '" + name + "'");
}

void validate_eval_block(const json& block) {
  check_keys(block, "eval", {"samples", "seed_offset"}, {"samples"});
}

void validate_theory_block(const json& block) {
  check_keys(block, "theory",
             {"smoothness", "rho", "n", "eps", "alpha", "c_grid", "formula_samples", "trials",
              "max_rounds", "seed", "c_levels", "identity_steps"},
             {});
  if (block.contains("c_grid")) {
    const auto grid = block.at("c_grid").get<std::vector<double>>();
    double prev = 0.0;
    for (const double c : grid) {
      if (c <= prev || c >= 1.0)
        throw ConfigError("theory.c_grid must be strictly increasing inside (0, 1)");
      prev = c;
    }
  }
}

}  // namespace

void validate_config(const json& config, const std::string& command) {
  if (!config.is_object()) throw ConfigError("config: expected a JSON object");
  if (!config.contains("schema_version"))
    throw ConfigError("config: missing required key 'schema_version'");
  if (config.at("schema_version").get<int>() != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version");

  if (command == "train") {
    check_keys(config, "config", {"schema_version", "dataset", "model", "train"},
               {"dataset", "train"});
    validate_dataset_block(config.at("dataset"), "dataset");
    validate_train_block(config.at("train"));
    if (config.contains("model")) check_keys(config.at("model"), "model", {"hidden"}, {"hidden"});
  } else if (command == "attack") {
    check_keys(config, "config",
               {"schema_version", "checkpoint", "dataset", "eval", "anti_adv", "attacks",
                "defenses", "seeds"},
               {"checkpoint", "dataset", "attacks"});
    validate_dataset_block(config.at("dataset"), "dataset");
    if (config.contains("eval")) validate_eval_block(config.at("eval"));
    if (config.contains("anti_adv")) validate_anti_block(config.at("anti_adv"));
    if (!config.at("attacks").is_array() || config.at("attacks").empty())
      throw ConfigError("config: 'attacks' must be a non-empty array");
    for (std::size_t i = 0; i < config.at("attacks").size(); ++i)
      validate_attack_entry(config.at("attacks")[i], "attacks[" + std::to_string(i) + "]");
    if (config.contains("defenses"))
      for (const auto& d : config.at("defenses"))
        if (d.get<std::string>() != "f" && d.get<std::string>() != "g")
          throw ConfigError("config: defenses must be 'f' or 'g'");
  } else if (command == "ablate") {
    check_keys(config, "config",
               {"schema_version", "checkpoint", "dataset", "eval", "anti_adv", "attacks",
                "seeds", "sweep"},
               {"checkpoint", "dataset", "attacks", "sweep"});
    validate_dataset_block(config.at("dataset"), "dataset");
    if (config.contains("eval")) validate_eval_block(config.at("eval"));
    if (config.contains("anti_adv")) validate_anti_block(config.at("anti_adv"));
    for (std::size_t i = 0; i < config.at("attacks").size(); ++i)
      validate_attack_entry(config.at("attacks")[i], "attacks[" + std::to_string(i) + "]");
    check_keys(config.at("sweep"), "sweep", {"alpha", "k"});
    const auto& sweep = config.at("sweep");
    const bool has_alpha = sweep.contains("alpha") && !sweep.at("alpha").empty();
    const bool has_k = sweep.contains("k") && !sweep.at("k").empty();
    if (!has_alpha && !has_k) throw ConfigError("config: sweep grid is empty");
  } else if (command == "theory") {
    check_keys(config, "config", {"schema_version", "theory"}, {"theory"});
    validate_theory_block(config.at("theory"));
  } else if (command == "report") {
    check_keys(config, "config", {"schema_version", "inputs"}, {"inputs"});
    if (!config.at("inputs").is_array() || config.at("inputs").empty())
      throw ConfigError("config: 'inputs' must be a non-empty array of paths");
  } else {
    throw ConfigError("unknown command: " + command);
  }
}

void ResultsTable::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("write_csv: cannot open " + path);
  out << "defense,attack,clean_accuracy,robust_accuracy,mean_queries,success_rate,"
         "config_hash,seed\n";
  for (const auto& r : rows) {
    out << r.defense << ',' << r.attack << ',' << format_double(r.clean_accuracy) << ','
        << format_double(r.robust_accuracy) << ',' << format_double(r.mean_queries) << ','
        << format_double(r.success_rate) << ',' << r.config_hash << ',' << r.seed << '\n';
  }
}

json ResultsTable::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json jr;
    jr["defense"] = r.defense;
    jr["attack"] = r.attack;
    jr["clean_accuracy"] = r.clean_accuracy;
    jr["robust_accuracy"] = r.robust_accuracy;
    jr["mean_queries"] = r.mean_queries;
    jr["success_rate"] = r.success_rate;
    jr["config_hash"] = r.config_hash;
    jr["seed"] = r.seed;
    rows_json.push_back(std::move(jr));
  }
  json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  doc["rows"] = std::move(rows_json);
  return doc;
}

ResultsTable ResultsTable::from_json(const json& doc) {
  ResultsTable table;
  for (const auto& jr : doc.at("rows")) {
    ResultRow r;
    r.defense = jr.at("defense").get<std::string>();
    r.attack = jr.at("attack").get<std::string>();
    r.clean_accuracy = jr.at("clean_accuracy").get<double>();
    r.robust_accuracy = jr.at("robust_accuracy").get<double>();
    r.mean_queries = jr.at("mean_queries").get<double>();
    r.success_rate = jr.at("success_rate").get<double>();
    r.config_hash = jr.at("config_hash").get<std::string>();
    r.seed = jr.at("seed").get<std::uint64_t>();
    table.rows.push_back(std::move(r));
  }
  return table;
}

ResultsTable ResultsTable::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("read_csv: empty file " + path);

  ResultsTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw Error("read_csv: malformed row in " + path);
    ResultRow r;
    r.defense = cells[0];
    r.attack = cells[1];
    r.clean_accuracy = std::stod(cells[2]);
    r.robust_accuracy = std::stod(cells[3]);
    r.mean_queries = std::stod(cells[4]);
    r.success_rate = std::stod(cells[5]);
    r.config_hash = cells[6];
    r.seed = std::stoull(cells[7]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

}  // namespace antiadv
