#pragma once

#include "antiadv/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace antiadv {

// FNV-1a over the canonical (key-sorted) JSON dump; stable across runs and
// platforms, reproduced verbatim in every emitted artifact.
std::string config_hash(const nlohmann::json& config);

nlohmann::json load_json_file(const std::string& path);

// Reject any key not in `allowed`; complain about missing `required` keys.
void check_keys(const nlohmann::json& obj, const std::string& where,
                const std::vector<std::string>& allowed,
                const std::vector<std::string>& required = {});

// Full schema validation for one CLI subcommand; throws ConfigError.
void validate_config(const nlohmann::json& config, const std::string& command);

constexpr int kConfigSchemaVersion = 1;

struct ResultRow {
  std::string defense;
  std::string attack;
  double clean_accuracy = 0.0;
  double robust_accuracy = 0.0;
  double mean_queries = 0.0;
  double success_rate = 0.0;
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Fixed column order: defense, attack, clean_accuracy, robust_accuracy,
// mean_queries, success_rate, config_hash, seed.
struct ResultsTable {
  std::vector<ResultRow> rows;

  void write_csv(const std::string& path) const;
  nlohmann::json to_json() const;
  static ResultsTable from_json(const nlohmann::json& doc);
  static ResultsTable read_csv(const std::string& path);
};

// Shortest decimal form that parses back to the same double; shared by the
// CSV and JSON writers so the two artifacts agree cell for cell.
std::string format_double(double v);

}  // namespace antiadv
