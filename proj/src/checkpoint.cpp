#include "antiadv/checkpoint.hpp"

#include <json.hpp>

#include <fstream>

namespace antiadv {

using nlohmann::json;

namespace {
constexpr int kSchemaVersion = 1;
}

void save_checkpoint(const MlpParams& params, const std::string& path,
                     const std::string& provenance_json) {
  params.validate();
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "mlp-checkpoint";
  doc["input_dim"] = params.input_dim();
  doc["classes"] = params.class_count();
  doc["activation"] = "relu";
  doc["provenance"] = json::parse(provenance_json);

  json layers = json::array();
  for (const auto& layer : params.layers) {
    json jl;
    jl["rows"] = layer.weight.rows();
    jl["cols"] = layer.weight.cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    jl["weights"] = w;
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    jl["bias"] = b;
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);

  std::ofstream out(path);
  if (!out) throw Error("save_checkpoint: cannot open " + path);
  out << doc.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_checkpoint: cannot open " + path);
  json doc = json::parse(in);
  if (doc.value("schema_version", -1) != kSchemaVersion)
    throw ConfigError("load_checkpoint: unsupported schema version");
  if (doc.value("kind", "") != "mlp-checkpoint")
    throw ConfigError("load_checkpoint: not a model checkpoint");
  if (doc.value("activation", "") != "relu")
    throw ConfigError("load_checkpoint: unknown activation tag");

  Checkpoint cp;
  for (const auto& jl : doc.at("layers")) {
    MlpParams::Layer layer;
    const auto rows = jl.at("rows").get<Eigen::Index>();
    const auto cols = jl.at("cols").get<Eigen::Index>();
    const auto w = jl.at("weights").get<std::vector<double>>();
    const auto b = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows)
      throw ConfigError("load_checkpoint: layer size mismatch");
    layer.weight.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        layer.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    layer.bias = Eigen::Map<const Vec>(b.data(), rows);
    cp.params.layers.push_back(std::move(layer));
  }
  cp.params.validate();
  cp.provenance_json = doc.value("provenance", json::object()).dump();
  return cp;
}

}  // namespace antiadv
