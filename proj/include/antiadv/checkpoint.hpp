#pragma once

#include "antiadv/mlp.hpp"

#include <string>

namespace antiadv {

// Versioned JSON checkpoint: dimensions, row-major weight arrays, the
// activation tag and free-form provenance (dataset/train settings). Loading
// reproduces the parameters bit for bit.
void save_checkpoint(const MlpParams& params, const std::string& path,
                     const std::string& provenance_json = "{}");

struct Checkpoint {
  MlpParams params;
  std::string provenance_json;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace antiadv
