#include "antiadv/oracle.hpp"

namespace antiadv {

ProbeFn make_probe(const MlpParams& f) {
  return [&f](const Vec& x) {
    Probe p;
    p.probs = softmax(mlp_forward(f, x));
    p.forwards = 1;
    return p;
  };
}

ProbeFn make_probe(const MlpParams& f, const AntiAdvConfig& cfg) {
  cfg.validate();
  if (cfg.mode != AntiMode::SignedGd)
    throw ConfigError("make_probe: only the signed-gd layer is deployable as a classifier");
  return [&f, cfg](const Vec& x) {
    AntiAdvResult r = anti_forward(f, x, cfg);
    Probe p;
    p.probs = std::move(r.probs);
    p.forwards = r.trace.forward_passes;
    p.backwards = r.trace.backward_passes;
    return p;
  };
}

ProbeFn make_scalar_probe(std::function<double(const Vec&)> field) {
  return [field = std::move(field)](const Vec& x) {
    Probe p;
    p.probs = Vec::Constant(1, field(x));
    p.forwards = 1;
    return p;
  };
}

}  // namespace antiadv
