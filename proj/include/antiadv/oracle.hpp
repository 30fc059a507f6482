#pragma once

#include "antiadv/anti_adversary.hpp"
#include "antiadv/mlp.hpp"

#include <functional>
#include <optional>

namespace antiadv {

enum class AccessLevel { Score, Decision };

// One raw evaluation of the wrapped model: its probabilities plus the
// number of network passes it cost internally.
struct Probe {
  Vec probs;
  long forwards = 0;
  long backwards = 0;
};

using ProbeFn = std::function<Probe(const Vec&)>;

struct QueryResponse {
  Eigen::Index label = -1;
  Vec probs;  // empty under decision-level access
};

// Black-box view of a classifier with exact query metering: the counter
// advances by exactly one per evaluation, evaluations past the budget are
// rejected, and the wrapped model's internal passes are tallied separately
// as compute overhead (they are never charged to the attacker).
class QueryOracle {
 public:
  QueryOracle(ProbeFn probe, AccessLevel level,
              std::optional<long> budget = std::nullopt)
      : probe_(std::move(probe)), level_(level), budget_(budget) {}

  QueryResponse query(const Vec& x) {
    if (!can_query())
      throw BudgetError("QueryOracle: budget of " + std::to_string(*budget_) +
                        " queries exhausted");
    Probe p = probe_(x);
    if (p.probs.size() > 1) require_prob_vec(p.probs);  // size-1 probes are raw scores
    ++queries_;
    forwards_ += p.forwards;
    backwards_ += p.backwards;
    QueryResponse r;
    r.label = argmax_lowest(p.probs);
    if (level_ == AccessLevel::Score) r.probs = std::move(p.probs);
    return r;
  }

  bool can_query(long n = 1) const {
    return !budget_ || queries_ + n <= *budget_;
  }

  long queries() const { return queries_; }
  long internal_forwards() const { return forwards_; }
  long internal_backwards() const { return backwards_; }
  AccessLevel access() const { return level_; }
  std::optional<long> budget() const { return budget_; }

 private:
  ProbeFn probe_;
  AccessLevel level_;
  std::optional<long> budget_;
  long queries_ = 0;
  long forwards_ = 0;
  long backwards_ = 0;
};

// Plain classifier: one forward pass per evaluation.
ProbeFn make_probe(const MlpParams& f);

// Classifier wrapped with the anti-adversary layer; overhead passes are
// reported through the Probe.
ProbeFn make_probe(const MlpParams& f, const AntiAdvConfig& cfg);

// Scalar objective posing as a one-class model, for derivative-free
// optimization experiments. The single "probability" is the raw value.
ProbeFn make_scalar_probe(std::function<double(const Vec&)> field);

}  // namespace antiadv
