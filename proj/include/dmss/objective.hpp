#pragma once

// Cost-accuracy objectives. Two kinds: the scalarized objective
// alpha*cost + (1-alpha)*(1-acc) over normalized cost and accuracy, and a
// chance-threshold objective (pick the cheapest model whose accuracy clears a
// target with sufficient probability) kept for worked-example fidelity and
// baseline parity. Lower objective is better throughout.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmss/core.hpp"

namespace dmss {

enum class ObjectiveKind { Scalarized, ChanceThreshold };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::Scalarized;
  double alpha = 0.5;       // scalarized trade-off in [0,1]
  double acc_target = 0.0;  // chance-threshold target accuracy
  double confidence = 0.9;  // chance-threshold confidence in (0,1]
  double cost_normalizer = 1.0;
  double acc_lo = 0.0;
  double acc_hi = 1.0;

  void validate() const {
    if (kind == ObjectiveKind::Scalarized && !(alpha >= 0.0 && alpha <= 1.0))
      throw ConfigError("objective: alpha must be in [0,1]");
    if (kind == ObjectiveKind::ChanceThreshold &&
        !(confidence > 0.0 && confidence <= 1.0))
      throw ConfigError("objective: confidence must be in (0,1]");
    if (!(cost_normalizer > 0.0))
      throw ConfigError("objective: cost_normalizer must be > 0");
    if (!(acc_lo < acc_hi))
      throw ConfigError("objective: acc_lo must be < acc_hi");
  }

  double normalized_cost(double cost) const { return cost / cost_normalizer; }

  double normalized_accuracy(double acc) const {
    const double t = (acc - acc_lo) / (acc_hi - acc_lo);
    return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  }

  /// Objective value of running a model with the given selection cost and
  /// (predicted or true) accuracy. Chance-threshold runs are
  /// cost-denominated: accuracy enters through the selection constraint,
  /// not the value.
  double value(double cost, double acc) const {
    if (kind == ObjectiveKind::ChanceThreshold) return normalized_cost(cost);
    return alpha * normalized_cost(cost) +
           (1.0 - alpha) * (1.0 - normalized_accuracy(acc));
  }

  /// Sampling cost expressed in the same units as `value`, so the planner
  /// can subtract it from an expected objective improvement.
  double sample_cost_in_objective_units(double sample_cost_gflops) const {
    if (kind == ObjectiveKind::ChanceThreshold)
      return normalized_cost(sample_cost_gflops);
    return alpha * normalized_cost(sample_cost_gflops);
  }
};

inline ObjectiveSpec make_scalarized(double alpha, double cost_normalizer = 1.0,
                                     double acc_lo = 0.0, double acc_hi = 1.0) {
  ObjectiveSpec s;
  s.kind = ObjectiveKind::Scalarized;
  s.alpha = alpha;
  s.cost_normalizer = cost_normalizer;
  s.acc_lo = acc_lo;
  s.acc_hi = acc_hi;
  s.validate();
  return s;
}

inline ObjectiveSpec make_chance_threshold(double acc_target, double confidence,
                                           double cost_normalizer = 1.0) {
  ObjectiveSpec s;
  s.kind = ObjectiveKind::ChanceThreshold;
  s.acc_target = acc_target;
  s.confidence = confidence;
  s.cost_normalizer = cost_normalizer;
  s.validate();
  return s;
}

inline double scalarized_objective(const ObjectiveSpec& spec, double cost,
                                   double acc) {
  if (spec.kind != ObjectiveKind::Scalarized)
    throw std::invalid_argument("scalarized_objective: spec is not scalarized");
  return spec.value(cost, acc);
}

/// Expected selection cost over a discrete outcome distribution.
inline double expected_selection_cost(
    const std::vector<std::pair<double, double>>& prob_cost) {
  double psum = 0.0, ev = 0.0;
  for (const auto& [p, c] : prob_cost) {
    if (p < 0.0)
      throw std::invalid_argument("expected_selection_cost: negative probability");
    psum += p;
    ev += p * c;
  }
  if (std::fabs(psum - 1.0) > 1e-9)
    throw std::invalid_argument(
        "expected_selection_cost: probabilities sum to " + std::to_string(psum));
  return ev;
}

}  // namespace dmss
