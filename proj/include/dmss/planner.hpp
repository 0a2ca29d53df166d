#pragma once

// Measurement-driven sampling planner. Each iteration estimates, for every
// unsampled model, the expected objective improvement its statistic would
// enable (component ii) minus its sampling cost, samples the best candidate
// while the net gain stays positive, and falls back when the observed
// statistic combination is too thinly supported by the historical data.

#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/predictor.hpp"
#include "dmss/prob.hpp"
#include "dmss/selector.hpp"

#include "json.hpp"

namespace dmss {

/// Per-run scratch shared across segments: the accuracy-prediction cache and
/// a memo of objective-under-selection values keyed by canonicalized
/// observation sets. Both only ever hold values identical to recomputation.
struct EvalCaches {
  PredictionCache predictions;
  std::unordered_map<ObsKey, double, ObsKeyHash> objectives;
};

enum class Termination { NoPositiveGain, DriftFallback, MaxIterations, Deadline };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::NoPositiveGain: return "no_positive_gain";
    case Termination::DriftFallback: return "drift_fallback";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::Deadline: return "deadline";
  }
  return "?";
}

struct PlanStep {
  int model_id = 0;
  int bin = 0;
  double raw = 0.0;
  double gain = 0.0;             // estimated net benefit G when chosen
  double j_before = 0.0;         // J(O) before this sample
  double j_after_expected = 0.0; // sum_s p(s|O) J(O u {(m,s)})
  int tentative_model = 0;       // selector's choice after appending
};

struct PlanTranscript {
  std::vector<PlanStep> steps;             // samples kept in the final obs
  std::optional<PlanStep> rolled_back;     // drift-fallback sample (charged)
  Termination termination = Termination::NoPositiveGain;
  ObservationSet final_obs;
  SelectionResult selection;
  double sampling_cost_gflops = 0.0;       // includes the rolled-back sample
  double charged_cost_gflops = 0.0;        // sampling + selection cost
};

namespace detail {

// Internal gain/objective evaluations represent each observation by its bin
// centroid so that repeated (model, bin) combinations share cache entries;
// the final selection still sees the raw statistics.
inline ObservationSet binned_rep(const HistoricalDataset& ds,
                                 const ObservationSet& obs) {
  ObservationSet rep;
  for (const auto& o : obs.entries())
    rep.push({o.model_id, o.bin, ds.bin_centroid(o.model_id, o.bin)});
  return rep;
}

}  // namespace detail

/// J(O): the objective attained by selecting on the observations in O,
/// evaluated at the selected model's cost and predicted accuracy.
inline double objective_under_selection(const Engine& eng,
                                        const ObservationSet& obs,
                                        EvalCaches& caches) {
  const ObsKey key = ObsKey::of(obs);
  auto it = caches.objectives.find(key);
  if (it != caches.objectives.end()) return it->second;
  const double j = select(eng, obs, &caches.predictions).objective_value;
  caches.objectives.emplace(key, j);
  return j;
}

inline double objective_under_selection(const Engine& eng,
                                        const ObservationSet& obs) {
  EvalCaches caches;
  return objective_under_selection(eng, obs, caches);
}

/// Component (ii) of the sampling decision for `model_id` given `obs`:
/// J(obs) minus the probability-weighted objective over the statistic values
/// the model could reveal. `prob_obs` conditions the probability estimates
/// (it defaults to `obs`; passing a different set reproduces diagnostics that
/// deliberately ignore part of the evidence). Zero-probability bins are
/// skipped.
inline double component_ii(const Engine& eng, int model_id,
                           const ObservationSet& obs,
                           const ObservationSet& prob_obs, EvalCaches& caches) {
  if (obs.contains(model_id))
    throw std::invalid_argument("component_ii: model " +
                                std::to_string(model_id) + " already sampled");
  const int n = match_count(eng.ds(), prob_obs);
  if (n == 0)
    throw std::invalid_argument(
        "component_ii: observation set has zero historical support");

  const auto counts = cond_counts(eng.ds(), model_id, prob_obs);
  const double j_base = objective_under_selection(eng, obs, caches);
  double expected = 0.0;
  for (int b = 0; b < static_cast<int>(counts.size()); ++b) {
    if (counts[b] == 0) continue;
    const double p = static_cast<double>(counts[b]) / n;
    ObservationSet ext =
        obs.with({model_id, b, eng.ds().bin_centroid(model_id, b)});
    expected += p * objective_under_selection(eng, ext, caches);
  }
  return j_base - expected;
}

inline double component_ii(const Engine& eng, int model_id,
                           const ObservationSet& obs, EvalCaches& caches) {
  return component_ii(eng, model_id, obs, obs, caches);
}

inline double component_ii(const Engine& eng, int model_id,
                           const ObservationSet& obs) {
  EvalCaches caches;
  return component_ii(eng, model_id, obs, obs, caches);
}

/// Net estimated benefit of sampling `model_id` next: component (ii) minus
/// the model's sampling cost expressed in objective units.
inline double sampling_gain(const Engine& eng, int model_id,
                            const ObservationSet& obs, EvalCaches& caches) {
  return component_ii(eng, model_id, obs, caches) -
         eng.objective.sample_cost_in_objective_units(
             eng.profiles()[model_id].sample_cost);
}

/// Run the sampling planner on one segment. Sampling a model reads its
/// recorded statistic from the segment (the trace-driven stand-in for
/// running it on exemplar frames). `initial_obs` is empty in normal
/// operation; tests use it to start mid-sequence.
inline PlanTranscript plan_segment(const Engine& eng, const SegmentRecord& segment,
                                   EvalCaches& caches, int t_min = kDefaultTmin,
                                   int max_iters = -1,
                                   ObservationSet initial_obs = {}) {
  const int m_count = eng.model_count();
  if (static_cast<int>(segment.stats.size()) != m_count)
    throw DataError("plan_segment: segment does not cover the model set");
  if (max_iters < 0) max_iters = m_count - 1;

  PlanTranscript tr;
  ObservationSet obs = std::move(initial_obs);

  if (!support_ok(eng.ds(), obs, t_min)) {
    // Not even the starting set is trustworthy; select on it as-is.
    tr.termination = Termination::DriftFallback;
  } else {
    while (true) {
      if (static_cast<int>(tr.steps.size()) >= max_iters) {
        tr.termination = Termination::MaxIterations;
        break;
      }
      const ObservationSet rep = detail::binned_rep(eng.ds(), obs);
      const double j_before = objective_under_selection(eng, rep, caches);

      int best_model = -1;
      double best_gain = 0.0;
      double best_cii = 0.0;
      for (int m = 0; m < m_count; ++m) {
        if (obs.contains(m)) continue;
        const double cii = component_ii(eng, m, rep, caches);
        const double g = cii - eng.objective.sample_cost_in_objective_units(
                                   eng.profiles()[m].sample_cost);
        if (best_model < 0 || g > best_gain) {
          best_model = m;
          best_gain = g;
          best_cii = cii;
        }
      }
      if (best_model < 0 || best_gain <= 0.0) {
        tr.termination = Termination::NoPositiveGain;
        break;
      }

      const double raw = segment.stats[best_model];
      const int bin = eng.ds().discretize(best_model, raw);
      PlanStep step;
      step.model_id = best_model;
      step.bin = bin;
      step.raw = raw;
      step.gain = best_gain;
      step.j_before = j_before;
      step.j_after_expected = j_before - best_cii;

      ObservationSet enlarged = obs.with({best_model, bin, raw});
      if (!support_ok(eng.ds(), enlarged, t_min)) {
        step.tentative_model = select(eng, obs, &caches.predictions).model_id;
        tr.rolled_back = step;
        tr.termination = Termination::DriftFallback;
        break;
      }
      obs = std::move(enlarged);
      step.tentative_model = select(eng, obs, &caches.predictions).model_id;
      tr.steps.push_back(step);
    }
  }

  tr.final_obs = obs;
  tr.selection = select(eng, obs, &caches.predictions);

  for (const auto& s : tr.steps)
    tr.sampling_cost_gflops += eng.profiles()[s.model_id].sample_cost;
  if (tr.rolled_back)
    tr.sampling_cost_gflops += eng.profiles()[tr.rolled_back->model_id].sample_cost;
  tr.charged_cost_gflops =
      tr.sampling_cost_gflops + eng.profiles()[tr.selection.model_id].selection_cost;
  return tr;
}

inline PlanTranscript plan_segment(const Engine& eng, const SegmentRecord& segment,
                                   int t_min = kDefaultTmin, int max_iters = -1) {
  EvalCaches caches;
  return plan_segment(eng, segment, caches, t_min, max_iters);
}

inline nlohmann::json to_json(const PlanStep& s) {
  return {{"model_id", s.model_id},   {"bin", s.bin},
          {"raw", s.raw},             {"gain", s.gain},
          {"j_before", s.j_before},   {"j_after_expected", s.j_after_expected},
          {"tentative_model", s.tentative_model}};
}

inline nlohmann::json to_json(const PlanTranscript& tr) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : tr.steps) steps.push_back(to_json(s));
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : tr.final_obs.entries())
    obs.push_back({{"model_id", o.model_id}, {"bin", o.bin}, {"raw", o.raw}});
  nlohmann::json j{{"steps", steps},
                   {"termination", to_string(tr.termination)},
                   {"final_obs", obs},
                   {"selected_model", tr.selection.model_id},
                   {"predicted_accuracy", tr.selection.predicted_accuracy},
                   {"objective_value", tr.selection.objective_value},
                   {"sampling_cost_gflops", tr.sampling_cost_gflops},
                   {"charged_cost_gflops", tr.charged_cost_gflops}};
  if (tr.rolled_back) j["rolled_back"] = to_json(*tr.rolled_back);
  return j;
}

}  // namespace dmss
