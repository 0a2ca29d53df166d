#pragma once

// Model selection: evaluate the objective for every candidate model under
// predicted accuracies and return the argmin. Scalarized selection runs on
// kNN predictions; chance-threshold selection picks the cheapest model whose
// accuracy clears the target with the required empirical probability under
// the observation-filtered history.

#include <limits>
#include <span>
#include <vector>

#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/predictor.hpp"
#include "dmss/prob.hpp"

namespace dmss {

/// Immutable bundle of everything selection and planning read: the dataset,
/// the candidate models, the predictor configuration, and the objective.
struct Engine {
  const HistoricalDataset* dataset = nullptr;
  const std::vector<ModelProfile>* models = nullptr;
  KnnConfig knn;
  ObjectiveSpec objective;

  const HistoricalDataset& ds() const { return *dataset; }
  const std::vector<ModelProfile>& profiles() const { return *models; }
  int model_count() const { return static_cast<int>(models->size()); }
};

struct SelectionResult {
  int model_id = 0;
  double predicted_accuracy = 0.0;
  double objective_value = 0.0;
};

namespace detail {

// Tie order: lower selection cost, then lower model id.
inline bool better_tie(const ModelProfile& a, const ModelProfile& b) {
  if (a.selection_cost != b.selection_cost)
    return a.selection_cost < b.selection_cost;
  return a.model_id < b.model_id;
}

inline bool candidate_allowed(std::span<const int> candidates, int id) {
  if (candidates.empty()) return true;
  for (int c : candidates)
    if (c == id) return true;
  return false;
}

inline SelectionResult select_chance(const Engine& eng, const ObservationSet& obs,
                                     std::span<const int> candidates) {
  const auto& spec = eng.objective;
  const auto matches = matching_records(eng.ds(), obs);
  const double n = static_cast<double>(matches.size());

  const ModelProfile* chosen = nullptr;
  double chosen_acc = 0.0;
  for (const auto& mp : eng.profiles()) {
    if (!candidate_allowed(candidates, mp.model_id)) continue;
    long hits = 0;
    double acc_sum = 0.0;
    for (int rec : matches) {
      const double a = eng.ds().record(rec).accuracies[mp.model_id];
      acc_sum += a;
      if (a >= spec.acc_target) ++hits;
    }
    const bool feasible =
        n > 0 && static_cast<double>(hits) >= spec.confidence * n - 1e-9;
    if (feasible && (chosen == nullptr || detail::better_tie(mp, *chosen))) {
      chosen = &mp;
      chosen_acc = acc_sum / n;
    }
  }
  if (chosen == nullptr) {
    // No model clears the target confidently: fall back to the largest.
    const ModelProfile* largest = nullptr;
    for (const auto& mp : eng.profiles()) {
      if (!candidate_allowed(candidates, mp.model_id)) continue;
      if (largest == nullptr || detail::better_tie(*largest, mp)) largest = &mp;
    }
    chosen = largest;
    double acc_sum = 0.0;
    for (int rec : matches) acc_sum += eng.ds().record(rec).accuracies[chosen->model_id];
    chosen_acc = n > 0 ? acc_sum / n : eng.ds().mean_accuracy()[chosen->model_id];
  }
  return {chosen->model_id, chosen_acc, spec.value(chosen->selection_cost, chosen_acc)};
}

}  // namespace detail

/// Pick the model minimizing the objective given the observations sampled so
/// far. `candidates` restricts the choice to a subset of model ids (empty
/// span = all models). Ties break by lower selection cost, then lower id.
inline SelectionResult select(const Engine& eng, const ObservationSet& obs,
                              PredictionCache* cache = nullptr,
                              std::span<const int> candidates = {}) {
  if (eng.objective.kind == ObjectiveKind::ChanceThreshold)
    return detail::select_chance(eng, obs, candidates);

  const std::vector<double>& pred =
      cache ? predict_accuracy(eng.ds(), eng.knn, obs, *cache)
            : predict_accuracy(eng.ds(), eng.knn, obs);
  const ModelProfile* best = nullptr;
  double best_obj = std::numeric_limits<double>::infinity();
  for (const auto& mp : eng.profiles()) {
    if (!detail::candidate_allowed(candidates, mp.model_id)) continue;
    const double obj = eng.objective.value(mp.selection_cost, pred[mp.model_id]);
    if (best == nullptr || obj < best_obj ||
        (obj == best_obj && detail::better_tie(mp, *best))) {
      best = &mp;
      best_obj = obj;
    }
  }
  return {best->model_id, pred[best->model_id], best_obj};
}

/// Selection as if accuracies were known: argmin of the objective at each
/// model's true accuracy. Chance runs pick the cheapest model actually
/// meeting the target (largest if none does).
inline SelectionResult oracle_select_model(const Engine& eng,
                                           const SegmentRecord& segment,
                                           std::span<const int> candidates = {}) {
  const auto& spec = eng.objective;
  const ModelProfile* best = nullptr;
  double best_obj = std::numeric_limits<double>::infinity();
  if (spec.kind == ObjectiveKind::ChanceThreshold) {
    for (const auto& mp : eng.profiles()) {
      if (!detail::candidate_allowed(candidates, mp.model_id)) continue;
      if (segment.accuracies[mp.model_id] >= spec.acc_target &&
          (best == nullptr || detail::better_tie(mp, *best)))
        best = &mp;
    }
    if (best == nullptr) {
      for (const auto& mp : eng.profiles()) {
        if (!detail::candidate_allowed(candidates, mp.model_id)) continue;
        if (best == nullptr || detail::better_tie(*best, mp)) best = &mp;
      }
    }
  } else {
    for (const auto& mp : eng.profiles()) {
      if (!detail::candidate_allowed(candidates, mp.model_id)) continue;
      const double obj =
          spec.value(mp.selection_cost, segment.accuracies[mp.model_id]);
      if (best == nullptr || obj < best_obj ||
          (obj == best_obj && detail::better_tie(mp, *best))) {
        best = &mp;
        best_obj = obj;
      }
    }
  }
  const double acc = segment.accuracies[best->model_id];
  return {best->model_id, acc, spec.value(best->selection_cost, acc)};
}

}  // namespace dmss
