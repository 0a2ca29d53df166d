#pragma once

// Independent reference implementations used to check the library: straight
// linear scans and full sorts, no posting lists, no caches, no shared code
// with the paths under test beyond the domain types.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/predictor.hpp"
#include "dmss/selector.hpp"

namespace oracles {

using dmss::Engine;
using dmss::HistoricalDataset;
using dmss::ObservationSet;
using dmss::ObjectiveKind;

// N(O) by scanning every record.
inline int naive_match_count(const HistoricalDataset& ds, const ObservationSet& obs) {
  int n = 0;
  for (int i = 0; i < ds.size(); ++i) {
    bool ok = true;
    for (const auto& o : obs.entries()) {
      if (ds.binning().bin_of(o.model_id, ds.record(i).stats[o.model_id]) != o.bin) {
        ok = false;
        break;
      }
    }
    n += ok;
  }
  return n;
}

inline double naive_cond_prob(const HistoricalDataset& ds, int model_id, int bin,
                              const ObservationSet& obs) {
  const int denom = naive_match_count(ds, obs);
  ObservationSet ext = obs.with({model_id, bin, 0.0});
  return static_cast<double>(naive_match_count(ds, ext)) / denom;
}

// Full-sort kNN over z-normalized raw statistics of the observed models.
inline std::vector<double> naive_knn_predict(const HistoricalDataset& ds,
                                             const dmss::KnnConfig& cfg,
                                             const ObservationSet& obs) {
  std::vector<std::pair<double, int>> dist;
  bool any_feature = false;
  for (int i = 0; i < ds.size(); ++i) {
    double d = 0.0;
    for (const auto& o : obs.entries()) {
      if (ds.stat_sd(o.model_id) <= 0.0) continue;
      any_feature = true;
      const double a = (o.raw - ds.stat_mean(o.model_id)) / ds.stat_sd(o.model_id);
      const double b = (ds.record(i).stats[o.model_id] - ds.stat_mean(o.model_id)) /
                       ds.stat_sd(o.model_id);
      d += cfg.metric == dmss::DistanceMetric::L1 ? std::fabs(a - b)
                                                  : (a - b) * (a - b);
    }
    dist.push_back({d, i});
  }
  if (obs.empty() || !any_feature) return ds.mean_accuracy();
  std::sort(dist.begin(), dist.end());
  const int k = std::min(cfg.k, ds.size());
  std::vector<double> pred(ds.model_count(), 0.0);
  for (int i = 0; i < k; ++i)
    for (int m = 0; m < ds.model_count(); ++m)
      pred[m] += ds.record(dist[i].second).accuracies[m] / k;
  return pred;
}

// Selection re-derived from the definitions (argmin loop / cheapest feasible).
inline int naive_select(const Engine& eng, const ObservationSet& obs) {
  const auto& spec = eng.objective;
  if (spec.kind == ObjectiveKind::ChanceThreshold) {
    std::vector<int> match;
    for (int i = 0; i < eng.ds().size(); ++i) {
      bool ok = true;
      for (const auto& o : obs.entries())
        if (eng.ds().binning().bin_of(o.model_id,
                                      eng.ds().record(i).stats[o.model_id]) != o.bin)
          ok = false;
      if (ok) match.push_back(i);
    }
    for (const auto& mp : eng.profiles()) {  // profiles ordered by cost
      long hits = 0;
      for (int rec : match)
        if (eng.ds().record(rec).accuracies[mp.model_id] >= spec.acc_target) ++hits;
      if (!match.empty() &&
          static_cast<double>(hits) >= spec.confidence * match.size() - 1e-9)
        return mp.model_id;
    }
    return eng.model_count() - 1;
  }
  const auto pred = naive_knn_predict(eng.ds(), eng.knn, obs);
  int best = 0;
  double best_obj = spec.value(eng.profiles()[0].selection_cost, pred[0]);
  for (int m = 1; m < eng.model_count(); ++m) {
    const double obj = spec.value(eng.profiles()[m].selection_cost, pred[m]);
    if (obj < best_obj) {
      best = m;
      best_obj = obj;
    }
  }
  return best;
}

inline double naive_objective_under_selection(const Engine& eng,
                                              const ObservationSet& obs) {
  const int sel = naive_select(eng, obs);
  if (eng.objective.kind == ObjectiveKind::ChanceThreshold)
    return eng.objective.value(eng.profiles()[sel].selection_cost, 0.0);
  const auto pred = naive_knn_predict(eng.ds(), eng.knn, obs);
  return eng.objective.value(eng.profiles()[sel].selection_cost, pred[sel]);
}

// Component (ii) by full enumeration of the model's bins, probabilities from
// linear scans, hypothetical raws from bin centroids.
inline double naive_component_ii(const Engine& eng, int model_id,
                                 const ObservationSet& obs) {
  const double j_base = naive_objective_under_selection(eng, obs);
  const int denom = naive_match_count(eng.ds(), obs);
  double expected = 0.0;
  for (int b = 0; b < eng.ds().binning().bins_for(model_id); ++b) {
    ObservationSet ext = obs.with({model_id, b, 0.0});
    const int num = naive_match_count(eng.ds(), ext);
    if (num == 0) continue;
    ObservationSet hyp =
        obs.with({model_id, b, eng.ds().bin_centroid(model_id, b)});
    expected += static_cast<double>(num) / denom *
                naive_objective_under_selection(eng, hyp);
  }
  return j_base - expected;
}

// First model the exhaustive expected-gain argmax would sample from an empty
// observation set, or -1 when no gain is positive. Ties break to the lower
// model id, matching the planner's declared tie-break.
inline int naive_first_sample(const Engine& eng) {
  ObservationSet empty;
  int best = -1;
  double best_gain = 0.0;
  for (int m = 0; m < eng.model_count(); ++m) {
    const double gain = naive_component_ii(eng, m, empty) -
                        eng.objective.sample_cost_in_objective_units(
                            eng.profiles()[m].sample_cost);
    if (gain > 0.0 && (best < 0 || gain > best_gain)) {
      best = m;
      best_gain = gain;
    }
  }
  return best;
}

}  // namespace oracles
