#pragma once

// Comparison policies: sample-once, the confidence cascade, tiered sampling,
// per-segment oracle selection, and random search over policy control
// parameters. All policies emit per-segment decision rows that the simulator
// aggregates; sampling and selection costs are charged from the model
// profiles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/selector.hpp"

namespace dmss {

/// One segment's outcome under some policy.
struct SegmentDecision {
  std::string video_id;
  int segment_index = 0;
  int frames = 0;
  int selected_model = 0;
  std::vector<int> sampled_models;  // models charged a sample cost
  double sample_cost = 0.0;
  double selection_cost = 0.0;
  double total_cost = 0.0;          // sample_cost + selection_cost
  double true_accuracy = 0.0;       // stored accuracy of the selected model
};

namespace detail {

inline SegmentDecision make_decision(const SegmentRecord& seg,
                                     const std::vector<ModelProfile>& models,
                                     int selected, std::vector<int> sampled) {
  SegmentDecision d;
  d.video_id = seg.video_id;
  d.segment_index = seg.segment_index;
  d.frames = seg.frame_count;
  d.selected_model = selected;
  d.sampled_models = std::move(sampled);
  for (int m : d.sampled_models) d.sample_cost += models[m].sample_cost;
  d.selection_cost = models[selected].selection_cost;
  d.total_cost = d.sample_cost + d.selection_cost;
  d.true_accuracy = seg.accuracies[selected];
  return d;
}

// Group segment indices by video, preserving the trace's stable order.
inline std::vector<std::vector<int>> group_by_video(
    const std::vector<SegmentRecord>& trace) {
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(trace.size()); ++i) {
    if (groups.empty() || trace[i].video_id != trace[groups.back().front()].video_id)
      groups.push_back({});
    groups.back().push_back(i);
  }
  return groups;
}

inline ObservationSet full_observation(const HistoricalDataset& ds,
                                       const SegmentRecord& seg) {
  ObservationSet obs;
  for (int m = 0; m < ds.model_count(); ++m)
    obs.push({m, ds.discretize(m, seg.stats[m]), seg.stats[m]});
  return obs;
}

inline std::vector<int> all_model_ids(int m_count) {
  std::vector<int> ids(m_count);
  for (int i = 0; i < m_count; ++i) ids[i] = i;
  return ids;
}

}  // namespace detail

/// Static baseline: per video, sample every model on the first segment,
/// select once on those statistics, and run the chosen model for the rest of
/// the video. `use_oracle_accuracy` swaps the selector for oracle selection
/// on the first segment (diagnostic variant).
inline std::vector<SegmentDecision> sample_once(
    const std::vector<SegmentRecord>& trace, const Engine& eng,
    bool use_oracle_accuracy = false) {
  std::vector<SegmentDecision> out;
  out.reserve(trace.size());
  PredictionCache cache;
  for (const auto& group : detail::group_by_video(trace)) {
    const SegmentRecord& head = trace[group.front()];
    const int fixed =
        use_oracle_accuracy
            ? oracle_select_model(eng, head).model_id
            : select(eng, detail::full_observation(eng.ds(), head), &cache).model_id;
    for (std::size_t j = 0; j < group.size(); ++j) {
      std::vector<int> sampled =
          j == 0 ? detail::all_model_ids(eng.model_count()) : std::vector<int>{};
      out.push_back(detail::make_decision(trace[group[j]], eng.profiles(), fixed,
                                          std::move(sampled)));
    }
  }
  return out;
}

/// Confidence cascade (small model first, escalate below threshold c).
struct CascadeParams {
  double l = 0.0;  // confidence band lower bound
  double h = 1.0;  // confidence band upper bound (exclusive)
  double c = 0.5;  // escalation threshold on the in-range mean confidence
  int small_id = 0;
  int large_id = 1;
  bool escalate_on_empty = false;  // behavior when no detections fall in [l,h)

  void validate(const std::vector<ModelProfile>& models) const {
    if (!(l >= 0.0 && l < h && h <= 1.0))
      throw ConfigError("cascade: need 0 <= l < h <= 1");
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("cascade: c must be in [0,1]");
    if (small_id < 0 || large_id >= static_cast<int>(models.size()))
      throw ConfigError("cascade: model id out of range");
    if (!(models[small_id].selection_cost < models[large_id].selection_cost))
      throw ConfigError("cascade: small model must be cheaper than large");
  }
};

/// One cascade step. The segment's statistic for the small model is read as
/// the mean confidence of its detections inside [l, h); NaN encodes "no
/// detections in range".
inline SegmentDecision cascade_segment(const SegmentRecord& seg,
                                       const CascadeParams& p,
                                       const std::vector<ModelProfile>& models) {
  const double conf = seg.stats[p.small_id];
  bool escalate;
  if (std::isnan(conf)) {
    escalate = p.escalate_on_empty;
  } else {
    escalate = conf < p.c;
  }
  SegmentDecision d;
  d.video_id = seg.video_id;
  d.segment_index = seg.segment_index;
  d.frames = seg.frame_count;
  d.selected_model = escalate ? p.large_id : p.small_id;
  d.selection_cost = models[p.small_id].selection_cost +
                     (escalate ? models[p.large_id].selection_cost : 0.0);
  d.total_cost = d.selection_cost;
  d.true_accuracy = seg.accuracies[d.selected_model];
  return d;
}

inline std::vector<SegmentDecision> cascade(const std::vector<SegmentRecord>& trace,
                                            const CascadeParams& p,
                                            const std::vector<ModelProfile>& models) {
  p.validate(models);
  std::vector<SegmentDecision> out;
  out.reserve(trace.size());
  for (const auto& seg : trace) out.push_back(cascade_segment(seg, p, models));
  return out;
}

/// Tiered-sampling schedule parameters. Offsets are computed within windows
/// of window_length segments: the window restarts the expensive/cheap phase.
struct TieredParams {
  int window_length = 16;
  int expensive_period = 8;
  int cheap_period = 2;
  int top_k = 2;
  int reference_model_id = 0;

  void validate(int m_count) const {
    if (!(cheap_period >= 1 && cheap_period <= expensive_period &&
          expensive_period <= window_length))
      throw ConfigError("tiered: need 1 <= cheap_period <= expensive_period <= window_length");
    if (!(top_k >= 1 && top_k <= m_count))
      throw ConfigError("tiered: top_k must be in [1, M]");
    if (reference_model_id < 0 || reference_model_id >= m_count)
      throw ConfigError("tiered: reference model id out of range");
  }
};

/// Tiered sampling: expensive events sample every model and re-rank a top-k
/// subset by how closely each model's statistic tracks the reference
/// model's; cheap events resample and reselect within the subset; other
/// segments keep the previous selection.
inline std::vector<SegmentDecision> tiered_sampling(
    const std::vector<SegmentRecord>& trace, const TieredParams& p,
    const Engine& eng, bool use_oracle_accuracy = false) {
  p.validate(eng.model_count());
  std::vector<SegmentDecision> out;
  out.reserve(trace.size());
  PredictionCache cache;

  for (const auto& group : detail::group_by_video(trace)) {
    std::vector<int> subset = detail::all_model_ids(eng.model_count());
    int current = -1;
    for (std::size_t j = 0; j < group.size(); ++j) {
      const SegmentRecord& seg = trace[group[j]];
      const int w = static_cast<int>(j) % p.window_length;
      std::vector<int> sampled;
      if (w % p.expensive_period == 0) {
        sampled = detail::all_model_ids(eng.model_count());
        // Rank by closeness to the reference model's statistic.
        const double ref = seg.stats[p.reference_model_id];
        std::vector<int> order = sampled;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
          const double da = std::fabs(seg.stats[a] - ref);
          const double db = std::fabs(seg.stats[b] - ref);
          return da != db ? da < db : a < b;
        });
        subset.assign(order.begin(), order.begin() + p.top_k);
        std::sort(subset.begin(), subset.end());
        current = use_oracle_accuracy
                      ? oracle_select_model(eng, seg).model_id
                      : select(eng, detail::full_observation(eng.ds(), seg), &cache)
                            .model_id;
      } else if (w % p.cheap_period == 0) {
        sampled = subset;
        ObservationSet obs;
        for (int m : subset) obs.push({m, eng.ds().discretize(m, seg.stats[m]), seg.stats[m]});
        current = use_oracle_accuracy
                      ? oracle_select_model(eng, seg, subset).model_id
                      : select(eng, obs, &cache, subset).model_id;
      }
      out.push_back(detail::make_decision(seg, eng.profiles(), current,
                                          std::move(sampled)));
    }
  }
  return out;
}

/// Oracle selection on one segment: argmin of the objective with access to
/// the true accuracies. `charge_sampling` adds the full sampling bill
/// (the hypothetical oracle observed every model).
inline SegmentDecision oracle_segment(const SegmentRecord& seg, const Engine& eng,
                                      bool charge_sampling) {
  const auto sel = oracle_select_model(eng, seg);
  std::vector<int> sampled =
      charge_sampling ? detail::all_model_ids(eng.model_count()) : std::vector<int>{};
  return detail::make_decision(seg, eng.profiles(), sel.model_id, std::move(sampled));
}

inline std::vector<SegmentDecision> oracle_policy(
    const std::vector<SegmentRecord>& trace, const Engine& eng,
    bool charge_sampling = false) {
  std::vector<SegmentDecision> out;
  out.reserve(trace.size());
  for (const auto& seg : trace) out.push_back(oracle_segment(seg, eng, charge_sampling));
  return out;
}

/// One searchable control parameter: either a continuous/integer range or an
/// explicit value list.
struct ParamRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool integer = false;
  std::vector<double> choices;  // nonempty -> enumerated instead of ranged
};

using ParamVector = std::map<std::string, double>;

struct SearchResult {
  ParamVector params;
  double score = 0.0;  // lower is better
};

/// Standard random search: sample `trials` parameter vectors uniformly from
/// the declared ranges, score each with `evaluate` (lower is better), and
/// return the best. Deterministic given the seed; the running minimum never
/// worsens as trials grow.
inline SearchResult random_param_search(
    const std::vector<ParamRange>& space,
    const std::function<double(const ParamVector&)>& evaluate, int trials,
    std::uint64_t seed) {
  if (space.empty()) throw ConfigError("random_param_search: empty parameter space");
  if (trials < 1) throw ConfigError("random_param_search: trials must be >= 1");
  std::mt19937_64 rng(seed);
  SearchResult best;
  bool first = true;
  for (int t = 0; t < trials; ++t) {
    ParamVector v;
    for (const auto& p : space) {
      double x;
      if (!p.choices.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, p.choices.size() - 1);
        x = p.choices[pick(rng)];
      } else if (p.integer) {
        std::uniform_int_distribution<long long> pick(
            static_cast<long long>(std::ceil(p.lo)),
            static_cast<long long>(std::floor(p.hi)));
        x = static_cast<double>(pick(rng));
      } else {
        std::uniform_real_distribution<double> pick(p.lo, p.hi);
        x = pick(rng);
      }
      v[p.name] = x;
    }
    const double score = evaluate(v);
    if (first || score < best.score) {
      best = {std::move(v), score};
      first = false;
    }
  }
  return best;
}

}  // namespace dmss
