#pragma once

// Data-driven accuracy performance model: kNN over historical segments keyed
// by whichever raw prediction statistics have been sampled, with a
// historical-mean fallback for the empty observation set and a prediction
// cache for repeated combinations. One neighbor search serves the accuracy
// prediction of every candidate model.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dmss/core.hpp"

namespace dmss {

enum class DistanceMetric { L1, L2 };

struct KnnConfig {
  int k = 10;
  DistanceMetric metric = DistanceMetric::L2;
  bool distance_weighted = false;  // off by default
};

/// Cache key: observations canonicalized by model_id, raw values compared
/// bit-exactly so a hit is always bitwise identical to recomputation.
struct ObsKey {
  std::vector<std::uint64_t> packed;  // (model_id, bin, raw bits) per entry

  static ObsKey of(const ObservationSet& obs) {
    ObsKey k;
    k.packed.reserve(obs.size() * 3);
    for (const auto& o : obs.canonical()) {
      k.packed.push_back(static_cast<std::uint64_t>(o.model_id));
      k.packed.push_back(static_cast<std::uint64_t>(o.bin));
      k.packed.push_back(std::bit_cast<std::uint64_t>(o.raw));
    }
    return k;
  }

  bool operator==(const ObsKey& other) const { return packed == other.packed; }
};

struct ObsKeyHash {
  std::size_t operator()(const ObsKey& k) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (std::uint64_t v : k.packed) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
    return static_cast<std::size_t>(h);
  }
};

struct PredictionCache {
  std::unordered_map<ObsKey, std::vector<double>, ObsKeyHash> entries;
  std::size_t hits = 0;
  std::size_t misses = 0;
};

namespace detail {

struct Feature {
  int model_id;
  double value;   // z-normalized query value
  double inv_sd;  // 1/sd of the raw column
};

// Features of the observed models; degenerate (zero-spread) columns drop out.
inline std::vector<Feature> knn_features(const HistoricalDataset& ds,
                                         const ObservationSet& obs) {
  std::vector<Feature> feats;
  feats.reserve(obs.size());
  for (const auto& o : obs.entries()) {
    const double sd = ds.stat_sd(o.model_id);
    if (sd <= 0.0) continue;
    feats.push_back({o.model_id, (o.raw - ds.stat_mean(o.model_id)) / sd, 1.0 / sd});
  }
  return feats;
}

}  // namespace detail

/// Indices of the k nearest historical records to the observed statistics.
/// Ties in distance break toward the lower record index. The same neighbor
/// set backs the prediction of every model.
inline std::vector<int> knn_neighbors(const HistoricalDataset& ds,
                                      const KnnConfig& cfg,
                                      const ObservationSet& obs) {
  const auto feats = detail::knn_features(ds, obs);
  if (feats.empty()) return {};
  const int n = ds.size();
  const int k = std::min(cfg.k, n);
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    const auto& rec = ds.record(i);
    double d = 0.0;
    for (const auto& f : feats) {
      const double z = (rec.stats[f.model_id] - ds.stat_mean(f.model_id)) * f.inv_sd;
      const double delta = z - f.value;
      d += cfg.metric == DistanceMetric::L1 ? std::fabs(delta) : delta * delta;
    }
    dist[i] = {d, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

/// Predicted accuracy of every model. Empty observation set (or one with no
/// usable features) falls back to the per-model historical means.
inline std::vector<double> predict_accuracy(const HistoricalDataset& ds,
                                            const KnnConfig& cfg,
                                            const ObservationSet& obs) {
  if (cfg.k <= 0) throw ConfigError("knn: k must be positive");
  const auto neighbors = knn_neighbors(ds, cfg, obs);
  if (neighbors.empty()) return ds.mean_accuracy();

  const int m = ds.model_count();
  std::vector<double> pred(m, 0.0);
  if (!cfg.distance_weighted) {
    for (int rec : neighbors)
      for (int j = 0; j < m; ++j) pred[j] += ds.record(rec).accuracies[j];
    for (int j = 0; j < m; ++j) pred[j] /= neighbors.size();
    return pred;
  }

  // Inverse-distance weights; exact matches dominate.
  const auto feats = detail::knn_features(ds, obs);
  constexpr double eps = 1e-12;
  std::vector<double> w(neighbors.size());
  bool exact = false;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const auto& rec = ds.record(neighbors[i]);
    double d = 0.0;
    for (const auto& f : feats) {
      const double z = (rec.stats[f.model_id] - ds.stat_mean(f.model_id)) * f.inv_sd;
      const double delta = z - f.value;
      d += cfg.metric == DistanceMetric::L1 ? std::fabs(delta) : delta * delta;
    }
    if (d < eps) {
      exact = true;
      w[i] = -1.0;  // marker
    } else {
      w[i] = 1.0 / d;
    }
  }
  double wsum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = exact ? (w[i] < 0.0 ? 1.0 : 0.0) : w[i];
    wsum += w[i];
  }
  for (std::size_t i = 0; i < neighbors.size(); ++i)
    for (int j = 0; j < m; ++j)
      pred[j] += w[i] / wsum * ds.record(neighbors[i]).accuracies[j];
  return pred;
}

/// Cached variant; a hit returns exactly the vector a fresh computation
/// would produce. Callers running concurrently keep one cache per worker.
inline const std::vector<double>& predict_accuracy(const HistoricalDataset& ds,
                                                   const KnnConfig& cfg,
                                                   const ObservationSet& obs,
                                                   PredictionCache& cache) {
  const ObsKey key = ObsKey::of(obs);
  auto it = cache.entries.find(key);
  if (it != cache.entries.end()) {
    ++cache.hits;
    return it->second;
  }
  ++cache.misses;
  return cache.entries.emplace(key, predict_accuracy(ds, cfg, obs)).first->second;
}

inline const std::vector<int> kDefaultKGrid = {5, 10, 25, 50};
inline const std::vector<DistanceMetric> kDefaultMetricGrid = {
    DistanceMetric::L1, DistanceMetric::L2};

/// Grid search for (k, metric) minimizing mean-squared accuracy-prediction
/// error on a held-out split, using fully-observed statistics as features.
/// Deterministic given the seed.
inline KnnConfig tune_knn(const HistoricalDataset& ds,
                          const std::vector<int>& k_grid = kDefaultKGrid,
                          const std::vector<DistanceMetric>& metric_grid =
                              kDefaultMetricGrid,
                          double holdout_fraction = 0.2,
                          std::uint64_t seed = 0) {
  if (k_grid.empty() || metric_grid.empty())
    throw ConfigError("tune_knn: empty grid");
  const int max_k = *std::max_element(k_grid.begin(), k_grid.end());
  const int n = ds.size();
  int holdout = static_cast<int>(std::lround(holdout_fraction * n));
  holdout = std::clamp(holdout, 1, n - 1);
  if (holdout < max_k + 1 || n - holdout < max_k)
    throw DataError("tune_knn: dataset too small for holdout of " +
                    std::to_string(holdout) + " with max k " +
                    std::to_string(max_k));

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<SegmentRecord> train;
  train.reserve(n - holdout);
  std::vector<int> eval(idx.begin(), idx.begin() + holdout);
  for (int i = holdout; i < n; ++i) train.push_back(ds.record(idx[i]));
  auto train_ds =
      HistoricalDataset::build(std::move(train), ds.binning().requested_bin_count());

  KnnConfig best;
  double best_mse = std::numeric_limits<double>::infinity();
  bool first = true;
  for (DistanceMetric metric : metric_grid) {
    for (int k : k_grid) {
      KnnConfig cfg{k, metric, false};
      double se = 0.0;
      long terms = 0;
      for (int rec : eval) {
        const auto& r = ds.record(rec);
        ObservationSet obs;
        for (int m = 0; m < ds.model_count(); ++m)
          obs.push({m, train_ds.discretize(m, r.stats[m]), r.stats[m]});
        const auto pred = predict_accuracy(train_ds, cfg, obs);
        for (int m = 0; m < ds.model_count(); ++m) {
          const double e = pred[m] - r.accuracies[m];
          se += e * e;
          ++terms;
        }
      }
      const double mse = se / terms;
      if (first || mse < best_mse) {
        best = cfg;
        best_mse = mse;
        first = false;
      }
    }
  }
  return best;
}

}  // namespace dmss
