#pragma once

// Core domain types for dynamic model-size selection: candidate model
// profiles, per-segment trace records, observation sets, and the immutable
// historical dataset (binning + posting-list match index) that backs
// probability estimation and accuracy prediction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmss {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One candidate model size. Costs are GFLOPs: sample_cost over the exemplar
/// frames of a segment, selection_cost over a full segment.
struct ModelProfile {
  int model_id = 0;  // dense, 0 = smallest
  std::string name;
  double flops_per_frame = 0.0;  // GFLOPs
  std::optional<double> exec_time_estimate;  // seconds
  double sample_cost = 0.0;
  double selection_cost = 0.0;
};

inline void validate_profiles(const std::vector<ModelProfile>& models) {
  if (models.empty()) throw ConfigError("model set is empty");
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    if (m.model_id != static_cast<int>(i))
      throw ConfigError("model ids must be dense 0..M-1, got id " +
                        std::to_string(m.model_id) + " at position " +
                        std::to_string(i));
    if (!(m.flops_per_frame > 0))
      throw ConfigError("model " + m.name + ": flops_per_frame must be > 0");
    if (m.sample_cost < 0 || m.selection_cost < 0)
      throw ConfigError("model " + m.name + ": costs must be nonnegative");
    if (m.sample_cost > m.selection_cost)
      throw ConfigError("model " + m.name +
                        ": sample_cost exceeds selection_cost");
    if (i > 0 && models[i - 1].selection_cost > m.selection_cost)
      throw ConfigError("models must be ordered by nondecreasing selection_cost");
    if (m.exec_time_estimate && *m.exec_time_estimate < 0)
      throw ConfigError("model " + m.name + ": negative exec_time_estimate");
  }
}

enum class StatKind { ConfidenceMean, ObjectnessSum, Disagreement };

/// Which prediction statistic the trace carries (one per model in v1).
struct StatSpec {
  int stat_id = 0;
  StatKind kind = StatKind::ConfidenceMean;
  double lo = 0.0;
  double hi = 1.0;
};

inline void validate_stat_spec(const StatSpec& s) {
  if (!(s.lo < s.hi)) throw ConfigError("StatSpec: lo must be < hi");
}

/// Ground truth for one video segment: the raw prediction statistic and the
/// true accuracy of every candidate model, plus the segment's frame count.
/// Vectors are indexed by model_id.
struct SegmentRecord {
  std::string video_id;
  int segment_index = 0;
  int frame_count = 1;
  std::vector<double> stats;
  std::vector<double> accuracies;
};

inline void validate_record(const SegmentRecord& r, int model_count) {
  if (r.frame_count <= 0)
    throw DataError("segment " + r.video_id + "/" +
                    std::to_string(r.segment_index) + ": frame_count must be > 0");
  if (static_cast<int>(r.stats.size()) != model_count ||
      static_cast<int>(r.accuracies.size()) != model_count)
    throw DataError("segment " + r.video_id + "/" +
                    std::to_string(r.segment_index) +
                    ": does not cover all " + std::to_string(model_count) +
                    " models");
  for (double a : r.accuracies)
    if (!std::isfinite(a))
      throw DataError("segment " + r.video_id + "/" +
                      std::to_string(r.segment_index) +
                      ": non-finite accuracy");
  for (double s : r.stats)
    if (!std::isfinite(s))
      throw DataError("segment " + r.video_id + "/" +
                      std::to_string(r.segment_index) +
                      ": non-finite statistic");
}

inline constexpr int kDefaultBinCount = 15;  // 10-20 works across workloads

/// Per-model bin edges. Bin i covers [e_i, e_{i+1}) with e_0 = -inf and the
/// last bin closed above; out-of-range values clamp into the edge bins.
class BinningScheme {
 public:
  BinningScheme() = default;

  BinningScheme(std::vector<std::vector<double>> edges, int bin_count)
      : edges_(std::move(edges)), bin_count_(bin_count) {
    if (bin_count_ < 2 || bin_count_ > 64)
      throw ConfigError("bin_count must be in [2, 64]");
    for (const auto& e : edges_) {
      if (static_cast<int>(e.size()) > bin_count_ - 1)
        throw ConfigError("more edges than bin_count allows");
      for (std::size_t i = 0; i + 1 < e.size(); ++i)
        if (!(e[i] < e[i + 1]))
          throw ConfigError("bin edges must be strictly increasing");
    }
  }

  /// Equal-mass edges fitted per model over the records. Duplicate quantile
  /// values collapse, so the effective bin count can be lower than requested
  /// on heavily tied data.
  static BinningScheme fit_quantile(const std::vector<SegmentRecord>& records,
                                    int model_count, int bin_count) {
    if (bin_count < 2 || bin_count > 64)
      throw ConfigError("bin_count must be in [2, 64]");
    std::vector<std::vector<double>> edges(model_count);
    std::vector<double> col(records.size());
    for (int m = 0; m < model_count; ++m) {
      for (std::size_t i = 0; i < records.size(); ++i) col[i] = records[i].stats[m];
      std::sort(col.begin(), col.end());
      std::vector<double> e;
      e.reserve(bin_count - 1);
      const std::size_t n = col.size();
      for (int b = 1; b < bin_count; ++b) {
        // type-7 quantile at b/bin_count
        const double pos = static_cast<double>(b) / bin_count * (n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        const double q = col[lo] * (1.0 - frac) + col[hi] * frac;
        if (e.empty() || q > e.back()) e.push_back(q);
      }
      edges[m] = std::move(e);
    }
    return BinningScheme(std::move(edges), bin_count);
  }

  int requested_bin_count() const { return bin_count_; }
  int model_count() const { return static_cast<int>(edges_.size()); }

  /// Effective number of bins for one model (<= requested after edge dedup).
  int bins_for(int model_id) const {
    return static_cast<int>(edges_[model_id].size()) + 1;
  }

  const std::vector<double>& edges_for(int model_id) const {
    return edges_[model_id];
  }

  int bin_of(int model_id, double value) const {
    if (std::isnan(value))
      throw std::invalid_argument("bin_of: NaN statistic for model " +
                                  std::to_string(model_id));
    const auto& e = edges_[model_id];
    return static_cast<int>(std::upper_bound(e.begin(), e.end(), value) -
                            e.begin());
  }

 private:
  std::vector<std::vector<double>> edges_;
  int bin_count_ = kDefaultBinCount;
};

/// One sampled (model, statistic) pair: the discretized bin plus the raw
/// value it came from. Probability estimation keys on the bin; the kNN
/// predictor consumes the raw value.
struct Observation {
  int model_id = 0;
  int bin = 0;
  double raw = 0.0;
};

/// The set O of statistics sampled so far in the current segment.
/// Insertion-ordered so that the drift fallback can drop the last pair;
/// at most one entry per model.
class ObservationSet {
 public:
  ObservationSet() = default;

  bool contains(int model_id) const {
    for (const auto& o : obs_)
      if (o.model_id == model_id) return true;
    return false;
  }

  void push(Observation o) {
    if (contains(o.model_id))
      throw std::invalid_argument("ObservationSet: duplicate model " +
                                  std::to_string(o.model_id));
    obs_.push_back(o);
  }

  void pop_last() {
    if (obs_.empty())
      throw std::invalid_argument("ObservationSet: pop on empty set");
    obs_.pop_back();
  }

  ObservationSet with(Observation o) const {
    ObservationSet ext(*this);
    ext.push(o);
    return ext;
  }

  bool empty() const { return obs_.empty(); }
  std::size_t size() const { return obs_.size(); }
  const std::vector<Observation>& entries() const { return obs_; }
  const Observation& back() const { return obs_.back(); }

  /// Entries sorted by model_id; cache keys and hashes use this order.
  std::vector<Observation> canonical() const {
    std::vector<Observation> c(obs_);
    std::sort(c.begin(), c.end(), [](const Observation& a, const Observation& b) {
      return a.model_id < b.model_id;
    });
    return c;
  }

 private:
  std::vector<Observation> obs_;
};

/// Immutable historical workload data: records, their discretization, the
/// (model, bin) posting-list match index, and per-model summary statistics.
/// Safe to share across concurrent policy evaluations once built.
class HistoricalDataset {
 public:
  static HistoricalDataset build(std::vector<SegmentRecord> records,
                                 int bin_count = kDefaultBinCount) {
    check_records(records);
    const int m = static_cast<int>(records.front().stats.size());
    auto binning = BinningScheme::fit_quantile(records, m, bin_count);
    return HistoricalDataset(std::move(records), std::move(binning));
  }

  /// Build against an externally supplied binning (e.g. fixed edges shared
  /// with a deployed runtime, or bins that deliberately extend past the
  /// historical range).
  static HistoricalDataset build(std::vector<SegmentRecord> records,
                                 BinningScheme binning) {
    check_records(records);
    const int m = static_cast<int>(records.front().stats.size());
    if (binning.model_count() != m)
      throw ConfigError("binning covers " + std::to_string(binning.model_count()) +
                        " models, records cover " + std::to_string(m));
    return HistoricalDataset(std::move(records), std::move(binning));
  }

  int model_count() const { return model_count_; }
  int size() const { return static_cast<int>(records_.size()); }
  const std::vector<SegmentRecord>& records() const { return records_; }
  const SegmentRecord& record(int i) const { return records_[i]; }
  const BinningScheme& binning() const { return binning_; }

  int discretize(int model_id, double raw_stat) const {
    return binning_.bin_of(model_id, raw_stat);
  }

  /// Arithmetic mean of stored accuracies, per model.
  const std::vector<double>& mean_accuracy() const { return mean_accuracy_; }

  double accuracy_min() const { return acc_min_; }
  double accuracy_max() const { return acc_max_; }

  /// Discretized statistic of record `rec` for `model_id`.
  int bin_of_record(int model_id, int rec) const {
    return bins_[model_id][rec];
  }

  /// Sorted record ids whose model_id statistic fell into `bin`.
  const std::vector<int>& postings(int model_id, int bin) const {
    return postings_[model_id][bin];
  }

  /// Mean raw statistic of the historical records in (model, bin); stands in
  /// for the raw value of a hypothetical observation of that bin. Empty bins
  /// fall back to the midpoint of the surrounding edges.
  double bin_centroid(int model_id, int bin) const {
    return centroids_[model_id][bin];
  }

  /// z-normalization parameters of each model's raw statistic column.
  double stat_mean(int model_id) const { return stat_mean_[model_id]; }
  double stat_sd(int model_id) const { return stat_sd_[model_id]; }

 private:
  static void check_records(const std::vector<SegmentRecord>& records) {
    if (records.empty()) throw DataError("cannot build dataset from zero records");
    const int m = static_cast<int>(records.front().stats.size());
    if (m == 0) throw DataError("records carry no models");
    for (const auto& r : records) validate_record(r, m);
  }

  HistoricalDataset(std::vector<SegmentRecord> records, BinningScheme binning)
      : records_(std::move(records)),
        binning_(std::move(binning)),
        model_count_(static_cast<int>(records_.front().stats.size())) {
    const int n = static_cast<int>(records_.size());
    mean_accuracy_.assign(model_count_, 0.0);
    stat_mean_.assign(model_count_, 0.0);
    stat_sd_.assign(model_count_, 0.0);
    bins_.assign(model_count_, std::vector<int>(n));
    postings_.resize(model_count_);
    centroids_.resize(model_count_);
    acc_min_ = std::numeric_limits<double>::infinity();
    acc_max_ = -std::numeric_limits<double>::infinity();

    for (int m = 0; m < model_count_; ++m) {
      const int nbins = binning_.bins_for(m);
      postings_[m].assign(nbins, {});
      std::vector<double> sum(nbins, 0.0);
      double acc_sum = 0.0, stat_sum = 0.0, stat_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double raw = records_[i].stats[m];
        const int b = binning_.bin_of(m, raw);
        bins_[m][i] = b;
        postings_[m][b].push_back(i);
        sum[b] += raw;
        acc_sum += records_[i].accuracies[m];
        stat_sum += raw;
        stat_sq += raw * raw;
        acc_min_ = std::min(acc_min_, records_[i].accuracies[m]);
        acc_max_ = std::max(acc_max_, records_[i].accuracies[m]);
      }
      mean_accuracy_[m] = acc_sum / n;
      stat_mean_[m] = stat_sum / n;
      const double var = std::max(0.0, stat_sq / n - stat_mean_[m] * stat_mean_[m]);
      stat_sd_[m] = std::sqrt(var);

      centroids_[m].assign(nbins, 0.0);
      const auto& e = binning_.edges_for(m);
      for (int b = 0; b < nbins; ++b) {
        if (!postings_[m][b].empty()) {
          centroids_[m][b] = sum[b] / postings_[m][b].size();
        } else if (e.empty()) {
          centroids_[m][b] = stat_mean_[m];
        } else if (b == 0) {
          centroids_[m][b] = e.front();
        } else if (b == nbins - 1) {
          centroids_[m][b] = e.back();
        } else {
          centroids_[m][b] = 0.5 * (e[b - 1] + e[b]);
        }
      }
    }
  }

  std::vector<SegmentRecord> records_;
  BinningScheme binning_;
  int model_count_ = 0;
  std::vector<double> mean_accuracy_;
  std::vector<double> stat_mean_, stat_sd_;
  double acc_min_ = 0.0, acc_max_ = 1.0;
  std::vector<std::vector<int>> bins_;  // [model][record] -> bin
  std::vector<std::vector<std::vector<int>>> postings_;  // [model][bin] -> record ids
  std::vector<std::vector<double>> centroids_;  // [model][bin] -> mean raw
};

}  // namespace dmss
