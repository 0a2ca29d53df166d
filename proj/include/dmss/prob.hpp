#pragma once

// Empirical conditional probability estimation over the historical dataset:
// N(O) match counting via sorted posting-list intersection, the conditional
// estimate p(s | O) = N(O u {(m,s)}) / N(O), and the T_min support test that
// gates the drift fallback. Exact counting, no sketching.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "dmss/core.hpp"

namespace dmss {

inline constexpr int kDefaultTmin = 10;

namespace detail {

// Posting lists of the observation set, smallest first.
inline std::vector<const std::vector<int>*> obs_postings(
    const HistoricalDataset& ds, const ObservationSet& obs) {
  std::vector<const std::vector<int>*> lists;
  lists.reserve(obs.size());
  for (const auto& o : obs.entries()) lists.push_back(&ds.postings(o.model_id, o.bin));
  std::sort(lists.begin(), lists.end(),
            [](const auto* a, const auto* b) { return a->size() < b->size(); });
  return lists;
}

inline std::vector<int> intersect_sorted(const std::vector<int>& a,
                                         const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(std::min(a.size(), b.size()));
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

}  // namespace detail

/// Record ids of the historical segments matching every pair in `obs`.
/// The empty set matches everything.
inline std::vector<int> matching_records(const HistoricalDataset& ds,
                                         const ObservationSet& obs) {
  if (obs.empty()) {
    std::vector<int> all(ds.size());
    for (int i = 0; i < ds.size(); ++i) all[i] = i;
    return all;
  }
  auto lists = detail::obs_postings(ds, obs);
  std::vector<int> acc = *lists.front();
  for (std::size_t i = 1; i < lists.size() && !acc.empty(); ++i)
    acc = detail::intersect_sorted(acc, *lists[i]);
  return acc;
}

/// N(O): number of historical segments whose discretized statistics match
/// every pair in `obs`. N(empty) is the dataset size.
inline int match_count(const HistoricalDataset& ds, const ObservationSet& obs) {
  if (obs.empty()) return ds.size();
  if (obs.size() == 1) {
    const auto& o = obs.entries().front();
    return static_cast<int>(ds.postings(o.model_id, o.bin).size());
  }
  return static_cast<int>(matching_records(ds, obs).size());
}

/// Per-bin match counts of `model_id` among the records matching `obs`.
/// The counts partition N(obs) exactly: their integer sum equals
/// match_count(ds, obs) whenever model_id is not in obs.
inline std::vector<int> cond_counts(const HistoricalDataset& ds, int model_id,
                                    const ObservationSet& obs) {
  const int nbins = ds.binning().bins_for(model_id);
  std::vector<int> counts(nbins, 0);
  if (obs.empty()) {
    for (int b = 0; b < nbins; ++b)
      counts[b] = static_cast<int>(ds.postings(model_id, b).size());
    return counts;
  }
  for (int rec : matching_records(ds, obs)) ++counts[ds.bin_of_record(model_id, rec)];
  return counts;
}

/// p(s=bin | obs) per the empirical ratio N(O u {(m,bin)}) / N(O).
inline double cond_prob(const HistoricalDataset& ds, int model_id, int bin,
                        const ObservationSet& obs) {
  if (obs.contains(model_id))
    throw std::invalid_argument("cond_prob: model " + std::to_string(model_id) +
                                " already observed");
  const int n = match_count(ds, obs);
  if (n == 0)
    throw std::invalid_argument(
        "cond_prob: observation set has zero historical support");
  ObservationSet ext = obs.with({model_id, bin, 0.0});
  return static_cast<double>(match_count(ds, ext)) / n;
}

/// True iff at least t_min historical segments match `obs` (inclusive).
inline bool support_ok(const HistoricalDataset& ds, const ObservationSet& obs,
                       int t_min = kDefaultTmin) {
  return match_count(ds, obs) >= t_min;
}

}  // namespace dmss
