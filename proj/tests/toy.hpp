#pragma once

// The three-model toy workload used by the worked-example tests: selection
// costs 30/55/100, sampling cost 10, chance-threshold objective (target 0.5
// at 90% confidence). Large's statistic takes three values A/B/C with
// overall frequencies 20/50/30%; filtering by Medium=L concentrates them to
// 80/18/2%. Accuracies are tied to Large's bin: on A every model clears the
// target, on B only Medium and Large, on C only Large.

#include <string>
#include <vector>

#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/predictor.hpp"
#include "dmss/selector.hpp"

namespace toy {

inline constexpr int kSmall = 0;
inline constexpr int kMedium = 1;
inline constexpr int kLarge = 2;
inline constexpr double kBinA = 0.0, kBinB = 1.0, kBinC = 2.0;
inline constexpr double kMedL = 0.0, kMedH = 1.0;

inline std::vector<dmss::ModelProfile> models() {
  return {
      {0, "small", 30.0, std::nullopt, 10.0, 30.0},
      {1, "medium", 55.0, std::nullopt, 10.0, 55.0},
      {2, "large", 100.0, std::nullopt, 10.0, 100.0},
  };
}

inline dmss::SegmentRecord record(int idx, double large_stat, double medium_stat) {
  dmss::SegmentRecord r;
  r.video_id = "hist";
  r.segment_index = idx;
  r.frame_count = 1;
  r.stats = {0.0, medium_stat, large_stat};
  if (large_stat == kBinA)
    r.accuracies = {0.9, 0.9, 0.9};
  else if (large_stat == kBinB)
    r.accuracies = {0.1, 0.9, 0.9};
  else
    r.accuracies = {0.1, 0.1, 0.9};
  return r;
}

// 1000 records: (A,L)=80 (A,H)=120 (B,L)=18 (B,H)=482 (C,L)=2 (C,H)=298,
// giving Large marginals 200/500/300 and Medium=L conditionals 80/18/2.
inline std::vector<dmss::SegmentRecord> history() {
  struct Cell {
    double large, medium;
    int n;
  };
  const Cell cells[] = {{kBinA, kMedL, 80}, {kBinA, kMedH, 120},
                        {kBinB, kMedL, 18}, {kBinB, kMedH, 482},
                        {kBinC, kMedL, 2},  {kBinC, kMedH, 298}};
  std::vector<dmss::SegmentRecord> out;
  out.reserve(1000);
  int idx = 0;
  for (const auto& c : cells)
    for (int i = 0; i < c.n; ++i) out.push_back(record(idx++, c.large, c.medium));
  return out;
}

inline dmss::BinningScheme binning() {
  // Small: single bin; Medium: L/H split at 0.5; Large: A/B/C at 0.5, 1.5.
  return dmss::BinningScheme({{}, {0.5}, {0.5, 1.5}}, 3);
}

inline dmss::HistoricalDataset dataset() {
  return dmss::HistoricalDataset::build(history(), binning());
}

inline dmss::ObjectiveSpec objective() {
  return dmss::make_chance_threshold(/*acc_target=*/0.5, /*confidence=*/0.9,
                                     /*cost_normalizer=*/1.0);
}

/// Bundles the toy dataset/models/objective into an Engine whose referenced
/// storage lives inside this struct.
struct Fixture {
  std::vector<dmss::ModelProfile> profiles = models();
  dmss::HistoricalDataset ds = dataset();
  dmss::ObjectiveSpec spec = objective();

  dmss::Engine engine() const {
    return dmss::Engine{&ds, &profiles, dmss::KnnConfig{}, spec};
  }
};

inline dmss::ObservationSet obs_medium_L() {
  dmss::ObservationSet o;
  o.push({kMedium, 0, kMedL});
  return o;
}

inline dmss::ObservationSet obs_large(int bin) {
  dmss::ObservationSet o;
  o.push({kLarge, bin, static_cast<double>(bin)});
  return o;
}

}  // namespace toy
