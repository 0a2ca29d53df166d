#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "dmss/prob.hpp"
#include "oracles.hpp"
#include "toy.hpp"

using namespace dmss;

namespace {

std::vector<SegmentRecord> synth(int n, int models, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<SegmentRecord> out;
  for (int i = 0; i < n; ++i) {
    SegmentRecord r;
    r.video_id = "s";
    r.segment_index = i;
    r.frame_count = 1;
    const double latent = g(rng);
    for (int m = 0; m < models; ++m) {
      r.stats.push_back(latent + 0.5 * g(rng));
      r.accuracies.push_back(0.5 + 0.1 * g(rng));
    }
    out.push_back(std::move(r));
  }
  return out;
}

ObservationSet random_obs(const HistoricalDataset& ds, std::mt19937_64& rng,
                          int max_depth) {
  std::uniform_int_distribution<int> depth(0, max_depth);
  std::uniform_int_distribution<int> model(0, ds.model_count() - 1);
  ObservationSet obs;
  const int d = depth(rng);
  for (int i = 0; i < d; ++i) {
    int m = model(rng);
    while (obs.contains(m)) m = (m + 1) % ds.model_count();
    std::uniform_int_distribution<int> bin(0, ds.binning().bins_for(m) - 1);
    obs.push({m, bin(rng), 0.0});
  }
  return obs;
}

}  // namespace

TEST_CASE("match_count of the empty set is the dataset size") {
  auto ds = HistoricalDataset::build(synth(123, 3, 1), 6);
  CHECK(match_count(ds, {}) == 123);
}

TEST_CASE("a bin never observed matches nothing") {
  // All stats equal 5.0 except a far outlier establishing a second bin.
  std::vector<SegmentRecord> records;
  for (int i = 0; i < 20; ++i) {
    SegmentRecord r;
    r.video_id = "x";
    r.segment_index = i;
    r.frame_count = 1;
    r.stats = {5.0};
    r.accuracies = {0.5};
    records.push_back(r);
  }
  auto ds = HistoricalDataset::build(records, BinningScheme({{10.0, 20.0}}, 3));
  ObservationSet obs;
  obs.push({0, 2, 25.0});
  CHECK(match_count(ds, obs) == 0);
}

TEST_CASE("match_count agrees with the linear-scan oracle") {
  auto ds = HistoricalDataset::build(synth(500, 3, 7), 5);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    auto obs = random_obs(ds, rng, 3);
    CHECK(match_count(ds, obs) == oracles::naive_match_count(ds, obs));
  }
}

TEST_CASE("cond_prob reproduces the toy frequencies") {
  toy::Fixture fx;
  ObservationSet empty;
  CHECK(cond_prob(fx.ds, toy::kLarge, 0, empty) == 0.2);
  CHECK(cond_prob(fx.ds, toy::kLarge, 1, empty) == 0.5);
  CHECK(cond_prob(fx.ds, toy::kLarge, 2, empty) == 0.3);

  auto filtered = toy::obs_medium_L();
  CHECK(cond_prob(fx.ds, toy::kLarge, 0, filtered) == 0.8);
  CHECK(cond_prob(fx.ds, toy::kLarge, 1, filtered) == 0.18);
  CHECK(cond_prob(fx.ds, toy::kLarge, 2, filtered) == 0.02);
}

TEST_CASE("conditional counts partition the match count exactly") {
  auto ds = HistoricalDataset::build(synth(500, 3, 3), 8);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto obs = random_obs(ds, rng, 2);
    const int n = match_count(ds, obs);
    if (n == 0) continue;
    for (int m = 0; m < 3; ++m) {
      if (obs.contains(m)) continue;
      const auto counts = cond_counts(ds, m, obs);
      CHECK(std::accumulate(counts.begin(), counts.end(), 0) == n);
      for (int b = 0; b < static_cast<int>(counts.size()); ++b)
        CHECK(cond_prob(ds, m, b, obs) ==
              static_cast<double>(counts[b]) / n);
    }
  }
}

TEST_CASE("cond_prob preconditions") {
  toy::Fixture fx;
  auto obs = toy::obs_medium_L();
  CHECK_THROWS_AS(cond_prob(fx.ds, toy::kMedium, 0, obs), std::invalid_argument);

  // Unsupported filter: Medium=L together with an impossible Large bin.
  std::vector<SegmentRecord> records;
  for (int i = 0; i < 30; ++i) {
    SegmentRecord r;
    r.video_id = "y";
    r.segment_index = i;
    r.frame_count = 1;
    r.stats = {0.0, 0.0};
    r.accuracies = {0.5, 0.5};
    records.push_back(r);
  }
  auto ds = HistoricalDataset::build(records, BinningScheme({{1.0}, {1.0}}, 2));
  ObservationSet unsupported;
  unsupported.push({0, 1, 2.0});
  CHECK(match_count(ds, unsupported) == 0);
  CHECK_THROWS_AS(cond_prob(ds, 1, 0, unsupported), std::invalid_argument);
}

TEST_CASE("support boundaries are inclusive") {
  auto ds = HistoricalDataset::build(synth(1000, 2, 9), 10);
  CHECK(support_ok(ds, {}, 10));

  // Build a set with exactly 9 and exactly 10 matches via explicit binning.
  std::vector<SegmentRecord> records;
  for (int i = 0; i < 19; ++i) {
    SegmentRecord r;
    r.video_id = "z";
    r.segment_index = i;
    r.frame_count = 1;
    r.stats = {i < 9 ? 0.0 : 1.0};
    r.accuracies = {0.5};
    records.push_back(r);
  }
  auto small = HistoricalDataset::build(records, BinningScheme({{0.5}}, 2));
  ObservationSet nine, ten;
  nine.push({0, 0, 0.0});
  ten.push({0, 1, 1.0});
  CHECK(match_count(small, nine) == 9);
  CHECK_FALSE(support_ok(small, nine, 10));
  CHECK(support_ok(small, ten, 10));
}

TEST_CASE("support is monotone under set extension") {
  auto ds = HistoricalDataset::build(synth(400, 3, 13), 6);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto obs = random_obs(ds, rng, 2);
    int m = trial % 3;
    while (obs.contains(m)) m = (m + 1) % 3;
    std::uniform_int_distribution<int> bin(0, ds.binning().bins_for(m) - 1);
    auto ext = obs.with({m, bin(rng), 0.0});
    for (int t_min : {1, 5, 10, 50}) {
      if (support_ok(ds, ext, t_min)) CHECK(support_ok(ds, obs, t_min));
    }
  }
}
