#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dmss/planner.hpp"
#include "oracles.hpp"
#include "toy.hpp"

using namespace dmss;

namespace {

// Random small instance: 3 models, 4 bins per statistic, chance objective.
struct RandomInstance {
  std::vector<ModelProfile> profiles;
  HistoricalDataset ds;
  ObjectiveSpec spec;

  Engine engine() const { return Engine{&ds, &profiles, KnnConfig{}, spec}; }
};

RandomInstance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bin(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<ModelProfile> profiles{
      {0, "s", 20.0 + 10.0 * u(rng), std::nullopt, 0.0, 0.0},
      {1, "m", 0.0, std::nullopt, 0.0, 0.0},
      {2, "l", 0.0, std::nullopt, 0.0, 0.0}};
  profiles[1].flops_per_frame = profiles[0].flops_per_frame + 20.0 * u(rng) + 1.0;
  profiles[2].flops_per_frame = profiles[1].flops_per_frame + 40.0 * u(rng) + 1.0;
  for (auto& p : profiles) {
    p.selection_cost = p.flops_per_frame;
    p.sample_cost = 1.0 + 6.0 * u(rng);
  }

  std::vector<SegmentRecord> records;
  const int n = 120;
  for (int i = 0; i < n; ++i) {
    SegmentRecord r;
    r.video_id = "r";
    r.segment_index = i;
    r.frame_count = 1;
    const double difficulty = u(rng);
    for (int m = 0; m < 3; ++m) {
      const int b = std::min(3, static_cast<int>(difficulty * 4 + 0.6 * u(rng)));
      r.stats.push_back(static_cast<double>(b));
      r.accuracies.push_back(u(rng) < difficulty - 0.25 * m ? 0.2 : 0.8);
    }
    records.push_back(std::move(r));
  }
  auto ds = HistoricalDataset::build(
      std::move(records),
      BinningScheme({{0.5, 1.5, 2.5}, {0.5, 1.5, 2.5}, {0.5, 1.5, 2.5}}, 4));
  auto spec = make_chance_threshold(0.5, 0.55 + 0.4 * u(rng), 1.0);
  return RandomInstance{std::move(profiles), std::move(ds), spec};
}

}  // namespace

TEST_CASE("objective under selection reproduces the no-sampling baseline") {
  toy::Fixture fx;
  CHECK(objective_under_selection(fx.engine(), {}) == 100.0);
  CHECK(objective_under_selection(fx.engine(), toy::obs_medium_L()) == 55.0);
}

TEST_CASE("component (ii) reproduces Example 1") {
  toy::Fixture fx;
  CHECK_THAT(component_ii(fx.engine(), toy::kLarge, {}),
             Catch::Matchers::WithinAbs(36.5, 1e-9));
}

TEST_CASE("component (ii) reproduces Example 2") {
  toy::Fixture fx;
  EvalCaches caches;
  const auto filtered = toy::obs_medium_L();

  // Ignoring the Medium=L evidence: 55 - 63.5 = -8.5, don't sample.
  CHECK_THAT(component_ii(fx.engine(), toy::kLarge, filtered, {}, caches),
             Catch::Matchers::WithinAbs(-8.5, 1e-9));
  // Conditioning on it: 55 - 35.9 = 19.1, sample (decision flips).
  CHECK_THAT(component_ii(fx.engine(), toy::kLarge, filtered, filtered, caches),
             Catch::Matchers::WithinAbs(19.1, 1e-9));
}

TEST_CASE("gain from Medium=L makes sampling Large worthwhile") {
  toy::Fixture fx;
  EvalCaches caches;
  CHECK_THAT(sampling_gain(fx.engine(), toy::kLarge, toy::obs_medium_L(), caches),
             Catch::Matchers::WithinAbs(9.1, 1e-9));

  // Continuing the plan from that state samples Large next.
  auto seg = toy::record(0, toy::kBinA, toy::kMedL);
  auto tr = plan_segment(fx.engine(), seg, caches, 10, -1, toy::obs_medium_L());
  REQUIRE_FALSE(tr.steps.empty());
  CHECK(tr.steps.front().model_id == toy::kLarge);
}

TEST_CASE("planner on the toy history samples Large first") {
  toy::Fixture fx;
  auto seg = toy::record(0, toy::kBinB, toy::kMedH);
  auto tr = plan_segment(fx.engine(), seg);
  REQUIRE(tr.steps.size() == 1);
  CHECK(tr.steps[0].model_id == toy::kLarge);
  CHECK_THAT(tr.steps[0].gain, Catch::Matchers::WithinAbs(26.5, 1e-9));
  CHECK(tr.termination == Termination::NoPositiveGain);
  CHECK(tr.selection.model_id == toy::kMedium);  // bin B -> Medium suffices
  // 10 sampled + 55 selected
  CHECK_THAT(tr.charged_cost_gflops, Catch::Matchers::WithinAbs(65.0, 1e-12));
}

TEST_CASE("uninformative statistics stop the planner immediately") {
  // Accuracy independent of the statistics: component (ii) is 0 everywhere.
  std::vector<SegmentRecord> records;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    SegmentRecord r;
    r.video_id = "u";
    r.segment_index = i;
    r.frame_count = 1;
    r.stats = {u(rng), u(rng)};
    r.accuracies = {0.4, 0.8};  // constants
    records.push_back(r);
  }
  std::vector<ModelProfile> profiles{{0, "a", 10.0, std::nullopt, 2.0, 10.0},
                                     {1, "b", 40.0, std::nullopt, 2.0, 40.0}};
  auto ds = HistoricalDataset::build(records, 5);
  auto spec = make_scalarized(0.5, 40.0, 0.0, 1.0);
  Engine eng{&ds, &profiles, KnnConfig{25, DistanceMetric::L2, false}, spec};

  auto tr = plan_segment(eng, records.front());
  CHECK(tr.steps.empty());
  CHECK(tr.termination == Termination::NoPositiveGain);
  // Best-on-average model under the spec.
  const auto direct = select(eng, {});
  CHECK(tr.selection.model_id == direct.model_id);
}

TEST_CASE("max_iters=0 disables sampling") {
  toy::Fixture fx;
  auto seg = toy::record(0, toy::kBinA, toy::kMedL);
  auto tr = plan_segment(fx.engine(), seg, kDefaultTmin, 0);
  CHECK(tr.steps.empty());
  CHECK(tr.termination == Termination::MaxIterations);
  CHECK(tr.selection.model_id == select(fx.engine(), {}).model_id);
}

TEST_CASE("transcript invariants hold on random instances") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto inst = random_instance(seed);
    const Engine eng = inst.engine();
    EvalCaches caches;
    const auto& seg = inst.ds.record(static_cast<int>(seed) % inst.ds.size());
    auto tr = plan_segment(eng, seg, caches, 5);

    // Greedy soundness: every executed step had positive estimated gain.
    std::vector<bool> seen(3, false);
    for (const auto& s : tr.steps) {
      CHECK(s.gain > 0.0);
      CHECK_FALSE(seen[s.model_id]);  // no duplicate sampling
      seen[s.model_id] = true;
    }
    // Drift safety: final set supported or empty.
    if (tr.termination == Termination::DriftFallback)
      CHECK((tr.final_obs.empty() || support_ok(inst.ds, tr.final_obs, 5)));

    // Estimated-expectation identity: recompute sum_s p(s|O) J(O u {(m,s)}).
    ObservationSet obs;
    for (const auto& s : tr.steps) {
      ObservationSet rep;
      for (const auto& o : obs.entries())
        rep.push({o.model_id, o.bin, inst.ds.bin_centroid(o.model_id, o.bin)});
      const int n = match_count(inst.ds, rep);
      const auto counts = cond_counts(inst.ds, s.model_id, rep);
      double expected = 0.0;
      for (int b = 0; b < static_cast<int>(counts.size()); ++b) {
        if (counts[b] == 0) continue;
        ObservationSet ext = rep.with(
            {s.model_id, b, inst.ds.bin_centroid(s.model_id, b)});
        expected += static_cast<double>(counts[b]) / n *
                    objective_under_selection(eng, ext, caches);
      }
      CHECK_THAT(s.j_after_expected, Catch::Matchers::WithinAbs(expected, 1e-12));
      obs.push({s.model_id, s.bin, s.raw});
    }
  }
}

TEST_CASE("first sampled model matches exhaustive expected-gain argmax") {
  int checked = 0;
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    auto inst = random_instance(seed);
    const Engine eng = inst.engine();
    const int naive = oracles::naive_first_sample(eng);
    auto tr = plan_segment(eng, inst.ds.record(0), /*t_min=*/1);
    const int planner_first = tr.steps.empty() ? -1 : tr.steps.front().model_id;
    CHECK(planner_first == naive);
    ++checked;
  }
  CHECK(checked == 30);
}

TEST_CASE("drift fallback rolls back the offending sample") {
  // History occupies stats in [0,1]; bins extend to 2 so drifted runtime
  // values land in empty, unsupported bins.
  std::vector<SegmentRecord> records;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    SegmentRecord r;
    r.video_id = "h";
    r.segment_index = i;
    r.frame_count = 1;
    const double d = u(rng);
    r.stats = {d, d + 0.02 * u(rng)};
    r.accuracies = {0.8 - 0.5 * d, 0.9 - 0.2 * d};
    records.push_back(r);
  }
  BinningScheme binning({{0.25, 0.5, 0.75, 1.0, 1.5}, {0.25, 0.5, 0.75, 1.0, 1.5}}, 6);
  auto ds = HistoricalDataset::build(records, binning);
  std::vector<ModelProfile> profiles{{0, "a", 10.0, std::nullopt, 1.0, 10.0},
                                     {1, "b", 40.0, std::nullopt, 4.0, 40.0}};
  auto spec = make_scalarized(0.5, 40.0, 0.0, 1.0);
  Engine eng{&ds, &profiles, KnnConfig{10, DistanceMetric::L2, false}, spec};

  SegmentRecord drifted;
  drifted.video_id = "rt";
  drifted.segment_index = 0;
  drifted.frame_count = 1;
  drifted.stats = {1.8, 1.9};  // far outside the historical range
  drifted.accuracies = {0.1, 0.6};

  auto tr = plan_segment(eng, drifted);
  CHECK(tr.termination == Termination::DriftFallback);
  CHECK(tr.final_obs.empty());
  REQUIRE(tr.rolled_back.has_value());
  CHECK(tr.selection.model_id == select(eng, {}).model_id);
  // The rolled-back sample is still paid for.
  CHECK(tr.sampling_cost_gflops ==
        profiles[tr.rolled_back->model_id].sample_cost);
}

TEST_CASE("component (ii) preconditions") {
  toy::Fixture fx;
  EvalCaches caches;
  CHECK_THROWS_AS(component_ii(fx.engine(), toy::kMedium, toy::obs_medium_L()),
                  std::invalid_argument);
}

TEST_CASE("transcript serializes to JSON") {
  toy::Fixture fx;
  auto tr = plan_segment(fx.engine(), toy::record(0, toy::kBinA, toy::kMedL));
  const auto j = to_json(tr);
  CHECK(j.at("termination").get<std::string>() == "no_positive_gain");
  CHECK(j.at("steps").size() == tr.steps.size());
  CHECK(j.at("selected_model").get<int>() == tr.selection.model_id);
}
