#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dmss/selector.hpp"
#include "oracles.hpp"
#include "toy.hpp"

using namespace dmss;

TEST_CASE("chance selection without observations picks the only safe model") {
  toy::Fixture fx;
  const auto sel = select(fx.engine(), {});
  CHECK(sel.model_id == toy::kLarge);
  CHECK(sel.objective_value == 100.0);
}

TEST_CASE("chance selection flips to Small once Large reveals an easy scene") {
  toy::Fixture fx;
  const auto sel = select(fx.engine(), toy::obs_large(0));
  CHECK(sel.model_id == toy::kSmall);
  CHECK(sel.objective_value == 30.0);
}

TEST_CASE("chance selection given Medium=L keeps Medium") {
  toy::Fixture fx;
  const auto sel = select(fx.engine(), toy::obs_medium_L());
  CHECK(sel.model_id == toy::kMedium);
  CHECK(sel.objective_value == 55.0);
}

TEST_CASE("cost-only scalarized objective selects the cheapest model") {
  toy::Fixture fx;
  fx.spec = make_scalarized(1.0, 100.0, 0.0, 1.0);
  const auto sel = select(fx.engine(), {});
  CHECK(sel.model_id == toy::kSmall);
}

TEST_CASE("no candidate beats the selected model's objective") {
  toy::Fixture fx;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    fx.spec = make_scalarized(u(rng), 100.0, 0.0, 1.0);
    const Engine eng = fx.engine();
    ObservationSet obs;
    if (trial % 2) obs = toy::obs_large(trial % 3);
    const auto sel = select(eng, obs);
    const auto pred = predict_accuracy(fx.ds, eng.knn, obs);
    for (const auto& mp : fx.profiles)
      CHECK(sel.objective_value <=
            fx.spec.value(mp.selection_cost, pred[mp.model_id]) + 1e-12);
  }
}

TEST_CASE("selection is deterministic and matches the naive argmin") {
  toy::Fixture fx;
  fx.spec = make_scalarized(0.4, 100.0, 0.0, 1.0);
  const Engine eng = fx.engine();
  for (int bin = 0; bin < 3; ++bin) {
    const auto a = select(eng, toy::obs_large(bin));
    const auto b = select(eng, toy::obs_large(bin));
    CHECK(a.model_id == b.model_id);
    CHECK(a.model_id == oracles::naive_select(eng, toy::obs_large(bin)));
  }
}

TEST_CASE("ties break by selection cost then model id") {
  // Two identical models (same cost, same accuracies), one expensive one.
  std::vector<ModelProfile> models{{0, "a", 10.0, std::nullopt, 1.0, 10.0},
                                   {1, "b", 10.0, std::nullopt, 1.0, 10.0},
                                   {2, "c", 50.0, std::nullopt, 1.0, 50.0}};
  std::vector<SegmentRecord> records;
  for (int i = 0; i < 20; ++i) {
    SegmentRecord r;
    r.video_id = "t";
    r.segment_index = i;
    r.frame_count = 1;
    r.stats = {0.1 * i, 0.1 * i, 0.1 * i};
    r.accuracies = {0.5, 0.5, 0.5};
    records.push_back(r);
  }
  auto ds = HistoricalDataset::build(records, 4);
  auto spec = make_scalarized(0.3, 50.0, 0.0, 1.0);
  Engine eng{&ds, &models, KnnConfig{}, spec};
  CHECK(select(eng, {}).model_id == 0);
}

TEST_CASE("candidate restriction limits the argmin") {
  toy::Fixture fx;
  fx.spec = make_scalarized(1.0, 100.0, 0.0, 1.0);  // cheapest wins
  const std::vector<int> candidates{toy::kMedium, toy::kLarge};
  CHECK(select(fx.engine(), {}, nullptr, candidates).model_id == toy::kMedium);
}

TEST_CASE("oracle selection dominates predicted selection under true accuracies") {
  toy::Fixture fx;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    fx.spec = make_scalarized(u(rng), 100.0, 0.0, 1.0);
    const Engine eng = fx.engine();
    const auto& seg = fx.ds.record(trial * 7 % fx.ds.size());
    ObservationSet obs;
    obs.push({toy::kLarge, fx.ds.discretize(toy::kLarge, seg.stats[toy::kLarge]),
              seg.stats[toy::kLarge]});
    const auto predicted = select(eng, obs);
    const auto oracle = oracle_select_model(eng, seg);
    const double predicted_true_obj = fx.spec.value(
        fx.profiles[predicted.model_id].selection_cost,
        seg.accuracies[predicted.model_id]);
    CHECK(oracle.objective_value <= predicted_true_obj + 1e-12);
  }
}
