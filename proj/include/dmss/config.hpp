#pragma once

// Run configuration: one JSON file with sections per module, plus the model
// file schema. Command-line flags override config keys; "auto" placeholders
// for normalization constants resolve once the models and the historical
// dataset are known.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dmss/baselines.hpp"
#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/predictor.hpp"
#include "dmss/sim.hpp"
#include "dmss/traceio.hpp"

#include "json.hpp"

namespace dmss {

namespace detail {

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

/// Model file: JSON array of {model_id, name, flops_per_frame,
/// exec_time_estimate}. Explicit sample_cost / selection_cost override the
/// derived defaults (flops_per_frame x exemplar_frames, x segment frames).
inline std::vector<ModelProfile> load_models(const nlohmann::json& arr,
                                             int exemplar_frames,
                                             int segment_frames) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError("model file must be a nonempty JSON array");
  std::vector<ModelProfile> models;
  models.reserve(arr.size());
  for (const auto& j : arr) {
    ModelProfile p;
    p.model_id = detail::get_or<int>(j, "model_id", static_cast<int>(models.size()));
    p.name = detail::get_or<std::string>(j, "name", "m" + std::to_string(p.model_id));
    if (!j.contains("flops_per_frame"))
      throw ConfigError("model " + p.name + ": missing flops_per_frame");
    p.flops_per_frame = j.at("flops_per_frame").get<double>();
    if (j.contains("exec_time_estimate") && !j.at("exec_time_estimate").is_null())
      p.exec_time_estimate = j.at("exec_time_estimate").get<double>();
    p.sample_cost = detail::get_or<double>(j, "sample_cost",
                                           p.flops_per_frame * exemplar_frames);
    p.selection_cost = detail::get_or<double>(j, "selection_cost",
                                              p.flops_per_frame * segment_frames);
    models.push_back(std::move(p));
  }
  std::sort(models.begin(), models.end(),
            [](const ModelProfile& a, const ModelProfile& b) {
              return a.model_id < b.model_id;
            });
  validate_profiles(models);
  return models;
}

inline std::vector<ModelProfile> load_models_file(const std::string& path,
                                                  int exemplar_frames,
                                                  int segment_frames) {
  return load_models(detail::parse_json_file(path), exemplar_frames, segment_frames);
}

inline nlohmann::json models_to_json(const std::vector<ModelProfile>& models) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : models) {
    nlohmann::json j{{"model_id", m.model_id},
                     {"name", m.name},
                     {"flops_per_frame", m.flops_per_frame},
                     {"sample_cost", m.sample_cost},
                     {"selection_cost", m.selection_cost}};
    if (m.exec_time_estimate)
      j["exec_time_estimate"] = *m.exec_time_estimate;
    else
      j["exec_time_estimate"] = nullptr;
    arr.push_back(std::move(j));
  }
  return arr;
}

/// Objective section with "auto" placeholders still unresolved.
struct ObjectiveConfig {
  ObjectiveSpec spec;
  bool auto_cost_normalizer = true;
  bool auto_acc_range = true;

  /// Resolve "auto": cost normalizer = max selection cost among candidates;
  /// accuracy range = historical min/max.
  ObjectiveSpec resolve(const std::vector<ModelProfile>& models,
                        const HistoricalDataset* ds) const {
    ObjectiveSpec s = spec;
    if (auto_cost_normalizer) {
      double mx = 0.0;
      for (const auto& m : models) mx = std::max(mx, m.selection_cost);
      s.cost_normalizer = mx > 0 ? mx : 1.0;
    }
    if (auto_acc_range && ds != nullptr) {
      s.acc_lo = ds->accuracy_min();
      s.acc_hi = ds->accuracy_max();
      if (!(s.acc_lo < s.acc_hi)) {  // degenerate history
        s.acc_lo -= 0.5;
        s.acc_hi += 0.5;
      }
    }
    s.validate();
    return s;
  }
};

struct RunConfig {
  std::string models_path;                 // or inline array
  nlohmann::json models_inline;
  ObjectiveConfig objective;
  int bin_count = kDefaultBinCount;
  KnnConfig knn;
  int t_min = kDefaultTmin;
  int max_iters = -1;
  int exemplar_frames = 1;
  int segment_frames = 30;                 // nominal, for derived costs
  CascadeParams cascade;
  TieredParams tiered;
  SynthConfig synth;
  std::vector<double> sweep_grid;
  int sweep_trials = 32;
  std::vector<ParamRange> param_space;     // per-policy tunables
  std::vector<int> knn_k_grid = kDefaultKGrid;
  std::vector<DistanceMetric> knn_metric_grid = kDefaultMetricGrid;
  double knn_holdout_fraction = 0.2;
  CommitConfig commit;

  std::vector<ModelProfile> load_model_set() const {
    if (!models_inline.is_null())
      return load_models(models_inline, exemplar_frames, segment_frames);
    if (models_path.empty()) throw ConfigError("config: no models given");
    return load_models_file(models_path, exemplar_frames, segment_frames);
  }
};

inline ObjectiveConfig parse_objective(const nlohmann::json& j) {
  ObjectiveConfig oc;
  const std::string kind = detail::get_or<std::string>(j, "kind", "scalarized");
  if (kind == "scalarized")
    oc.spec.kind = ObjectiveKind::Scalarized;
  else if (kind == "chance_threshold")
    oc.spec.kind = ObjectiveKind::ChanceThreshold;
  else
    throw ConfigError("objective.kind must be scalarized or chance_threshold");
  oc.spec.alpha = detail::get_or<double>(j, "alpha", 0.5);
  oc.spec.acc_target = detail::get_or<double>(j, "acc_target", 0.0);
  oc.spec.confidence = detail::get_or<double>(j, "confidence", 0.9);
  if (j.contains("cost_normalizer") && !j.at("cost_normalizer").is_string()) {
    oc.spec.cost_normalizer = j.at("cost_normalizer").get<double>();
    oc.auto_cost_normalizer = false;
  }
  if (j.contains("acc_lo") && !j.at("acc_lo").is_string()) {
    oc.spec.acc_lo = j.at("acc_lo").get<double>();
    oc.spec.acc_hi = detail::get_or<double>(j, "acc_hi", oc.spec.acc_lo + 1.0);
    oc.auto_acc_range = false;
  }
  return oc;
}

inline DistanceMetric metric_from(const std::string& s) {
  if (s == "L1" || s == "l1") return DistanceMetric::L1;
  if (s == "L2" || s == "l2") return DistanceMetric::L2;
  throw ConfigError("knn.metric must be L1 or L2");
}

inline std::vector<ParamRange> parse_param_space(const nlohmann::json& j) {
  // {name: [lo, hi]} or {name: {"choices": [...]}} or {name: {"lo":..,"hi":..,"integer":true}}
  std::vector<ParamRange> space;
  for (auto it = j.begin(); it != j.end(); ++it) {
    ParamRange r;
    r.name = it.key();
    const auto& v = it.value();
    if (v.is_array()) {
      if (v.size() != 2) throw ConfigError("param " + r.name + ": range needs [lo, hi]");
      r.lo = v[0].get<double>();
      r.hi = v[1].get<double>();
    } else if (v.is_object()) {
      if (v.contains("choices")) {
        for (const auto& c : v.at("choices")) r.choices.push_back(c.get<double>());
        if (r.choices.empty()) throw ConfigError("param " + r.name + ": empty choices");
      } else {
        r.lo = v.at("lo").get<double>();
        r.hi = v.at("hi").get<double>();
        r.integer = detail::get_or<bool>(v, "integer", false);
      }
    } else {
      throw ConfigError("param " + r.name + ": expected [lo,hi] or object");
    }
    if (r.choices.empty() && !(r.lo <= r.hi))
      throw ConfigError("param " + r.name + ": lo must be <= hi");
    space.push_back(std::move(r));
  }
  return space;
}

inline SynthConfig parse_synth(const nlohmann::json& j) {
  SynthConfig s;
  s.model_count = detail::get_or<int>(j, "model_count", s.model_count);
  s.video_count = detail::get_or<int>(j, "video_count", s.video_count);
  s.segments_per_video = detail::get_or<int>(j, "segments_per_video", s.segments_per_video);
  s.frame_count = detail::get_or<int>(j, "frame_count", s.frame_count);
  s.exemplar_frames = detail::get_or<int>(j, "exemplar_frames", s.exemplar_frames);
  s.flops_per_frame = detail::get_or<std::vector<double>>(j, "flops_per_frame", {});
  s.exec_time = detail::get_or<std::vector<double>>(j, "exec_time", {});
  s.acc_mean = detail::get_or<std::vector<double>>(j, "acc_mean", {});
  s.acc_slope = detail::get_or<std::vector<double>>(j, "acc_slope", {});
  s.stat_loc = detail::get_or<std::vector<double>>(j, "stat_loc", {});
  s.stat_scale = detail::get_or<std::vector<double>>(j, "stat_scale", {});
  s.stat_stat_corr = detail::get_or<double>(j, "stat_stat_corr", s.stat_stat_corr);
  s.rho_a = detail::get_or<double>(j, "rho_a", s.rho_a);
  s.ar_coeff = detail::get_or<double>(j, "ar_coeff", s.ar_coeff);
  s.acc_noise = detail::get_or<double>(j, "acc_noise", s.acc_noise);
  return s;
}

inline RunConfig load_run_config(const std::string& path) {
  const nlohmann::json j = detail::parse_json_file(path);
  RunConfig c;
  if (j.contains("models")) {
    if (j.at("models").is_string())
      c.models_path = j.at("models").get<std::string>();
    else
      c.models_inline = j.at("models");
  }
  if (j.contains("objective")) c.objective = parse_objective(j.at("objective"));
  if (j.contains("binning"))
    c.bin_count = detail::get_or<int>(j.at("binning"), "bin_count", kDefaultBinCount);
  if (j.contains("knn")) {
    const auto& k = j.at("knn");
    c.knn.k = detail::get_or<int>(k, "k", c.knn.k);
    if (k.contains("metric")) c.knn.metric = metric_from(k.at("metric").get<std::string>());
    c.knn.distance_weighted = detail::get_or<bool>(k, "distance_weighted", false);
    c.knn_k_grid = detail::get_or<std::vector<int>>(k, "k_grid", c.knn_k_grid);
    if (k.contains("metric_grid")) {
      c.knn_metric_grid.clear();
      for (const auto& s : k.at("metric_grid"))
        c.knn_metric_grid.push_back(metric_from(s.get<std::string>()));
    }
    c.knn_holdout_fraction =
        detail::get_or<double>(k, "holdout_fraction", c.knn_holdout_fraction);
  }
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    c.t_min = detail::get_or<int>(p, "t_min", c.t_min);
    c.max_iters = detail::get_or<int>(p, "max_iters", c.max_iters);
    c.exemplar_frames = detail::get_or<int>(p, "exemplar_frames", c.exemplar_frames);
    c.segment_frames = detail::get_or<int>(p, "segment_frames", c.segment_frames);
  }
  if (j.contains("cascade")) {
    const auto& k = j.at("cascade");
    c.cascade.l = detail::get_or<double>(k, "l", c.cascade.l);
    c.cascade.h = detail::get_or<double>(k, "h", c.cascade.h);
    c.cascade.c = detail::get_or<double>(k, "c", c.cascade.c);
    c.cascade.small_id = detail::get_or<int>(k, "small_id", c.cascade.small_id);
    c.cascade.large_id = detail::get_or<int>(k, "large_id", c.cascade.large_id);
    c.cascade.escalate_on_empty =
        detail::get_or<bool>(k, "escalate_on_empty", false);
  }
  if (j.contains("tiered")) {
    const auto& k = j.at("tiered");
    c.tiered.window_length = detail::get_or<int>(k, "window_length", c.tiered.window_length);
    c.tiered.expensive_period =
        detail::get_or<int>(k, "expensive_period", c.tiered.expensive_period);
    c.tiered.cheap_period = detail::get_or<int>(k, "cheap_period", c.tiered.cheap_period);
    c.tiered.top_k = detail::get_or<int>(k, "top_k", c.tiered.top_k);
    c.tiered.reference_model_id =
        detail::get_or<int>(k, "reference_model_id", c.tiered.reference_model_id);
  }
  if (j.contains("synth")) c.synth = parse_synth(j.at("synth"));
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    c.sweep_grid = detail::get_or<std::vector<double>>(s, "grid", {});
    if (c.sweep_grid.empty())
      c.sweep_grid = detail::get_or<std::vector<double>>(s, "alpha_grid", {});
    if (c.sweep_grid.empty())
      c.sweep_grid = detail::get_or<std::vector<double>>(s, "target_grid", {});
    c.sweep_trials = detail::get_or<int>(s, "trials", c.sweep_trials);
  }
  if (j.contains("param_space")) c.param_space = parse_param_space(j.at("param_space"));
  if (j.contains("commit")) {
    const auto& k = j.at("commit");
    c.commit.t_arr = detail::get_or<double>(k, "t_arr", 0.0);
    c.commit.t_deadline = detail::get_or<double>(k, "t_deadline", 5.0);
    c.commit.q_hat = detail::get_or<double>(k, "q_hat", 0.0);
    c.commit.control_overhead = detail::get_or<double>(k, "control_overhead", 0.0);
    c.commit.exec_time = detail::get_or<std::vector<double>>(k, "exec_time", {});
    c.commit.sample_latency =
        detail::get_or<std::vector<double>>(k, "sample_latency", {});
  }
  return c;
}

}  // namespace dmss
