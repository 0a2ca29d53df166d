#pragma once

// Trace-driven harness: replay policies over traces, aggregate cost and
// accuracy into reports, sweep operating points into Pareto frontiers,
// simulate the deadline-commit protocol, and run the exhaustive
// optimal-sampling-subset analysis.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "dmss/baselines.hpp"
#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/planner.hpp"
#include "dmss/selector.hpp"

#include "json.hpp"

namespace dmss {

enum class PolicyKind { Planner, SampleOnce, Cascade, Tiered, Oracle, Static };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Planner: return "planner";
    case PolicyKind::SampleOnce: return "sample-once";
    case PolicyKind::Cascade: return "cascade";
    case PolicyKind::Tiered: return "tiered";
    case PolicyKind::Oracle: return "oracle";
    case PolicyKind::Static: return "static";
  }
  return "?";
}

inline PolicyKind policy_kind_from(const std::string& s) {
  if (s == "planner") return PolicyKind::Planner;
  if (s == "sample-once") return PolicyKind::SampleOnce;
  if (s == "cascade") return PolicyKind::Cascade;
  if (s == "tiered") return PolicyKind::Tiered;
  if (s == "oracle") return PolicyKind::Oracle;
  if (s == "static") return PolicyKind::Static;
  throw ConfigError("unknown policy: " + s);
}

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Planner;
  int t_min = kDefaultTmin;    // planner
  int max_iters = -1;          // planner; -1 = M-1
  CascadeParams cascade;
  TieredParams tiered;
  int static_model_id = 0;
  bool charge_sampling = true;     // false = no-cost sampling diagnostic
  bool oracle_accuracy = false;    // oracle-accuracy diagnostic (sample-once, tiered)

  std::string name() const {
    std::string n = to_string(kind);
    if (!charge_sampling) n += "+no-cost-sampling";
    if (oracle_accuracy) n += "+oracle-accuracy";
    return n;
  }
};

struct PolicyRunReport {
  std::string policy;
  double operating_point = std::numeric_limits<double>::quiet_NaN();  // alpha or target
  std::vector<SegmentDecision> decisions;
  std::vector<PlanTranscript> transcripts;  // planner runs only
  double total_cost_gflops = 0.0;
  double cost_per_frame = 0.0;
  double accuracy = 0.0;  // frame-weighted mean over selected models
  double normalized_cost = std::numeric_limits<double>::quiet_NaN();
  long total_frames = 0;
  int n_segments = 0;
  int n_videos = 0;
};

namespace detail {

inline void finalize_report(PolicyRunReport& rep) {
  double cost = 0.0, acc_w = 0.0;
  long frames = 0;
  std::string last_video;
  int videos = 0;
  for (const auto& d : rep.decisions) {
    cost += d.total_cost;
    acc_w += d.true_accuracy * d.frames;
    frames += d.frames;
    if (d.video_id != last_video) {
      ++videos;
      last_video = d.video_id;
    }
  }
  rep.total_cost_gflops = cost;
  rep.total_frames = frames;
  rep.cost_per_frame = frames > 0 ? cost / frames : 0.0;
  rep.accuracy = frames > 0 ? acc_w / frames : 0.0;
  rep.n_segments = static_cast<int>(rep.decisions.size());
  rep.n_videos = videos;
}

inline void drop_sampling_charges(std::vector<SegmentDecision>& decisions) {
  for (auto& d : decisions) {
    d.sample_cost = 0.0;
    d.total_cost = d.selection_cost;
  }
}

}  // namespace detail

/// Replay every segment of the trace through the policy. Deterministic.
inline PolicyRunReport run_policy(const std::vector<SegmentRecord>& trace,
                                  const PolicyConfig& policy, const Engine& eng,
                                  bool keep_transcripts = false) {
  if (trace.empty()) throw DataError("run_policy: empty trace");
  for (const auto& seg : trace)
    if (static_cast<int>(seg.stats.size()) != eng.model_count())
      throw DataError("run_policy: trace and policy model sets disagree (segment " +
                      seg.video_id + "/" + std::to_string(seg.segment_index) + ")");

  PolicyRunReport rep;
  rep.policy = policy.name();
  rep.operating_point = eng.objective.kind == ObjectiveKind::Scalarized
                            ? eng.objective.alpha
                            : eng.objective.acc_target;

  switch (policy.kind) {
    case PolicyKind::Planner: {
      EvalCaches caches;
      rep.decisions.reserve(trace.size());
      for (const auto& seg : trace) {
        auto tr = plan_segment(eng, seg, caches, policy.t_min, policy.max_iters);
        std::vector<int> sampled;
        for (const auto& s : tr.steps) sampled.push_back(s.model_id);
        if (tr.rolled_back) sampled.push_back(tr.rolled_back->model_id);
        rep.decisions.push_back(detail::make_decision(
            seg, eng.profiles(), tr.selection.model_id, std::move(sampled)));
        if (keep_transcripts) rep.transcripts.push_back(std::move(tr));
      }
      break;
    }
    case PolicyKind::SampleOnce:
      rep.decisions = sample_once(trace, eng, policy.oracle_accuracy);
      break;
    case PolicyKind::Cascade:
      rep.decisions = cascade(trace, policy.cascade, eng.profiles());
      break;
    case PolicyKind::Tiered:
      rep.decisions = tiered_sampling(trace, policy.tiered, eng, policy.oracle_accuracy);
      break;
    case PolicyKind::Oracle:
      rep.decisions = oracle_policy(trace, eng, policy.charge_sampling);
      break;
    case PolicyKind::Static: {
      if (policy.static_model_id < 0 || policy.static_model_id >= eng.model_count())
        throw ConfigError("static policy: model id out of range");
      rep.decisions.reserve(trace.size());
      for (const auto& seg : trace)
        rep.decisions.push_back(
            detail::make_decision(seg, eng.profiles(), policy.static_model_id, {}));
      break;
    }
  }

  if (!policy.charge_sampling && policy.kind != PolicyKind::Oracle)
    detail::drop_sampling_charges(rep.decisions);
  detail::finalize_report(rep);
  return rep;
}

inline void normalize_against(PolicyRunReport& rep, const PolicyRunReport& reference) {
  rep.normalized_cost = rep.cost_per_frame / reference.cost_per_frame;
}

/// Realized objective of one decision: the configured objective evaluated at
/// the selected model's nominal cost (plus sampling when charged) and the
/// true accuracy.
inline double realized_objective(const SegmentDecision& d, const Engine& eng,
                                 bool include_sampling = true) {
  const double cost = eng.profiles()[d.selected_model].selection_cost +
                      (include_sampling ? d.sample_cost : 0.0);
  return eng.objective.value(cost, d.true_accuracy);
}

// ---------------------------------------------------------------------------
// Pareto sweep

struct SweepPoint {
  double value = 0.0;  // alpha or accuracy target
  PolicyRunReport report;
  PolicyRunReport reference;  // sample-once at the same operating point
  ParamVector tuned_params;
  bool on_frontier = false;
};

struct SweepConfig {
  PolicyConfig policy;
  std::vector<double> grid;          // alphas or accuracy targets
  std::vector<ParamRange> space;     // tuned per point when nonempty
  int trials = 32;
  std::uint64_t seed = 0;
  int threads = 1;
};

namespace detail {

inline Engine with_point(const Engine& base, double value) {
  Engine e = base;
  if (e.objective.kind == ObjectiveKind::Scalarized)
    e.objective.alpha = value;
  else
    e.objective.acc_target = value;
  return e;
}

inline PolicyConfig apply_params(PolicyConfig p, const ParamVector& v) {
  for (const auto& [name, x] : v) {
    if (name == "l") p.cascade.l = x;
    else if (name == "h") p.cascade.h = x;
    else if (name == "c") p.cascade.c = x;
    else if (name == "window_length") p.tiered.window_length = static_cast<int>(x);
    else if (name == "expensive_period") p.tiered.expensive_period = static_cast<int>(x);
    else if (name == "cheap_period") p.tiered.cheap_period = static_cast<int>(x);
    else if (name == "top_k") p.tiered.top_k = static_cast<int>(x);
    else if (name == "reference_model_id") p.tiered.reference_model_id = static_cast<int>(x);
    else if (name == "t_min") p.t_min = static_cast<int>(x);
    else if (name == "max_iters") p.max_iters = static_cast<int>(x);
    else throw ConfigError("unknown tunable parameter: " + name);
  }
  return p;
}

// Tuning score: mean realized objective with sampling charged; chance runs
// score by cost subject to meeting the accuracy target (infeasible vectors
// rank behind all feasible ones).
inline double tuning_score(const PolicyRunReport& rep, const Engine& eng) {
  if (eng.objective.kind == ObjectiveKind::ChanceThreshold) {
    const bool feasible = rep.accuracy >= eng.objective.acc_target;
    return feasible ? rep.cost_per_frame
                    : 1e12 * (1.0 + eng.objective.acc_target - rep.accuracy);
  }
  double sum = 0.0;
  for (const auto& d : rep.decisions) sum += realized_objective(d, eng, true);
  return sum / rep.decisions.size();
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// For each grid point: tune the policy's control parameters on the training
/// trace (random search, when a space is declared), evaluate on the test
/// trace, and record (cost, accuracy) together with a sample-once reference.
/// Rows for every grid point are returned; `on_frontier` marks the
/// non-dominated ones.
inline std::vector<SweepPoint> pareto_sweep(
    const std::vector<SegmentRecord>& trace_train,
    const std::vector<SegmentRecord>& trace_test, const Engine& base,
    const SweepConfig& cfg) {
  if (cfg.grid.empty()) throw ConfigError("pareto_sweep: empty grid");

  std::vector<SweepPoint> points(cfg.grid.size());
  auto run_point = [&](std::size_t i) {
    const Engine eng = detail::with_point(base, cfg.grid[i]);
    SweepPoint& pt = points[i];
    pt.value = cfg.grid[i];
    PolicyConfig tuned = cfg.policy;
    if (!cfg.space.empty()) {
      auto evaluate = [&](const ParamVector& v) {
        auto rep = run_policy(trace_train, detail::apply_params(cfg.policy, v), eng);
        return detail::tuning_score(rep, eng);
      };
      auto best = random_param_search(cfg.space, evaluate, cfg.trials,
                                      detail::derive_seed(cfg.seed, i));
      pt.tuned_params = best.params;
      tuned = detail::apply_params(cfg.policy, best.params);
    }
    pt.report = run_policy(trace_test, tuned, eng);
    PolicyConfig ref;
    ref.kind = PolicyKind::SampleOnce;
    pt.reference = run_policy(trace_test, ref, eng);
    normalize_against(pt.report, pt.reference);
    normalize_against(pt.reference, pt.reference);
  };

  int threads = cfg.threads > 0 ? cfg.threads : 1;
  threads = std::min<int>(threads, static_cast<int>(points.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < points.size();
             i = next.fetch_add(1))
          run_point(i);
      });
    for (auto& th : pool) th.join();
  }

  // Lower-left frontier: dominated iff some other point has cost <= and
  // accuracy >= with at least one strict.
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      if (j == i) continue;
      const auto& a = points[i].report;
      const auto& b = points[j].report;
      if (b.cost_per_frame <= a.cost_per_frame && b.accuracy >= a.accuracy &&
          (b.cost_per_frame < a.cost_per_frame || b.accuracy > a.accuracy))
        dominated = true;
    }
    points[i].on_frontier = !dominated;
  }
  std::sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) {
    return a.report.accuracy != b.report.accuracy
               ? a.report.accuracy < b.report.accuracy
               : a.value < b.value;
  });
  return points;
}

// ---------------------------------------------------------------------------
// Deadline-commit protocol

struct CommitConfig {
  double t_arr = 0.0;
  double t_deadline = 5.0;
  double q_hat = 0.0;                  // estimated queuing delay
  std::vector<double> exec_time;       // per model
  double control_overhead = 0.0;       // per planner iteration
  std::vector<double> sample_latency;  // per model, exemplar-frame inference
  int default_model = 0;
};

struct CommitEvent {
  double time = 0.0;  // completion time of a planner iteration
  int model_id = 0;   // tentative selection after it
};

struct CommitOutcome {
  int committed_model = 0;
  double commit_time = 0.0;
  bool truncated = false;   // committed before the planner finished
  int samples_used = 0;     // iterations whose statistic informed the commit
  int samples_charged = 0;  // iterations started before the commit fired
  std::vector<std::pair<int, double>> timeline;  // (model, its commit time)
};

inline double commit_time_for(const CommitConfig& cfg, int model_id) {
  return cfg.t_arr + cfg.t_deadline - cfg.q_hat - cfg.exec_time.at(model_id);
}

/// Replay asynchronous <m_curr, t_commit> updates. The data plane fires at
/// the pending commit time of the current tentative model; updates landing
/// exactly at that instant still count. An in-flight sample is finished (and
/// charged) but its statistic is excluded when it lands after the commit.
inline CommitOutcome simulate_commit(const std::vector<CommitEvent>& updates,
                                     const CommitConfig& cfg) {
  CommitOutcome out;
  int current = cfg.default_model;
  double pending = commit_time_for(cfg, current);
  out.timeline.push_back({current, pending});

  if (pending <= cfg.t_arr) {
    // No time even for the default's own slack: commit immediately.
    out.committed_model = current;
    out.commit_time = pending;
    out.truncated = !updates.empty();
    out.samples_charged = 0;
    return out;
  }

  std::size_t used = 0;
  for (; used < updates.size(); ++used) {
    const auto& u = updates[used];
    if (pending < u.time) break;  // commit fired before this update landed
    current = u.model_id;
    pending = commit_time_for(cfg, current);
    out.timeline.push_back({current, pending});
  }
  out.committed_model = current;
  out.commit_time = pending;
  out.samples_used = static_cast<int>(used);
  out.truncated = used < updates.size();
  // Sample i+1 starts when update i lands (update 0 starts at arrival).
  out.samples_charged = static_cast<int>(used);
  if (used < updates.size()) {
    const double start = used == 0 ? cfg.t_arr : updates[used - 1].time;
    if (start < pending) ++out.samples_charged;
  }
  return out;
}

/// Derive timed updates from a planner transcript: each step costs one
/// control-plane round plus the sampled model's exemplar inference.
inline std::vector<CommitEvent> events_from_transcript(const PlanTranscript& tr,
                                                       const CommitConfig& cfg) {
  std::vector<CommitEvent> ev;
  double t = cfg.t_arr;
  for (const auto& s : tr.steps) {
    t += cfg.control_overhead;
    if (!cfg.sample_latency.empty()) t += cfg.sample_latency.at(s.model_id);
    ev.push_back({t, s.tentative_model});
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Optimal sampling-subset analysis

struct SubsetAnalysisRow {
  std::string video_id;
  int segment_index = 0;
  int optimal_size = 0;
  double best_objective = 0.0;
};

/// Exhaustively enumerate sampling subsets per segment, charge their costs,
/// select on the revealed statistics, and score with the true accuracy of
/// the selected model. Reports the size of the best subset (smallest size
/// wins ties). Guarded to M <= 12.
inline std::vector<SubsetAnalysisRow> optimal_subset_analysis(
    const std::vector<SegmentRecord>& trace, const Engine& eng) {
  const int m = eng.model_count();
  if (m > 12)
    throw std::invalid_argument(
        "optimal_subset_analysis: exhaustive enumeration limited to M <= 12");

  std::vector<SubsetAnalysisRow> rows;
  rows.reserve(trace.size());
  PredictionCache cache;
  for (const auto& seg : trace) {
    double best_obj = std::numeric_limits<double>::infinity();
    int best_size = 0;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      ObservationSet obs;
      double sample_sum = 0.0;
      for (int i = 0; i < m; ++i) {
        if (!(mask & (1u << i))) continue;
        obs.push({i, eng.ds().discretize(i, seg.stats[i]), seg.stats[i]});
        sample_sum += eng.profiles()[i].sample_cost;
      }
      const auto sel = select(eng, obs, &cache);
      const double obj =
          eng.objective.value(sample_sum + eng.profiles()[sel.model_id].selection_cost,
                              seg.accuracies[sel.model_id]);
      const int size = std::popcount(mask);
      if (obj < best_obj || (obj == best_obj && size < best_size)) {
        best_obj = obj;
        best_size = size;
      }
    }
    rows.push_back({seg.video_id, seg.segment_index, best_size, best_obj});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string report_csv_header() {
  return "policy,alpha_or_target,cost_gflops_per_frame,normalized_cost,accuracy,"
         "n_segments,n_videos";
}

inline std::string report_csv_row(const PolicyRunReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g,%d,%d",
                rep.policy.c_str(), rep.operating_point, rep.cost_per_frame,
                rep.normalized_cost, rep.accuracy, rep.n_segments, rep.n_videos);
  return buf;
}

inline nlohmann::json to_json(const SegmentDecision& d) {
  return {{"video_id", d.video_id},
          {"segment_index", d.segment_index},
          {"frames", d.frames},
          {"selected_model", d.selected_model},
          {"sampled_models", d.sampled_models},
          {"sample_cost", d.sample_cost},
          {"selection_cost", d.selection_cost},
          {"total_cost", d.total_cost},
          {"true_accuracy", d.true_accuracy}};
}

}  // namespace dmss
