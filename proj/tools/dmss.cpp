// Command-line entry point: trace generation/validation, policy runs,
// Pareto sweeps, parameter tuning, and the sampling-subset analysis.
// Progress goes to stderr; data only to files. Exit codes: 0 success,
// 2 configuration error, 3 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dmss/dmss.hpp"
#include "json.hpp"

namespace {

using namespace dmss;

// Temp-file-then-rename so partial output never lands under the final name.
void write_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

int env_threads() {
  const char* v = std::getenv("DMSS_THREADS");
  if (v == nullptr) return static_cast<int>(std::thread::hardware_concurrency());
  const int n = std::atoi(v);
  return n > 0 ? n : 1;
}

struct LoadedRun {
  RunConfig cfg;
  std::vector<ModelProfile> models;
  HistoricalDataset dataset;
  ObjectiveSpec spec;

  Engine engine() const { return Engine{&dataset, &models, cfg.knn, spec}; }
};

LoadedRun load_run(const std::string& config_path, const std::string& history_path) {
  RunConfig cfg = load_run_config(config_path);
  auto models = cfg.load_model_set();
  auto records = load_trace(history_path);
  if (static_cast<int>(records.front().stats.size()) !=
      static_cast<int>(models.size()))
    throw DataError("history covers " +
                    std::to_string(records.front().stats.size()) +
                    " models but the model set declares " +
                    std::to_string(models.size()));
  auto dataset = HistoricalDataset::build(std::move(records), cfg.bin_count);
  auto spec = cfg.objective.resolve(models, &dataset);
  return LoadedRun{std::move(cfg), std::move(models), std::move(dataset), spec};
}

PolicyConfig policy_from(const RunConfig& cfg, const std::string& name,
                         bool no_charge_sampling, bool oracle_accuracy) {
  PolicyConfig p;
  p.kind = policy_kind_from(name);
  p.t_min = cfg.t_min;
  p.max_iters = cfg.max_iters;
  p.cascade = cfg.cascade;
  p.tiered = cfg.tiered;
  p.charge_sampling = !no_charge_sampling;
  p.oracle_accuracy = oracle_accuracy;
  return p;
}

int cmd_gen_trace(const std::string& config_path, const std::string& out,
                  const std::string& models_out, std::uint64_t seed) {
  RunConfig cfg = load_run_config(config_path);
  if (cfg.synth.flops_per_frame.empty())
    throw ConfigError("gen-trace: config has no synth section");
  auto res = gen_synthetic(cfg.synth, seed);
  std::ostringstream trace;
  write_trace(res.records, trace);
  write_atomic(out, trace.str());
  const std::string mpath =
      models_out.empty() ? out + ".models.json" : models_out;
  write_atomic(mpath, models_to_json(res.models).dump(2) + "\n");
  std::cerr << "gen-trace: wrote " << res.records.size() << " segments ("
            << cfg.synth.video_count << " videos) to " << out << ", models to "
            << mpath << "\n";
  return 0;
}

int cmd_validate(const std::string& trace_path) {
  auto records = load_trace(trace_path);
  std::cerr << "validate: " << trace_path << ": " << records.size()
            << " segments, " << records.front().stats.size() << " models\n";
  return 0;
}

std::string decisions_jsonl(const PolicyRunReport& rep) {
  std::ostringstream out;
  for (const auto& d : rep.decisions) out << to_json(d).dump() << "\n";
  return out.str();
}

std::string transcripts_jsonl(const PolicyRunReport& rep) {
  std::ostringstream out;
  for (const auto& t : rep.transcripts) out << to_json(t).dump() << "\n";
  return out.str();
}

int cmd_run(const std::string& config_path, const std::string& policy,
            const std::string& trace_path, const std::string& history_path,
            const std::string& out, const std::string& decisions_out,
            const std::string& transcripts_out, double alpha_override,
            double target_override, bool no_charge_sampling,
            bool oracle_accuracy) {
  LoadedRun run = load_run(config_path, history_path);
  if (alpha_override >= 0.0) run.spec.alpha = alpha_override;
  if (target_override > -1e17) run.spec.acc_target = target_override;
  run.spec.validate();
  const Engine eng = run.engine();
  const auto trace = load_trace(trace_path);
  const PolicyConfig pol =
      policy_from(run.cfg, policy, no_charge_sampling, oracle_accuracy);

  auto rep = run_policy(trace, pol, eng, !transcripts_out.empty());
  if (pol.kind == PolicyKind::SampleOnce && pol.charge_sampling &&
      !pol.oracle_accuracy) {
    normalize_against(rep, rep);
  } else {
    PolicyConfig ref;
    ref.kind = PolicyKind::SampleOnce;
    normalize_against(rep, run_policy(trace, ref, eng));
  }

  write_atomic(out, report_csv_header() + "\n" + report_csv_row(rep) + "\n");
  if (!decisions_out.empty()) write_atomic(decisions_out, decisions_jsonl(rep));
  if (!transcripts_out.empty()) write_atomic(transcripts_out, transcripts_jsonl(rep));
  std::cerr << "run: " << rep.policy << " cost/frame=" << rep.cost_per_frame
            << " accuracy=" << rep.accuracy << " normalized="
            << rep.normalized_cost << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& policy,
              const std::string& train_path, const std::string& test_path,
              const std::string& history_path, const std::string& out,
              std::uint64_t seed) {
  LoadedRun run = load_run(config_path, history_path);
  if (run.cfg.sweep_grid.empty())
    throw ConfigError("sweep: config has no sweep.grid");
  const Engine eng = run.engine();
  const auto train = load_trace(train_path);
  const auto test = load_trace(test_path);

  SweepConfig sc;
  sc.policy = policy_from(run.cfg, policy, false, false);
  sc.grid = run.cfg.sweep_grid;
  sc.trials = run.cfg.sweep_trials;
  sc.seed = seed;
  sc.threads = env_threads();
  if (sc.policy.kind == PolicyKind::Cascade || sc.policy.kind == PolicyKind::Tiered)
    sc.space = run.cfg.param_space;

  auto points = pareto_sweep(train, test, eng, sc);
  std::ostringstream csv;
  csv << report_csv_header() << ",on_frontier\n";
  for (const auto& p : points)
    csv << report_csv_row(p.report) << ',' << (p.on_frontier ? 1 : 0) << "\n";
  write_atomic(out, csv.str());
  std::cerr << "sweep: " << points.size() << " operating points written to "
            << out << "\n";
  return 0;
}

int cmd_tune(const std::string& config_path, const std::string& policy,
             const std::string& trace_path, const std::string& history_path,
             const std::string& out, std::uint64_t seed) {
  LoadedRun run = load_run(config_path, history_path);
  nlohmann::json result;
  if (policy == "knn") {
    auto cfg = tune_knn(run.dataset, run.cfg.knn_k_grid, run.cfg.knn_metric_grid,
                        run.cfg.knn_holdout_fraction, seed);
    result = {{"k", cfg.k},
              {"metric", cfg.metric == DistanceMetric::L1 ? "L1" : "L2"}};
  } else {
    if (run.cfg.param_space.empty())
      throw ConfigError("tune: config has no param_space");
    const Engine eng = run.engine();
    const auto train = load_trace(trace_path);
    const PolicyConfig base = policy_from(run.cfg, policy, false, false);
    auto evaluate = [&](const ParamVector& v) {
      PolicyConfig p = base;
      for (const auto& [name, x] : v) {
        // reuse the sweep plumbing for parameter application
        p = dmss::detail::apply_params(p, {{name, x}});
      }
      auto rep = run_policy(train, p, eng);
      return dmss::detail::tuning_score(rep, eng);
    };
    auto best = random_param_search(run.cfg.param_space, evaluate,
                                    run.cfg.sweep_trials, seed);
    result["score"] = best.score;
    for (const auto& [name, x] : best.params) result["params"][name] = x;
  }
  write_atomic(out, result.dump(2) + "\n");
  std::cerr << "tune: wrote " << out << "\n";
  return 0;
}

int cmd_subset_analysis(const std::string& config_path,
                        const std::string& trace_path,
                        const std::string& history_path,
                        const std::string& out) {
  LoadedRun run = load_run(config_path, history_path);
  const Engine eng = run.engine();
  const auto trace = load_trace(trace_path);
  auto rows = optimal_subset_analysis(trace, eng);
  std::ostringstream csv;
  csv << "video_id,segment_index,optimal_size,best_objective\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9g", r.best_objective);
    csv << r.video_id << ',' << r.segment_index << ',' << r.optimal_size << ','
        << buf << "\n";
  }
  write_atomic(out, csv.str());
  std::cerr << "subset-analysis: " << rows.size() << " segments written to "
            << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dmss: dynamic model-size selection engine"};
  app.require_subcommand(1);

  std::string config_path, trace_path, history_path, train_path, test_path;
  std::string out, models_out, decisions_out, transcripts_out, policy;
  std::uint64_t seed = 0;
  double alpha_override = -1.0;
  double target_override = -1e18;
  bool no_charge_sampling = false, oracle_accuracy = false;

  auto* gen = app.add_subcommand("gen-trace", "generate a synthetic trace");
  gen->add_option("config", config_path)->required();
  gen->add_option("-o,--output", out)->required();
  gen->add_option("--models-out", models_out);
  gen->add_option("--seed", seed)->required();

  auto* val = app.add_subcommand("validate", "validate a trace file");
  val->add_option("trace", trace_path)->required();

  auto* runc = app.add_subcommand("run", "run one policy over a trace");
  runc->add_option("config", config_path)->required();
  runc->add_option("--policy", policy)->required();
  runc->add_option("--trace", trace_path)->required();
  runc->add_option("--history", history_path)->required();
  runc->add_option("-o,--output", out)->required();
  runc->add_option("--decisions", decisions_out);
  runc->add_option("--transcripts", transcripts_out);
  runc->add_option("--alpha", alpha_override);
  runc->add_option("--target", target_override);
  runc->add_flag("--no-charge-sampling", no_charge_sampling);
  runc->add_flag("--oracle-accuracy", oracle_accuracy);

  auto* sweep = app.add_subcommand("sweep", "Pareto sweep over operating points");
  sweep->add_option("config", config_path)->required();
  sweep->add_option("--policy", policy)->required();
  sweep->add_option("--trace-train", train_path)->required();
  sweep->add_option("--trace-test", test_path)->required();
  sweep->add_option("--history", history_path)->required();
  sweep->add_option("-o,--output", out)->required();
  sweep->add_option("--seed", seed)->required();

  auto* tune = app.add_subcommand("tune", "tune policy control parameters");
  tune->add_option("config", config_path)->required();
  tune->add_option("--policy", policy)->required();
  tune->add_option("--trace", trace_path);
  tune->add_option("--history", history_path)->required();
  tune->add_option("-o,--output", out)->required();
  tune->add_option("--seed", seed);

  auto* subset = app.add_subcommand("subset-analysis",
                                    "optimal sampling-subset sizes per segment");
  subset->add_option("config", config_path)->required();
  subset->add_option("--trace", trace_path)->required();
  subset->add_option("--history", history_path)->required();
  subset->add_option("-o,--output", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen_trace(config_path, out, models_out, seed);
    if (val->parsed()) return cmd_validate(trace_path);
    if (runc->parsed())
      return cmd_run(config_path, policy, trace_path, history_path, out,
                     decisions_out, transcripts_out, alpha_override,
                     target_override, no_charge_sampling, oracle_accuracy);
    if (sweep->parsed())
      return cmd_sweep(config_path, policy, train_path, test_path, history_path,
                       out, seed);
    if (tune->parsed())
      return cmd_tune(config_path, policy, trace_path, history_path, out, seed);
    if (subset->parsed())
      return cmd_subset_analysis(config_path, trace_path, history_path, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
