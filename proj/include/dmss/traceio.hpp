#pragma once

// Trace ingestion, validation, and synthetic trace generation. Traces are
// long-form CSV (one row per segment per model); the generator drives all
// models' statistics and accuracies off a shared per-video latent difficulty
// process so that stat-stat and stat-accuracy correlations are independently
// controllable.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dmss/core.hpp"

namespace dmss {

inline constexpr const char* kTraceHeader =
    "video_id,segment_index,frame_count,model_id,stat_value,accuracy";

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_real(const std::string& s, const std::string& where) {
  double v;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || p != end)
    throw DataError(where + ": bad real value '" + s + "'");
  if (!std::isfinite(v)) throw DataError(where + ": non-finite value '" + s + "'");
  return v;
}

inline long parse_int(const std::string& s, const std::string& where) {
  long v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError(where + ": bad integer value '" + s + "'");
  return v;
}

}  // namespace detail

/// Parse a long-form trace CSV into segment records, one per
/// (video_id, segment_index), validated for full model coverage and sorted
/// by (video_id, segment_index). Errors carry the offending line number.
inline std::vector<SegmentRecord> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ":1: empty file");
  {
    auto cols = detail::split_csv(line);
    auto expect = detail::split_csv(kTraceHeader);
    if (cols != expect)
      throw DataError(path + ":1: expected header '" + kTraceHeader + "'");
  }

  struct Row {
    double stat, acc;
    long frames;
    long lineno;
  };
  // (video, segment) -> model -> row
  std::map<std::pair<std::string, long>, std::map<long, Row>> groups;
  int max_model = -1;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    auto f = detail::split_csv(line);
    if (f.size() != 6)
      throw DataError(where + ": expected 6 columns, got " +
                      std::to_string(f.size()));
    const std::string& video = f[0];
    const long seg = detail::parse_int(f[1], where);
    const long frames = detail::parse_int(f[2], where);
    const long model = detail::parse_int(f[3], where);
    const double stat = detail::parse_real(f[4], where);
    const double acc = detail::parse_real(f[5], where);
    if (seg < 0) throw DataError(where + ": negative segment_index");
    if (frames <= 0) throw DataError(where + ": frame_count must be > 0");
    if (model < 0) throw DataError(where + ": negative model_id");

    auto& group = groups[{video, seg}];
    if (group.count(model))
      throw DataError(where + ": duplicate row for (" + video + ", " +
                      std::to_string(seg) + ", model " + std::to_string(model) +
                      ")");
    if (!group.empty() && group.begin()->second.frames != frames)
      throw DataError(where + ": frame_count disagrees within segment (" +
                      video + ", " + std::to_string(seg) + ")");
    group[model] = {stat, acc, frames, lineno};
    max_model = std::max(max_model, static_cast<int>(model));
  }
  if (groups.empty()) throw DataError(path + ": trace has no data rows");

  const int m_count = max_model + 1;
  std::vector<SegmentRecord> records;
  records.reserve(groups.size());
  for (const auto& [key, rows] : groups) {
    if (static_cast<int>(rows.size()) != m_count) {
      std::string missing;
      for (int m = 0; m < m_count; ++m)
        if (!rows.count(m)) missing += (missing.empty() ? "" : ",") + std::to_string(m);
      throw DataError(path + ":" + std::to_string(rows.begin()->second.lineno) +
                      ": segment (" + key.first + ", " +
                      std::to_string(key.second) + ") missing model(s) " + missing);
    }
    SegmentRecord r;
    r.video_id = key.first;
    r.segment_index = static_cast<int>(key.second);
    r.frame_count = static_cast<int>(rows.begin()->second.frames);
    r.stats.resize(m_count);
    r.accuracies.resize(m_count);
    for (const auto& [model, row] : rows) {
      r.stats[model] = row.stat;
      r.accuracies[model] = row.acc;
    }
    records.push_back(std::move(r));
  }
  // std::map ordering already gives (video_id, segment_index) order.
  return records;
}

inline void write_trace(const std::vector<SegmentRecord>& records,
                        std::ostream& out) {
  out << kTraceHeader << "\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : records) {
    for (std::size_t m = 0; m < r.stats.size(); ++m) {
      out << r.video_id << ',' << r.segment_index << ',' << r.frame_count << ','
          << m << ',' << fmt(r.stats[m]) << ',' << fmt(r.accuracies[m]) << "\n";
    }
  }
}

inline void write_trace(const std::vector<SegmentRecord>& records,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  write_trace(records, out);
}

/// Synthetic workload parameters. Statistics of all models load on a shared
/// per-video AR(1) latent difficulty, inducing pairwise stat correlations of
/// stat_stat_corr; accuracies decrease with difficulty at per-model slopes
/// scaled by the accuracy-latent coupling rho_a.
struct SynthConfig {
  int model_count = 3;
  int video_count = 10;
  int segments_per_video = 100;
  int frame_count = 30;
  int exemplar_frames = 1;
  std::vector<double> flops_per_frame;  // cost ladder, ascending
  std::vector<double> exec_time;        // optional, seconds
  std::vector<double> acc_mean;
  std::vector<double> acc_slope;        // accuracy loss per unit difficulty
  std::vector<double> stat_loc;         // optional affine placement of stats
  std::vector<double> stat_scale;
  double stat_stat_corr = 0.75;  // target pairwise stat correlation
  double rho_a = 0.8;            // accuracy-latent coupling in [-1,1]
  double ar_coeff = 0.9;         // within-video AR(1) coefficient, |.| < 1
  double acc_noise = 0.02;

  void validate() const {
    if (model_count < 1) throw ConfigError("synth: model_count must be >= 1");
    if (video_count < 1 || segments_per_video < 1)
      throw ConfigError("synth: need at least one video and segment");
    if (frame_count < 1) throw ConfigError("synth: frame_count must be >= 1");
    if (exemplar_frames < 1 || exemplar_frames > frame_count)
      throw ConfigError("synth: exemplar_frames must be in [1, frame_count]");
    auto need = [&](const std::vector<double>& v, const char* name) {
      if (static_cast<int>(v.size()) != model_count)
        throw ConfigError(std::string("synth: ") + name + " must list " +
                          std::to_string(model_count) + " values");
    };
    need(flops_per_frame, "flops_per_frame");
    need(acc_mean, "acc_mean");
    need(acc_slope, "acc_slope");
    if (!exec_time.empty()) need(exec_time, "exec_time");
    if (!stat_loc.empty()) need(stat_loc, "stat_loc");
    if (!stat_scale.empty()) need(stat_scale, "stat_scale");
    for (int i = 1; i < model_count; ++i)
      if (flops_per_frame[i] < flops_per_frame[i - 1])
        throw ConfigError("synth: flops_per_frame must be nondecreasing");
    if (!(stat_stat_corr >= 0.0 && stat_stat_corr <= 1.0))
      throw ConfigError(
          "synth: infeasible stat_stat_corr target (implied covariance not "
          "positive semidefinite outside [0,1])");
    if (!(rho_a >= -1.0 && rho_a <= 1.0))
      throw ConfigError("synth: rho_a must be in [-1,1]");
    if (!(std::fabs(ar_coeff) < 1.0))
      throw ConfigError("synth: |ar_coeff| must be < 1");
    if (acc_noise < 0.0) throw ConfigError("synth: acc_noise must be >= 0");
  }
};

struct SynthResult {
  std::vector<SegmentRecord> records;
  std::vector<ModelProfile> models;
  std::vector<double> latent;  // per record, the difficulty that drove it
};

/// Deterministic synthetic trace. With shared-latent loading rho_s =
/// sqrt(stat_stat_corr), pairwise stat correlation equals stat_stat_corr by
/// construction.
inline SynthResult gen_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double rho_s = std::sqrt(cfg.stat_stat_corr);
  const double stat_noise = std::sqrt(std::max(0.0, 1.0 - rho_s * rho_s));

  SynthResult res;
  res.models.reserve(cfg.model_count);
  for (int m = 0; m < cfg.model_count; ++m) {
    ModelProfile p;
    p.model_id = m;
    p.name = "m" + std::to_string(m);
    p.flops_per_frame = cfg.flops_per_frame[m];
    if (!cfg.exec_time.empty()) p.exec_time_estimate = cfg.exec_time[m];
    p.sample_cost = p.flops_per_frame * cfg.exemplar_frames;
    p.selection_cost = p.flops_per_frame * cfg.frame_count;
    res.models.push_back(std::move(p));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  res.records.reserve(static_cast<std::size_t>(cfg.video_count) *
                      cfg.segments_per_video);
  res.latent.reserve(res.records.capacity());

  char vid[16];
  for (int v = 0; v < cfg.video_count; ++v) {
    std::snprintf(vid, sizeof vid, "v%03d", v);
    double d = gauss(rng);  // stationary start, unit variance
    const double innov = std::sqrt(1.0 - cfg.ar_coeff * cfg.ar_coeff);
    for (int s = 0; s < cfg.segments_per_video; ++s) {
      if (s > 0) d = cfg.ar_coeff * d + innov * gauss(rng);
      SegmentRecord r;
      r.video_id = vid;
      r.segment_index = s;
      r.frame_count = cfg.frame_count;
      r.stats.resize(cfg.model_count);
      r.accuracies.resize(cfg.model_count);
      for (int m = 0; m < cfg.model_count; ++m) {
        const double z = rho_s * d + stat_noise * gauss(rng);
        const double loc = cfg.stat_loc.empty() ? 0.0 : cfg.stat_loc[m];
        const double scale = cfg.stat_scale.empty() ? 1.0 : cfg.stat_scale[m];
        r.stats[m] = loc + scale * z;
        r.accuracies[m] = cfg.acc_mean[m] - cfg.acc_slope[m] * cfg.rho_a * d +
                          cfg.acc_noise * gauss(rng);
      }
      res.latent.push_back(d);
      res.records.push_back(std::move(r));
    }
  }
  return res;
}

}  // namespace dmss
