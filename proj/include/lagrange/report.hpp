#pragma once

// Run outputs: trace and metrics CSV, sampled impulse responses, SVG panels.

#include <filesystem>
#include <string>
#include <vector>

#include "lagrange/experiments.hpp"
#include "lagrange/rootspace.hpp"

namespace lagrange {

/// Shortest-exact formatting used by every CSV writer (17 significant digits).
std::string format_double(double v);

/// `t,weight,value,divergent`, one row per weight per recorded step; the weight
/// column holds the parameter name.
void write_trace_csv(std::ostream& out, const TraceLog& log);
void write_trace_csv(const std::filesystem::path& path, const TraceLog& log);

struct TraceTable {
  std::vector<std::string> weight_names;  ///< in order of first appearance
  std::vector<TraceRow> rows;
};
TraceTable read_trace_csv(const std::filesystem::path& path);

/// `phase,iteration,t,set,mse,accuracy,count`; accuracy is empty for regression.
void write_metrics_csv(const std::filesystem::path& path, const TraceLog& log);

/// `iteration,<weight>...` with the per-iteration means.
void write_iteration_means_csv(const std::filesystem::path& path, const TraceLog& log);

struct Sample {
  double t = 0.0;
  double value = 0.0;
};

/// g on [0, t_end], `count` equally spaced samples.
std::vector<Sample> sample_impulse_response(const RootSet& roots, double t_end, std::size_t count);
/// 40 / min |Re λ|; the span after which g is negligible for stable roots.
double saturation_time(const RootSet& roots);

void write_samples_csv(const std::filesystem::path& path, const std::vector<Sample>& samples,
                       const std::string& value_column);

struct Series {
  std::string label;
  std::vector<Sample> samples;
};

/// Stacked 900x300 panels, one series per panel.
std::string render_svg(const std::vector<Series>& panels);
void write_svg(const std::filesystem::path& path, const std::vector<Series>& panels);

/// Weight traces for the named weights (all when `names` is empty, capped at `max_panels`).
std::vector<Series> weight_series(const TraceLog& log, const std::vector<std::string>& names,
                                  std::size_t max_panels = 8);

}  // namespace lagrange
