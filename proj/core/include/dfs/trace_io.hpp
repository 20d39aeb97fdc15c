#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dfs/evaluation.hpp"

namespace dfs {

/// Trace CSV: a block of `# key=value` metadata lines, then the header
/// `k,proximity,target,gamma_consumed,probes_accepted,probes_rejected`
/// (plus `,penalized` for exterior-penalty traces) and one row per record.
/// Work counters are stored under the `work` metadata key.
void write_trace_csv(std::ostream& out, const IterateTrace& trace);
IterateTrace read_trace_csv(std::istream& in);
IterateTrace read_trace_csv(const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  std::vector<CurveVertex> points;
  /// "circle" or "star"
  std::string marker = "circle";
  std::string color = "#1f77b4";
};

struct PlotOptions {
  std::string title;
  /// true: proximity increases left to right, so the starting iterate sits at
  /// the right edge. false: proximity decreases left to right.
  bool flip_proximity_axis = true;
  int width = 720;
  int height = 480;
};

/// Linear axes, one polyline plus vertex markers per series, and a legend.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace dfs
