#include "dfs/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace dfs {

namespace {

constexpr const char* kColumns = "k,proximity,target,gamma_consumed,probes_accepted,probes_rejected";

template <typename T>
T parse_number(std::string_view text, std::size_t lineno) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::runtime_error(fmt::format("trace csv line {}: bad number '{}'", lineno, text));
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

WorkCounters parse_work(const std::string& text) {
  WorkCounters w;
  std::istringstream in(text);
  std::string item;
  while (in >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    const auto key = item.substr(0, eq);
    const auto value = parse_number<std::uint64_t>(std::string_view(item).substr(eq + 1), 0);
    if (key == "probes") w.probes = value;
    else if (key == "phi_terms") w.phi_terms = value;
    else if (key == "residual_updates") w.residual_updates = value;
  }
  return w;
}

}  // namespace

void write_trace_csv(std::ostream& out, const IterateTrace& trace) {
  auto metadata = trace.metadata;
  metadata["work"] = trace.work.report();
  for (const auto& [key, value] : metadata) fmt::print(out, "# {}={}\n", key, value);

  const bool penalized = std::any_of(trace.records.begin(), trace.records.end(),
                                     [](const TraceRecord& r) { return r.penalized.has_value(); });
  out << kColumns << (penalized ? ",penalized\n" : "\n");
  for (const auto& r : trace.records) {
    fmt::print(out, "{},{},{},{},{},{}", r.k, r.proximity, r.target, r.gamma_consumed, r.probes_accepted,
               r.probes_rejected);
    if (penalized) fmt::print(out, ",{}", r.penalized.value_or(std::nan("")));
    out << '\n';
  }
}

IterateTrace read_trace_csv(std::istream& in) {
  IterateTrace trace;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  bool penalized = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq != std::string::npos) trace.metadata[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (!header_seen) {
      if (line == kColumns) penalized = false;
      else if (line == std::string(kColumns) + ",penalized") penalized = true;
      else throw std::runtime_error(fmt::format("trace csv line {}: unexpected header '{}'", lineno, line));
      header_seen = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != (penalized ? 7u : 6u))
      throw std::runtime_error(fmt::format("trace csv line {}: expected {} columns, got {}", lineno,
                                           penalized ? 7 : 6, cells.size()));
    TraceRecord r;
    r.k = parse_number<std::size_t>(cells[0], lineno);
    r.proximity = parse_number<double>(cells[1], lineno);
    r.target = parse_number<double>(cells[2], lineno);
    r.gamma_consumed = parse_number<double>(cells[3], lineno);
    r.probes_accepted = parse_number<std::size_t>(cells[4], lineno);
    r.probes_rejected = parse_number<std::size_t>(cells[5], lineno);
    if (penalized && cells[6] != "nan") r.penalized = parse_number<double>(cells[6], lineno);
    if (!trace.records.empty() && r.k <= trace.records.back().k)
      throw std::runtime_error(fmt::format("trace csv line {}: k must increase", lineno));
    if (trace.records.empty() && r.k != 0)
      throw std::runtime_error(fmt::format("trace csv line {}: first record must have k=0", lineno));
    trace.records.push_back(r);
  }
  if (!header_seen) throw std::runtime_error("trace csv: missing column header");
  if (const auto it = trace.metadata.find("work"); it != trace.metadata.end()) {
    trace.work = parse_work(it->second);
    trace.metadata.erase(it);
  }
  return trace;
}

IterateTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  try {
    return read_trace_csv(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

namespace {

struct Frame {
  double x0, x1, y0, y1;  // data ranges
  double left, right, top, bottom;
  bool descending;  // largest proximity at the left edge

  double px(double v) const {
    double w = (v - x0) / (x1 - x0);
    if (descending) w = 1.0 - w;
    return left + w * (right - left);
  }
  double py(double v) const { return bottom - (v - y0) / (y1 - y0) * (bottom - top); }
};

void pad_range(double& lo, double& hi) {
  if (hi - lo <= 0.0) {
    const double d = std::max(std::abs(lo) * 0.05, 1e-9);
    lo -= d;
    hi += d;
  } else {
    const double d = 0.04 * (hi - lo);
    lo -= d;
    hi += d;
  }
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string star_path(double cx, double cy, double r) {
  std::string d;
  for (int k = 0; k < 16; ++k) {
    const double radius = (k % 2 == 0) ? r : 0.45 * r;
    const double angle = -std::numbers::pi / 2 + k * std::numbers::pi / 8;
    d += fmt::format("{}{:.2f},{:.2f}", k == 0 ? "M" : " L", cx + radius * std::cos(angle),
                     cy + radius * std::sin(angle));
  }
  return d + " Z";
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      x0 = std::min(x0, p.proximity);
      x1 = std::max(x1, p.proximity);
      y0 = std::min(y0, p.target);
      y1 = std::max(y1, p.target);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  pad_range(x0, x1);
  pad_range(y0, y1);

  const Frame f{x0, x1, y0, y1, 80.0, options.width - 20.0, 40.0, options.height - 60.0,
                !options.flip_proximity_axis};

  fmt::memory_buffer svg;
  auto out = std::back_inserter(svg);
  fmt::format_to(out,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
                 "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
                 options.width, options.height, options.width, options.height);
  fmt::format_to(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  if (!options.title.empty())
    fmt::format_to(out, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                   options.width / 2, xml_escape(options.title));

  fmt::format_to(out, "<g stroke=\"black\" stroke-width=\"1\">\n");
  fmt::format_to(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", f.left, f.bottom, f.right, f.bottom);
  fmt::format_to(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", f.left, f.bottom, f.left, f.top);
  fmt::format_to(out, "</g>\n");
  for (int t = 0; t <= 5; ++t) {
    const double xv = x0 + (x1 - x0) * t / 5.0;
    const double yv = y0 + (y1 - y0) * t / 5.0;
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", f.px(xv),
                   f.bottom + 16, xv);
    fmt::format_to(out, "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.6g}</text>\n", f.left - 6,
                   f.py(yv) + 4, yv);
  }
  fmt::format_to(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">proximity</text>\n",
                 (f.left + f.right) / 2, options.height - 20);
  fmt::format_to(out,
                 "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">target</text>\n",
                 (f.top + f.bottom) / 2, (f.top + f.bottom) / 2);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    std::string pts;
    for (const auto& p : ser.points) pts += fmt::format("{:.2f},{:.2f} ", f.px(p.proximity), f.py(p.target));
    fmt::format_to(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                   ser.color, pts);
    for (const auto& p : ser.points) {
      const double cx = f.px(p.proximity), cy = f.py(p.target);
      if (ser.marker == "star")
        fmt::format_to(out, "<path d=\"{}\" fill=\"{}\"/>\n", star_path(cx, cy, 6.0), ser.color);
      else
        fmt::format_to(out, "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"white\" stroke=\"{}\"/>\n", cx,
                       cy, ser.color);
    }
    const double ly = f.top + 8 + 18.0 * static_cast<double>(s);
    fmt::format_to(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                   f.right - 160, ly, f.right - 135, ly, ser.color);
    fmt::format_to(out, "<text x=\"{}\" y=\"{}\">{}</text>\n", f.right - 128, ly + 4, xml_escape(ser.label));
  }
  fmt::format_to(out, "</svg>\n");
  return fmt::to_string(svg);
}

}  // namespace dfs
