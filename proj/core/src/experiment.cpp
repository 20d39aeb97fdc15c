#include "dfs/experiment.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dfs/ep_baseline.hpp"
#include "dfs/superiorizer.hpp"
#include "dfs/target.hpp"
#include "dfs/trace_io.hpp"

namespace dfs {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, text));
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(fmt::format("config key '{}': expected a boolean, got '{}'", key, text));
}

RunMode parse_mode(const std::string& text) {
  if (text == "none") return RunMode::none;
  if (text == "cw") return RunMode::cw;
  if (text == "nonascent") return RunMode::nonascent;
  if (text == "ep") return RunMode::ep;
  throw ConfigError(fmt::format("config key 'mode': expected none|cw|nonascent|ep, got '{}'", text));
}

struct KeyBinding {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
KeyBinding key_binding(std::string name, T ExperimentConfig::*member) {
  KeyBinding b;
  b.name = name;
  b.set = [member, name](ExperimentConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, std::string>)
      c.*member = v;
    else if constexpr (std::is_same_v<T, bool>)
      c.*member = parse_bool(name, v);
    else
      c.*member = parse_value<T>(name, v);
  };
  b.get = [member](const ExperimentConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, bool>)
      return c.*member ? "true" : "false";
    else
      return fmt::format("{}", c.*member);
  };
  return b;
}

const std::vector<KeyBinding>& bindings() {
  static const std::vector<KeyBinding> table = [] {
    using C = ExperimentConfig;
    std::vector<KeyBinding> t;
    t.push_back(key_binding("width", &C::width));
    t.push_back(key_binding("height", &C::height));
    t.push_back(key_binding("pixel_size", &C::pixel_size));
    t.push_back(key_binding("projections", &C::projections));
    t.push_back(key_binding("rays", &C::rays));
    t.push_back(key_binding("source_radius", &C::source_radius));
    t.push_back(key_binding("fan_increment", &C::fan_increment));
    t.push_back(key_binding("phantom", &C::phantom));
    t.push_back(key_binding("noise_sigma", &C::noise_sigma));
    t.push_back(key_binding("noise_seed", &C::noise_seed));
    t.push_back(key_binding("lambda", &C::lambda));
    t.push_back(key_binding("ordering", &C::ordering));
    t.push_back(key_binding("ordering_file", &C::ordering_file));
    t.push_back({"mode", [](C& c, const std::string& v) { c.mode = parse_mode(v); },
                 [](const C& c) { return to_string(c.mode); }});
    t.push_back(key_binding("perturbations", &C::perturbations));
    t.push_back(key_binding("step_b", &C::step_b));
    t.push_back(key_binding("step_a", &C::step_a));
    t.push_back(key_binding("eta", &C::eta));
    t.push_back(key_binding("ep_iterations", &C::ep_iterations));
    t.push_back(key_binding("domain", &C::domain));
    t.push_back(key_binding("box_lo", &C::box_lo));
    t.push_back(key_binding("box_hi", &C::box_hi));
    t.push_back(key_binding("sweeps", &C::sweeps));
    t.push_back(key_binding("slice_lo", &C::slice_lo));
    t.push_back(key_binding("slice_hi", &C::slice_hi));
    t.push_back(key_binding("flip_axis", &C::flip_axis));
    t.push_back(key_binding("output", &C::output));
    return t;
  }();
  return table;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::none: return "none";
    case RunMode::cw: return "cw";
    case RunMode::nonascent: return "nonascent";
    case RunMode::ep: return "ep";
  }
  return "unknown";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& b : bindings()) k.push_back(b.name);
    return k;
  }();
  return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& b : bindings())
    if (b.name == key) {
      b.set(*this, value);
      return;
    }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& b : bindings()) kv.emplace_back(b.name, b.get(*this));
  return kv;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (width == 0 || height == 0) fail("width and height must be positive");
  if (!(pixel_size > 0.0)) fail("pixel_size must be positive");
  if (projections == 0 || rays == 0) fail("projections and rays must be positive");
  if (source_radius < 0.0 || fan_increment < 0.0) fail("source_radius and fan_increment must be >= 0");
  if (source_radius > 0.0 && source_radius <= grid().half_diagonal())
    fail("source_radius must place the source outside the grid");
  if (noise_sigma < 0.0) fail("noise_sigma must be >= 0");
  if (!std::isfinite(lambda)) fail("lambda must be finite");
  if (ordering != "sequential" && ordering != "bit-reversal" && ordering != "explicit")
    fail(fmt::format("ordering must be sequential|bit-reversal|explicit, got '{}'", ordering));
  if (ordering == "explicit" && ordering_file.empty()) fail("ordering=explicit needs ordering_file");
  if (!(step_b > 0.0)) fail("step_b must be positive");
  if (!(step_a > 0.0 && step_a < 1.0)) fail("step_a must lie in (0, 1)");
  if (!(eta >= 0.0)) fail("eta must be >= 0");
  if (domain != "all" && domain != "box") fail(fmt::format("domain must be all|box, got '{}'", domain));
  if (domain == "box" && !(box_lo <= box_hi)) fail("box_lo must not exceed box_hi");
  if (sweeps == 0) fail("sweeps must be at least 1");
  if (phantom != "default" && !std::filesystem::exists(phantom))
    fail(fmt::format("phantom file '{}' does not exist", phantom));
  if (ordering == "explicit" && !std::filesystem::exists(ordering_file))
    fail(fmt::format("ordering file '{}' does not exist", ordering_file));
  if (output.empty()) fail("output must be set");
}

PixelGrid ExperimentConfig::grid() const { return {width, height, pixel_size}; }

FanGeometry ExperimentConfig::geometry() const {
  FanGeometry g = FanGeometry::covering(grid(), projections, rays);
  if (source_radius > 0.0) {
    g.source_radius = source_radius;
    const double half_fan = std::asin(grid().half_diagonal() / source_radius);
    g.fan_increment = rays > 1 ? 2.0 * half_fan / static_cast<double>(rays - 1) : 0.0;
  }
  if (fan_increment > 0.0) g.fan_increment = fan_increment;
  return g;
}

EllipsePhantom ExperimentConfig::load_phantom() const {
  if (phantom == "default") return default_head_phantom(grid());
  std::ifstream in(phantom);
  if (!in) throw ConfigError(fmt::format("cannot open phantom file '{}'", phantom));
  try {
    return read_phantom(in);
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("{}: {}", phantom, e.what()));
  }
}

std::optional<NoiseModel> ExperimentConfig::noise() const {
  if (noise_sigma == 0.0) return std::nullopt;
  return NoiseModel{noise_seed, noise_sigma};
}

FeasibilityConfig ExperimentConfig::feasibility() const {
  FeasibilityConfig f;
  f.relaxation = lambda;
  if (ordering == "sequential") {
    f.ordering = make_ordering(OrderingScheme::sequential, projections, rays);
  } else if (ordering == "bit-reversal") {
    f.ordering = make_ordering(OrderingScheme::projection_bit_reversal, projections, rays);
  } else {
    std::ifstream in(ordering_file);
    if (!in) throw ConfigError(fmt::format("cannot open ordering file '{}'", ordering_file));
    std::vector<std::uint32_t> perm;
    std::uint32_t v = 0;
    while (in >> v) perm.push_back(v);
    if (!in.eof()) throw ConfigError(fmt::format("ordering file '{}': non-integer entry", ordering_file));
    try {
      f.ordering = RowOrdering::explicit_permutation(std::move(perm));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("ordering file '{}': {}", ordering_file, e.what()));
    }
  }
  return f;
}

DomainSpec ExperimentConfig::domain_spec() const {
  return domain == "box" ? DomainSpec::box(box_lo, box_hi) : DomainSpec::whole_space();
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", lineno));
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      config.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}", lineno, e.what()));
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  return parse_config(in);
}

std::string system_cache_key(const ExperimentConfig& config) {
  const FanGeometry g = config.geometry();
  std::ostringstream canon;
  fmt::print(canon, "dfs-system-v2\n{} {} {}\n{} {} {} {}\n", config.width, config.height, config.pixel_size,
             g.projections, g.rays_per_projection, g.source_radius, g.fan_increment);
  write_phantom(canon, config.load_phantom());
  if (const auto noise = config.noise()) fmt::print(canon, "noise {} {}\n", noise->relative_sigma, noise->seed);

  // FNV-1a, 64 bit.
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const unsigned char c : canon.str()) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", hash);
}

std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("DFS_CACHE_DIR"); env && *env) return env;
  return std::filesystem::temp_directory_path() / "dfs-cache";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = path.string() + fmt::format(".tmp-{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp));
    out << contents;
    if (!out) throw std::runtime_error(fmt::format("write failed: {}", tmp));
  }
  std::filesystem::rename(tmp, path);
}

LoadedProblem load_or_generate(const ExperimentConfig& config,
                               const std::optional<std::filesystem::path>& cache_dir) {
  const PixelGrid grid = config.grid();
  const EllipsePhantom phantom = config.load_phantom();
  LoadedProblem loaded;
  if (cache_dir) {
    loaded.cache_file = *cache_dir / (system_cache_key(config) + ".sys");
    if (std::ifstream in(loaded.cache_file); in) {
      try {
        ConstraintSystem system = read_system(in);
        if (system.dimension() == grid.size()) {
          loaded.problem = {std::move(system), rasterize(grid, phantom)};
          loaded.from_cache = true;
          return loaded;
        }
      } catch (const std::exception&) {
        // Unreadable cache entry; regenerate and overwrite it below.
      }
    }
  }
  loaded.problem = generate(grid, config.geometry(), phantom, config.noise());
  if (cache_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*cache_dir, ec);
    if (!ec) {
      std::ostringstream text;
      write_system(text, loaded.problem.system);
      try {
        write_file_atomic(loaded.cache_file, text.str());
      } catch (const std::exception&) {
        // A read-only cache directory only costs regeneration next time.
      }
    }
  }
  return loaded;
}

IterateTrace run_algorithm(const ExperimentConfig& config, const GeneratedProblem& problem) {
  const ConstraintSystem& system = problem.system;
  const MedianRoughnessTarget target(config.width, config.height);
  const FeasibilityConfig feasibility = config.feasibility();
  const ImageVector x_bar(config.width, config.height, 0.0);

  SuperiorizationConfig sup;
  sup.perturbations = config.perturbations;
  sup.sweeps = config.sweeps;
  sup.schedule = StepSchedule(config.step_b, config.step_a);
  sup.domain = config.domain_spec();

  IterateTrace trace;
  switch (config.mode) {
    case RunMode::none: {
      TraceOptions opts;
      opts.snapshot_final = true;
      trace = art_run(system, feasibility, target, x_bar, config.sweeps, opts);
      break;
    }
    case RunMode::cw: {
      SuperiorizeOptions opts;
      opts.trace.snapshot_final = true;
      trace = superiorize_cw(system, sup, feasibility, target, x_bar, opts);
      break;
    }
    case RunMode::nonascent: {
      // The median target has no usable gradient, so only the zero vector applies.
      NonascentOptions opts;
      opts.trace.snapshot_final = true;
      trace = superiorize_nonascent(system, sup, feasibility, target, NonascentProvider::zero(), x_bar, opts);
      break;
    }
    case RunMode::ep: {
      PenalizedObjective objective(target, system, config.eta);
      StepSchedule schedule(config.step_b, config.step_a);
      DirectionSequence directions(system.dimension());
      EpOptions opts;
      opts.domain = config.domain_spec();
      opts.trace.snapshot_final = true;
      const std::size_t iterations =
          config.ep_iterations ? config.ep_iterations : config.sweeps * std::max<std::size_t>(config.perturbations, 1);
      trace = ep_coordinate_search(objective, schedule, directions, iterations, x_bar, opts);
      break;
    }
  }
  return trace;
}

namespace {

std::filesystem::path staging_dir_for(const std::filesystem::path& output) {
  const auto parent = output.has_parent_path() ? output.parent_path() : std::filesystem::path(".");
  return parent / fmt::format(".{}.tmp-{}", output.filename().string(), ::getpid());
}

// Moves a finished staging directory onto `output`, replacing an older bundle.
void publish(const std::filesystem::path& staging, const std::filesystem::path& output,
             const char* marker) {
  if (std::filesystem::exists(output)) {
    if (!std::filesystem::exists(output / marker)) {
      std::filesystem::remove_all(staging);
      throw std::runtime_error(
          fmt::format("refusing to replace '{}': it exists and is not a previous dfs bundle", output.string()));
    }
    std::filesystem::remove_all(output);
  }
  std::filesystem::rename(staging, output);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::string slice_summary(const IterateTrace& trace, std::size_t lo, std::size_t hi) {
  if (hi >= trace.size() || lo >= hi) return "slice_monotone=invalid-slice\n";
  for (std::size_t k = lo + 1; k <= hi; ++k)
    if (!(trace[k - 1].proximity > trace[k].proximity))
      return fmt::format("slice_monotone=false\nslice_break_at={}\n", k);
  return "slice_monotone=true\n";
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const std::optional<std::filesystem::path>& cache_dir) {
  config.validate();
  const LoadedProblem loaded = load_or_generate(config, cache_dir);
  const GeneratedProblem& problem = loaded.problem;
  IterateTrace trace = run_algorithm(config, problem);

  for (const auto& [key, value] : config.to_key_values()) trace.metadata["config." + key] = value;
  trace.metadata["system.J"] = std::to_string(problem.system.dimension());
  trace.metadata["system.I"] = std::to_string(problem.system.row_count());
  trace.metadata["system.dropped_rows"] = std::to_string(problem.system.dropped_rows());
  trace.metadata["system.cache_key"] = system_cache_key(config);

  ImageVector final_image(config.width, config.height, *trace.records.back().snapshot);
  for (auto& r : trace.records) r.snapshot.reset();

  const std::filesystem::path output(config.output);
  const auto staging = staging_dir_for(output);
  std::filesystem::remove_all(staging);
  std::filesystem::create_directories(staging);
  try {
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    write_text(staging / "trace.csv", csv.str());
    write_pgm(staging / "final.pgm", final_image);
    write_pgm(staging / "phantom.pgm", problem.phantom);

    const std::size_t hi = config.slice_hi ? config.slice_hi : trace.size() - 1;
    PlotSeries series{to_string(config.mode), {}, config.mode == RunMode::none ? "circle" : "star",
                      config.mode == RunMode::none ? "#1f77b4" : "#d62728"};
    for (std::size_t k = std::min(config.slice_lo, trace.size() - 1); k <= std::min(hi, trace.size() - 1); ++k)
      series.points.push_back({trace[k].proximity, trace[k].target});
    PlotOptions plot;
    plot.title = fmt::format("proximity-target, mode={}, k={}..{}", to_string(config.mode), config.slice_lo, hi);
    plot.flip_proximity_axis = config.flip_axis;
    write_text(staging / "curve.svg", render_svg({series}, plot));

    const MedianRoughnessTarget target(config.width, config.height);
    std::string summary;
    summary += fmt::format("mode={}\n", to_string(config.mode));
    summary += fmt::format("J={}\nI={}\ndropped_rows={}\n", problem.system.dimension(),
                           problem.system.row_count(), problem.system.dropped_rows());
    summary += fmt::format("system_from_cache={}\n", loaded.from_cache);
    summary += fmt::format("phantom_proximity={}\nphantom_target={}\n", proximity(problem.system, problem.phantom),
                           target.value(problem.phantom.values()));
    summary += fmt::format("initial_proximity={}\ninitial_target={}\n", trace[0].proximity, trace[0].target);
    summary += fmt::format("final_proximity={}\nfinal_target={}\n", trace.records.back().proximity,
                           trace.records.back().target);
    summary += fmt::format("gamma_total={}\n", trace.total_gamma());
    summary += fmt::format("slice_lo={}\nslice_hi={}\n", config.slice_lo, hi);
    summary += slice_summary(trace, config.slice_lo, hi);
    summary += trace.work.report() + "\n";
    if (config.mode == RunMode::ep) summary += fmt::format("eta={}\n", config.eta);
    write_text(staging / "summary.txt", summary);
  } catch (...) {
    std::filesystem::remove_all(staging);
    throw;
  }
  publish(staging, output, "summary.txt");
  return {output, std::move(trace), loaded.from_cache};
}

std::filesystem::path generate_bundle(const ExperimentConfig& config,
                                      const std::optional<std::filesystem::path>& cache_dir) {
  config.validate();
  const LoadedProblem loaded = load_or_generate(config, cache_dir);
  const std::filesystem::path output(config.output);
  const auto staging = staging_dir_for(output);
  std::filesystem::remove_all(staging);
  std::filesystem::create_directories(staging);
  try {
    std::ostringstream sys;
    write_system(sys, loaded.problem.system);
    write_text(staging / "system.txt", sys.str());
    std::ostringstream ph;
    write_phantom(ph, config.load_phantom());
    write_text(staging / "phantom.txt", ph.str());
    write_pgm(staging / "phantom.pgm", loaded.problem.phantom);
    write_text(staging / "summary.txt", inspect_system(loaded.problem.system) +
                                            fmt::format("cache_key={}\n", system_cache_key(config)));
  } catch (...) {
    std::filesystem::remove_all(staging);
    throw;
  }
  publish(staging, output, "summary.txt");
  return output;
}

CompareResult compare_traces(const IterateTrace& a, const IterateTrace& b, std::size_t lo, std::size_t hi,
                             bool flip_axis, const std::string& label_a, const std::string& label_b) {
  auto curve_of = [&](const IterateTrace& t, const std::string& label) {
    try {
      return build_curve(t, lo, hi);
    } catch (const NonMonotoneError& e) {
      throw NonMonotoneError(e.index(), fmt::format("{}: {}", label, e.what()));
    } catch (const std::out_of_range& e) {
      throw std::out_of_range(fmt::format("{}: {}", label, e.what()));
    }
  };
  const ProximityTargetCurve pa = curve_of(a, label_a);
  const ProximityTargetCurve pb = curve_of(b, label_b);

  CompareResult result;
  result.verdict = better_targeted(pa, pb);
  result.report = result.verdict.report() + "\n";

  PlotSeries sa{label_a, pa.vertices(), "star", "#d62728"};
  PlotSeries sb{label_b, pb.vertices(), "circle", "#1f77b4"};
  PlotOptions plot;
  plot.title = fmt::format("proximity-target curves, k={}..{}", lo, hi);
  plot.flip_proximity_axis = flip_axis;
  result.svg = render_svg({sa, sb}, plot);
  return result;
}

std::string inspect_system(const ConstraintSystem& system) {
  std::size_t min_nnz = std::numeric_limits<std::size_t>::max(), max_nnz = 0;
  double min_norm = std::numeric_limits<double>::infinity(), max_norm = 0.0;
  double min_h = std::numeric_limits<double>::infinity(), max_h = -min_h;
  for (std::size_t i = 0; i < system.row_count(); ++i) {
    min_nnz = std::min(min_nnz, system.row(i).nnz());
    max_nnz = std::max(max_nnz, system.row(i).nnz());
    min_norm = std::min(min_norm, system.row_squared_norm(i));
    max_norm = std::max(max_norm, system.row_squared_norm(i));
    min_h = std::min(min_h, system.rhs(i));
    max_h = std::max(max_h, system.rhs(i));
  }
  std::size_t max_col = 0, empty_cols = 0;
  for (std::size_t j = 0; j < system.dimension(); ++j) {
    max_col = std::max(max_col, system.column(j).size());
    if (system.column(j).empty()) ++empty_cols;
  }
  return fmt::format(
      "J={}\nI={}\nnnz={}\ncandidate_rows={}\ndropped_rows={}\nrow_nnz_min={}\nrow_nnz_max={}\n"
      "row_nnz_mean={:.3f}\ncolumn_nnz_max={}\ncolumn_nnz_mean={:.3f}\nempty_columns={}\n"
      "row_norm_sq_min={}\nrow_norm_sq_max={}\nrhs_min={}\nrhs_max={}\n",
      system.dimension(), system.row_count(), system.nnz(), system.candidate_count(), system.dropped_rows(),
      min_nnz, max_nnz, static_cast<double>(system.nnz()) / static_cast<double>(system.row_count()), max_col,
      static_cast<double>(system.nnz()) / static_cast<double>(system.dimension()), empty_cols, min_norm,
      max_norm, min_h, max_h);
}

}  // namespace dfs
