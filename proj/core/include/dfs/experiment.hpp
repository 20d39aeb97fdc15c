#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfs/evaluation.hpp"
#include "dfs/feasibility.hpp"
#include "dfs/tomo_sim.hpp"

namespace dfs {

/// Bad configuration text or values. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunMode { none, cw, nonascent, ep };

struct ExperimentConfig {
  // grid
  std::size_t width = 64;
  std::size_t height = 64;
  double pixel_size = 1.0;
  // fan geometry; zero radius/increment select the covering defaults
  std::size_t projections = 120;
  std::size_t rays = 95;
  double source_radius = 0.0;
  double fan_increment = 0.0;
  /// "default" for the built-in head phantom, otherwise a phantom file path.
  std::string phantom = "default";
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  // feasibility
  double lambda = 0.05;
  /// sequential | bit-reversal | explicit
  std::string ordering = "bit-reversal";
  /// Whitespace-separated candidate-row permutation, for ordering=explicit.
  std::string ordering_file;
  // superiorization
  RunMode mode = RunMode::cw;
  std::size_t perturbations = 2000;
  double step_b = 0.02;
  double step_a = 0.99999;
  double eta = 1.0;
  /// Exterior-penalty iterations; 0 means sweeps * perturbations.
  std::size_t ep_iterations = 0;
  /// all | box
  std::string domain = "all";
  double box_lo = 0.0;
  double box_hi = 1.0;
  std::size_t sweeps = 30;
  // evaluation
  std::size_t slice_lo = 1;
  /// 0 means the last record.
  std::size_t slice_hi = 0;
  bool flip_axis = true;
  std::string output = "dfs-out";

  /// Set one key from its text form; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in a stable order.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  void validate() const;

  PixelGrid grid() const;
  FanGeometry geometry() const;
  EllipsePhantom load_phantom() const;
  std::optional<NoiseModel> noise() const;
  FeasibilityConfig feasibility() const;
  DomainSpec domain_spec() const;
};

/// Names of all configuration keys, in declaration order.
const std::vector<std::string>& config_keys();

/// Flat `key = value` text, `#` starts a comment.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_string(RunMode mode);

/// Content hash of everything that determines the generated system.
std::string system_cache_key(const ExperimentConfig& config);

/// Directory used for cached systems: $DFS_CACHE_DIR, else <tmp>/dfs-cache.
std::filesystem::path default_cache_dir();

struct LoadedProblem {
  GeneratedProblem problem;
  bool from_cache = false;
  std::filesystem::path cache_file;
};

/// Generates the system, or loads it from the cache directory when present.
LoadedProblem load_or_generate(const ExperimentConfig& config,
                               const std::optional<std::filesystem::path>& cache_dir);

/// Runs the configured algorithm from the zero vector.
IterateTrace run_algorithm(const ExperimentConfig& config, const GeneratedProblem& problem);

struct RunResult {
  std::filesystem::path bundle;
  IterateTrace trace;
  bool system_from_cache = false;
};

/// Writes trace.csv, final.pgm, phantom.pgm, curve.svg and summary.txt into
/// config.output. The bundle is assembled in a sibling temporary directory and
/// renamed into place, so a failed run leaves no partial output.
RunResult run_experiment(const ExperimentConfig& config,
                         const std::optional<std::filesystem::path>& cache_dir = default_cache_dir());

/// Writes system.txt, phantom.txt and phantom.pgm into config.output.
std::filesystem::path generate_bundle(const ExperimentConfig& config,
                                      const std::optional<std::filesystem::path>& cache_dir =
                                          default_cache_dir());

struct CompareResult {
  Verdict verdict;
  std::string report;
  std::string svg;
};

/// better_targeted(A-slice, B-slice). Throws NonMonotoneError naming the trace.
CompareResult compare_traces(const IterateTrace& a, const IterateTrace& b, std::size_t lo,
                             std::size_t hi, bool flip_axis = true, const std::string& label_a = "A",
                             const std::string& label_b = "B");

/// Human-readable statistics of a system.
std::string inspect_system(const ConstraintSystem& system);

/// Writes `contents` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace dfs
