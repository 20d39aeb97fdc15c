// dfs: generate, run and compare superiorization experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dfs/experiment.hpp"
#include "dfs/trace_io.hpp"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> overrides;
  bool no_cache = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("-c,--config", config_file, "key = value configuration file");
    cmd.add_flag("--no-cache", no_cache, "do not read or write the system cache");
    for (const auto& key : dfs::config_keys()) {
      auto* opt = cmd.add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { overrides[key] = v; }, "override config key " + key);
      opt->type_name("VALUE");
    }
  }

  dfs::ExperimentConfig resolve() const {
    dfs::ExperimentConfig config = config_file.empty() ? dfs::ExperimentConfig{} : dfs::load_config(config_file);
    for (const auto& [key, value] : overrides) config.set(key, value);
    config.validate();
    return config;
  }

  std::optional<std::filesystem::path> cache() const {
    if (no_cache) return std::nullopt;
    return dfs::default_cache_dir();
  }
};

void print_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derivative-free superiorization experiments on simulated CT data"};
  app.require_subcommand(1);

  ConfigFlags gen_flags;
  auto* gen = app.add_subcommand("generate", "simulate the constraint system and phantom only");
  gen_flags.attach(*gen);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "run an experiment and write its artifact bundle");
  run_flags.attach(*run);

  std::string trace_a, trace_b, label_a = "A", label_b = "B", cmp_out;
  std::size_t lo = 1, hi = 0;
  bool no_flip = false;
  auto* cmp = app.add_subcommand("compare", "better-targeted verdict for two trace CSVs");
  cmp->add_option("trace_a", trace_a, "trace CSV of the candidate R")->required()->check(CLI::ExistingFile);
  cmp->add_option("trace_b", trace_b, "trace CSV of the reference S")->required()->check(CLI::ExistingFile);
  cmp->add_option("--lo", lo, "first record of the slice");
  cmp->add_option("--hi", hi, "last record of the slice (0: last common record)");
  cmp->add_option("--label-a", label_a);
  cmp->add_option("--label-b", label_b);
  cmp->add_option("-o,--svg", cmp_out, "write the overlay plot here");
  cmp->add_flag("--no-flip", no_flip, "draw proximity decreasing left to right");

  ConfigFlags ins_flags;
  std::string system_file;
  auto* ins = app.add_subcommand("inspect", "summarize a system file, or the cached system of a config");
  ins->add_option("--system", system_file, "system text file")->check(CLI::ExistingFile);
  ins_flags.attach(*ins);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  try {
    if (*gen) {
      const auto config = gen_flags.resolve();
      const auto bundle = dfs::generate_bundle(config, gen_flags.cache());
      print_file(bundle / "summary.txt");
      std::cout << "bundle=" << bundle.string() << "\n";
    } else if (*run) {
      const auto config = run_flags.resolve();
      const auto result = dfs::run_experiment(config, run_flags.cache());
      print_file(result.bundle / "summary.txt");
      std::cout << "bundle=" << result.bundle.string() << "\n";
    } else if (*cmp) {
      const auto a = dfs::read_trace_csv(std::filesystem::path(trace_a));
      const auto b = dfs::read_trace_csv(std::filesystem::path(trace_b));
      const std::size_t last = std::min(a.size(), b.size()) - 1;
      const auto result = dfs::compare_traces(a, b, lo, hi ? hi : last, !no_flip, label_a, label_b);
      std::cout << result.report;
      if (!cmp_out.empty()) dfs::write_file_atomic(cmp_out, result.svg);
    } else if (*ins) {
      if (!system_file.empty()) {
        std::ifstream in(system_file);
        std::cout << dfs::inspect_system(dfs::read_system(in));
      } else {
        const auto config = ins_flags.resolve();
        const auto cache = ins_flags.cache();
        if (!cache) throw dfs::ConfigError("inspect needs --system or the cache");
        const auto file = *cache / (dfs::system_cache_key(config) + ".sys");
        std::ifstream in(file);
        if (!in) throw std::runtime_error(fmt::format("no cached system at {}; run `dfs generate` first", file.string()));
        std::cout << "cache_file=" << file.string() << "\n" << dfs::inspect_system(dfs::read_system(in));
      }
    }
  } catch (const dfs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dfs::NonMonotoneError& e) {
    std::cerr << "error: " << e.what() << " (index " << e.index() << ")\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
