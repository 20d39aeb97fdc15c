#include "dfs/superiorizer.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include <fmt/format.h>

namespace dfs {

StepSchedule::StepSchedule(double b, double a) : b_(b), a_(a) {
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("StepSchedule: b must be positive");
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("StepSchedule: a must lie in (0, 1)");
}

double StepSchedule::next() {
  ++cursor_;
  const double gamma = b_ * std::pow(a_, static_cast<double>(cursor_));
  consumed_.add(gamma);
  return gamma;
}

DirectionSequence::DirectionSequence(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw std::invalid_argument("DirectionSequence: dimension must be positive");
}

CoordinateDirection DirectionSequence::next() {
  ++cursor_;
  const auto pos = static_cast<std::size_t>(cursor_) % (2 * dimension_);
  return pos < dimension_ ? CoordinateDirection{pos, +1} : CoordinateDirection{pos - dimension_, -1};
}

void SuperiorizationConfig::validate() const {
  if (sweeps == 0) throw std::invalid_argument("superiorization: sweeps must be at least 1");
}

namespace {

void check_dimensions(const ConstraintSystem& system, const LocalTermTarget& target,
                      const ImageVector& x_bar) {
  if (x_bar.size() != system.dimension() || target.dimension() != system.dimension())
    throw DimensionError(fmt::format("superiorize: J mismatch (system {}, target {}, start {})",
                                     system.dimension(), target.dimension(), x_bar.size()));
}

TraceRecord make_record(std::size_t k, const ConstraintSystem& system, std::span<const double> x,
                        double phi, const TraceOptions& options) {
  TraceRecord r;
  r.k = k;
  r.proximity = proximity(system, x);
  r.target = phi;
  if (options.snapshots) r.snapshot.emplace(x.begin(), x.end());
  return r;
}

}  // namespace

IterateTrace superiorize_cw(const ConstraintSystem& system, const SuperiorizationConfig& config,
                            const FeasibilityConfig& feasibility, const LocalTermTarget& target,
                            const ImageVector& x_bar, const SuperiorizeOptions& options) {
  config.validate();
  check_dimensions(system, target, x_bar);
  if (!in_domain(config.domain, x_bar.values()))
    throw std::invalid_argument("superiorize_cw: initial point outside the domain");

  const std::size_t dim = system.dimension();
  const KaczmarzSweep sweep(system, feasibility);
  StepSchedule schedule = config.schedule;
  DirectionSequence directions(dim);
  const DomainSpec& domain = config.domain;
  const bool bounded = !domain.is_whole_space();

  ImageVector x = x_bar;
  auto [phi, cache] = phi_full(target, x.values());
  std::size_t violations = 0;

  IterateTrace trace;
  trace.records.reserve(config.sweeps + 1);
  trace.records.push_back(make_record(0, system, x.values(), phi, options.trace));

  for (std::size_t k = 0; k < config.sweeps; ++k) {
    CompensatedSum sweep_gamma;
    std::size_t accepted = 0;
    std::size_t rejected = 0;

    for (std::size_t n = 0; n < config.perturbations; ++n) {
      const double gamma = schedule.next();
      sweep_gamma.add(gamma);
      const double phi_before = cache.value();
      std::size_t probes = 0;
      bool moved = false;

      for (std::size_t l = 0; l < 2 * dim; ++l) {
        const CoordinateDirection c = directions.next();
        ++probes;
        ++trace.work.probes;
        const std::size_t j = c.component;
        const double candidate = x[j] + gamma * static_cast<double>(c.sign);

        std::size_t violations_after = violations;
        if (bounded) {
          violations_after = violations - (domain.contains(j, x[j]) ? 0 : 1) +
                             (domain.contains(j, candidate) ? 0 : 1);
          if (violations_after != 0) continue;
        }
        const TermProbe probe = phi_probe(target, cache, x.values(), j, candidate);
        trace.work.phi_terms += probe.terms.count;
        if (probe.phi < phi_before) {
          if (options.on_accept)
            options.on_accept({k, n, c, gamma, x.values(), phi_before, probe.phi});
          phi_commit(cache, probe);
          x[j] = candidate;
          violations = violations_after;
          moved = true;
          break;
        }
      }

      accepted += moved ? 1 : 0;
      rejected += probes - (moved ? 1 : 0);
      if (options.record_phases)
        trace.phases.push_back({k, n, gamma, phi_before, cache.value(), probes, moved});
    }

    sweep.apply(x.values());
    if (bounded) violations = domain_violations(domain, x.values());
    std::tie(phi, cache) = phi_full(target, x.values());

    TraceRecord r = make_record(k + 1, system, x.values(), phi, options.trace);
    r.gamma_consumed = sweep_gamma.value();
    r.probes_accepted = accepted;
    r.probes_rejected = rejected;
    trace.records.push_back(std::move(r));
  }

  attach_final_snapshot(trace, x.values(), options.trace);
  trace.metadata["step_cursor"] = std::to_string(schedule.cursor());
  trace.metadata["direction_cursor"] = std::to_string(directions.cursor());
  trace.metadata["gamma_total"] = fmt::format("{}", schedule.consumed());
  return trace;
}

NonascentProvider NonascentProvider::zero() { return {}; }

NonascentProvider NonascentProvider::normalized_negative_gradient(const DifferentiableTarget& target) {
  NonascentProvider p;
  p.gradient_source_ = &target;
  return p;
}

void NonascentProvider::direction(std::span<const double> x, std::span<double> out) const {
  if (!gradient_source_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  gradient_source_->gradient(x, out);
  double norm_sq = 0.0;
  for (const double g : out) norm_sq += g * g;
  if (norm_sq == 0.0) return;
  const double inv = -1.0 / std::sqrt(norm_sq);
  for (double& g : out) g *= inv;
}

IterateTrace superiorize_nonascent(const ConstraintSystem& system, const SuperiorizationConfig& config,
                                   const FeasibilityConfig& feasibility, const LocalTermTarget& target,
                                   const NonascentProvider& provider, const ImageVector& x_bar,
                                   const NonascentOptions& options) {
  config.validate();
  check_dimensions(system, target, x_bar);
  if (!in_domain(config.domain, x_bar.values()))
    throw std::invalid_argument("superiorize_nonascent: initial point outside the domain");

  const std::size_t dim = system.dimension();
  const KaczmarzSweep sweep(system, feasibility);
  StepSchedule schedule = config.schedule;

  ImageVector x = x_bar;
  std::vector<double> v(dim);
  std::vector<double> z(dim);

  IterateTrace trace;
  trace.records.reserve(config.sweeps + 1);
  double phi_outer = target.value(x.values());
  trace.records.push_back(make_record(0, system, x.values(), phi_outer, options.trace));

  for (std::size_t k = 0; k < config.sweeps; ++k) {
    CompensatedSum sweep_gamma;
    std::size_t accepted = 0;
    std::size_t rejected = 0;

    for (std::size_t n = 0; n < config.perturbations; ++n) {
      const double phi_before = target.value(x.values());
      provider.direction(x.values(), v);
      std::size_t probes = 0;
      double gamma = 0.0;
      double phi_z = 0.0;
      for (;;) {
        if (probes == options.probe_budget)
          throw ProbeBudgetExhausted(fmt::format(
              "superiorize_nonascent: {} probes without acceptance in sweep {}, phase {}; "
              "the provider is not returning nonascending vectors",
              probes, k, n));
        gamma = schedule.next();
        sweep_gamma.add(gamma);
        ++probes;
        ++trace.work.probes;
        for (std::size_t j = 0; j < dim; ++j) z[j] = x[j] + gamma * v[j];
        if (!in_domain(config.domain, z)) continue;
        phi_z = target.value(z);
        trace.work.phi_terms += target.term_count();
        if (phi_z <= phi_outer) break;
      }
      std::copy(z.begin(), z.end(), x.values().begin());
      ++accepted;
      rejected += probes - 1;
      if (options.record_phases) trace.phases.push_back({k, n, gamma, phi_before, phi_z, probes, true});
    }

    sweep.apply(x.values());
    phi_outer = target.value(x.values());
    TraceRecord r = make_record(k + 1, system, x.values(), phi_outer, options.trace);
    r.gamma_consumed = sweep_gamma.value();
    r.probes_accepted = accepted;
    r.probes_rejected = rejected;
    trace.records.push_back(std::move(r));
  }

  attach_final_snapshot(trace, x.values(), options.trace);
  trace.metadata["step_cursor"] = std::to_string(schedule.cursor());
  trace.metadata["gamma_total"] = fmt::format("{}", schedule.consumed());
  return trace;
}

}  // namespace dfs
