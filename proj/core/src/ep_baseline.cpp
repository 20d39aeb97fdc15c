#include "dfs/ep_baseline.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace dfs {

PenalizedObjective::PenalizedObjective(const LocalTermTarget& target, const ConstraintSystem& system,
                                       double eta)
    : target_(&target), system_(&system), eta_(eta) {
  if (target.dimension() != system.dimension())
    throw DimensionError("PenalizedObjective: target and system dimensions differ");
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("PenalizedObjective: eta must be finite and nonnegative");
}

double PenalizedObjective::psi_full(std::span<const double> x) {
  auto [phi, cache] = phi_full(*target_, x);
  target_cache_ = std::move(cache);
  residuals_ = residuals(*system_, x);
  proximity_sum_.reset();
  for (const double r : residuals_) proximity_sum_.add(r * r);
  primed_ = true;
  last_valid_ = false;
  return psi();
}

double PenalizedObjective::probe(std::span<const double> x, std::size_t j, double new_value) {
  if (!primed_) throw std::logic_error("PenalizedObjective: psi_full must run before probe");
  if (j >= system_->dimension())
    throw std::out_of_range(fmt::format("PenalizedObjective::probe: index {} >= {}", j, system_->dimension()));

  ++work_.probes;
  last_term_probe_ = phi_probe(*target_, target_cache_, x, j, new_value);
  work_.phi_terms += last_term_probe_.terms.count;

  const double delta = new_value - x[j];
  const auto column = system_->column(j);
  last_new_residuals_.resize(column.size());
  last_proximity_sum_ = proximity_sum_;
  for (std::size_t k = 0; k < column.size(); ++k) {
    const double old_r = residuals_[column[k].row];
    const double new_r = old_r + column[k].value * delta;
    last_new_residuals_[k] = new_r;
    last_proximity_sum_.add(new_r * new_r - old_r * old_r);
  }
  work_.residual_updates += column.size();
  last_valid_ = true;
  return last_term_probe_.phi + eta_ * last_proximity_sum_.value();
}

void PenalizedObjective::commit(std::span<const double> x, std::size_t j, double new_value) {
  if (!last_valid_ || last_term_probe_.component != j || last_term_probe_.new_value != new_value)
    probe(x, j, new_value);
  phi_commit(target_cache_, last_term_probe_);
  const auto column = system_->column(j);
  for (std::size_t k = 0; k < column.size(); ++k) residuals_[column[k].row] = last_new_residuals_[k];
  proximity_sum_ = last_proximity_sum_;
  last_valid_ = false;
}

double PenalizedObjective::psi_delta(std::span<const double> x, std::size_t j, double new_value) {
  probe(x, j, new_value);
  commit(x, j, new_value);
  return psi();
}

IterateTrace ep_coordinate_search(PenalizedObjective& objective, StepSchedule& schedule,
                                  DirectionSequence& directions, std::size_t iterations,
                                  const ImageVector& x_bar, const EpOptions& options) {
  if (iterations == 0) throw std::invalid_argument("ep_coordinate_search: need at least one iteration");
  const std::size_t dim = objective.system().dimension();
  if (x_bar.size() != dim || directions.dimension() != dim)
    throw DimensionError("ep_coordinate_search: dimension mismatch");
  if (!in_domain(options.domain, x_bar.values()))
    throw std::invalid_argument("ep_coordinate_search: initial point outside the domain");

  ImageVector x = x_bar;
  double psi = objective.psi_full(x.values());
  const WorkCounters work_before = objective.work();
  std::uint64_t next_refresh = work_before.probes + options.refresh_interval;

  IterateTrace trace;
  trace.records.reserve(iterations + 1);
  auto record = [&](std::size_t k, double gamma, std::size_t accepted, std::size_t rejected) {
    TraceRecord r;
    r.k = k;
    r.proximity = objective.proximity_value();
    r.target = objective.phi();
    r.penalized = psi;
    r.gamma_consumed = gamma;
    r.probes_accepted = accepted;
    r.probes_rejected = rejected;
    if (options.trace.snapshots) r.snapshot.emplace(x.values().begin(), x.values().end());
    trace.records.push_back(std::move(r));
  };
  record(0, 0.0, 0, 0);

  for (std::size_t k = 0; k < iterations; ++k) {
    const double gamma = schedule.next();
    std::size_t probes = 0;
    bool moved = false;
    for (std::size_t l = 0; l < 2 * dim; ++l) {
      const CoordinateDirection c = directions.next();
      ++probes;
      const std::size_t j = c.component;
      const double candidate = x[j] + gamma * static_cast<double>(c.sign);
      if (!options.domain.contains(j, candidate)) continue;
      const double psi_z = objective.probe(x.values(), j, candidate);
      if (psi_z < psi) {
        objective.commit(x.values(), j, candidate);
        x[j] = candidate;
        psi = objective.psi();
        moved = true;
        break;
      }
    }
    if (objective.work().probes >= next_refresh) {
      psi = objective.psi_full(x.values());
      next_refresh = objective.work().probes + options.refresh_interval;
    }
    record(k + 1, gamma, moved ? 1 : 0, probes - (moved ? 1 : 0));
  }

  attach_final_snapshot(trace, x.values(), options.trace);
  const WorkCounters& after = objective.work();
  trace.work = {after.probes - work_before.probes, after.phi_terms - work_before.phi_terms,
                after.residual_updates - work_before.residual_updates};
  trace.metadata["eta"] = fmt::format("{}", objective.eta());
  trace.metadata["work"] = trace.work.report();
  return trace;
}

}  // namespace dfs
