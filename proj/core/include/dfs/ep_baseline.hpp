#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dfs/evaluation.hpp"
#include "dfs/sparse_system.hpp"
#include "dfs/superiorizer.hpp"
#include "dfs/target.hpp"

namespace dfs {

/// psi(x) = phi(x) + eta * Pr_T(x) with cached target terms and residuals so a
/// single-component change costs at most three target terms plus one residual
/// update per row crossing that component.
class PenalizedObjective {
 public:
  PenalizedObjective(const LocalTermTarget& target, const ConstraintSystem& system, double eta);

  double eta() const { return eta_; }
  const LocalTermTarget& target() const { return *target_; }
  const ConstraintSystem& system() const { return *system_; }

  /// Recomputes every cache from x and returns psi(x).
  double psi_full(std::span<const double> x);

  /// psi with x_j := new_value. Caches are left untouched until commit().
  double probe(std::span<const double> x, std::size_t j, double new_value);
  /// Applies the most recent probe to the caches. The caller updates x.
  void commit(std::span<const double> x, std::size_t j, double new_value);

  /// probe + commit; the incremental counterpart of psi_full.
  double psi_delta(std::span<const double> x, std::size_t j, double new_value);

  double psi() const { return phi() + eta_ * proximity_value(); }
  double phi() const { return target_cache_.value(); }
  double proximity_value() const { return proximity_sum_.value(); }
  std::span<const double> cached_residuals() const { return residuals_; }

  const WorkCounters& work() const { return work_; }
  void reset_work() { work_ = {}; }

 private:
  const LocalTermTarget* target_;
  const ConstraintSystem* system_;
  double eta_;

  TargetCache target_cache_;
  std::vector<double> residuals_;
  CompensatedSum proximity_sum_;
  bool primed_ = false;

  // Scratch from the last probe, reused by commit().
  TermProbe last_term_probe_;
  std::vector<double> last_new_residuals_;
  CompensatedSum last_proximity_sum_;
  bool last_valid_ = false;

  WorkCounters work_;
};

struct EpOptions {
  DomainSpec domain;
  TraceOptions trace;
  /// Recompute every cache from scratch after this many probes.
  std::size_t refresh_interval = 10'000;
};

/// Coordinate search on psi: each iteration takes the next step size and
/// probes up to 2J coordinate directions, accepting the first strict decrease.
/// Records (k, Pr_T, phi, psi) per iteration; work counters land in the trace.
IterateTrace ep_coordinate_search(PenalizedObjective& objective, StepSchedule& schedule,
                                  DirectionSequence& directions, std::size_t iterations,
                                  const ImageVector& x_bar, const EpOptions& options = {});

}  // namespace dfs
