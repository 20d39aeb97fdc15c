#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>

#include "dfs/evaluation.hpp"
#include "dfs/feasibility.hpp"
#include "dfs/sparse_system.hpp"
#include "dfs/target.hpp"

namespace dfs {

/// gamma_l = b * a^l for l = 0, 1, 2, ...; the cursor starts before l = 0.
class StepSchedule {
 public:
  StepSchedule(double b, double a);

  double next();
  /// Index of the last emitted step, -1 before the first call to next().
  std::int64_t cursor() const { return cursor_; }
  double b() const { return b_; }
  double a() const { return a_; }
  /// Sum of every step emitted so far.
  double consumed() const { return consumed_.value(); }
  /// b / (1 - a), the sum of the whole sequence.
  double series_sum() const { return b_ / (1.0 - a_); }

 private:
  double b_;
  double a_;
  std::int64_t cursor_ = -1;
  CompensatedSum consumed_;
};

struct CoordinateDirection {
  std::size_t component;
  int sign;  // +1 or -1

  friend bool operator==(const CoordinateDirection&, const CoordinateDirection&) = default;
};

/// Repeats (e^1, ..., e^J, -e^1, ..., -e^J) forever, so every window of 2J
/// consecutive emissions holds each signed coordinate direction once.
class DirectionSequence {
 public:
  explicit DirectionSequence(std::size_t dimension);

  CoordinateDirection next();
  std::int64_t cursor() const { return cursor_; }
  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
  std::int64_t cursor_ = -1;
};

struct SuperiorizationConfig {
  std::size_t perturbations = 0;  // N, perturbation steps per sweep
  std::size_t sweeps = 1;         // K
  StepSchedule schedule{0.02, 0.999999};
  DomainSpec domain;

  void validate() const;
};

/// An accepted probe of the component-wise superiorizer. `point` is x^{k,n}
/// before the move; the new point is point + gamma * sign * e^component.
struct AcceptedProbe {
  std::size_t k;
  std::size_t n;
  CoordinateDirection direction;
  double gamma;
  std::span<const double> point;
  double phi_before;
  double phi_after;
};

struct SuperiorizeOptions {
  TraceOptions trace;
  /// Fill IterateTrace::phases with one record per perturbation phase.
  bool record_phases = false;
  std::function<void(const AcceptedProbe&)> on_accept;
};

/// Component-wise derivative-free superiorization. Each of the N phases per
/// sweep takes the next step size and probes up to 2J coordinate directions,
/// moving to the first probe with strictly smaller target that stays in the
/// domain; each sweep ends with one Kaczmarz sweep. Probes are evaluated
/// incrementally against a TargetCache.
IterateTrace superiorize_cw(const ConstraintSystem& system, const SuperiorizationConfig& config,
                            const FeasibilityConfig& feasibility, const LocalTermTarget& target,
                            const ImageVector& x_bar, const SuperiorizeOptions& options = {});

/// Supplies nonascending vectors (norm at most 1) for the nonascent superiorizer.
class NonascentProvider {
 public:
  /// Always the zero vector.
  static NonascentProvider zero();
  /// -g/||g|| (or zero when g = 0) for a differentiable target.
  static NonascentProvider normalized_negative_gradient(const DifferentiableTarget& target);

  void direction(std::span<const double> x, std::span<double> out) const;
  bool is_zero() const { return gradient_source_ == nullptr; }

 private:
  const DifferentiableTarget* gradient_source_ = nullptr;
};

class ProbeBudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NonascentOptions {
  TraceOptions trace;
  bool record_phases = false;
  /// Step-size probes allowed per perturbation phase before giving up.
  std::size_t probe_budget = 1'000'000;
};

/// Superiorization using nonascending vectors: each phase shrinks the step
/// along v^{k,n} until the point stays in the domain with target no larger
/// than at the start of the sweep.
IterateTrace superiorize_nonascent(const ConstraintSystem& system, const SuperiorizationConfig& config,
                                   const FeasibilityConfig& feasibility, const LocalTermTarget& target,
                                   const NonascentProvider& provider, const ImageVector& x_bar,
                                   const NonascentOptions& options = {});

}  // namespace dfs
