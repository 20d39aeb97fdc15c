#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfs {

/// Exact counts of the work spent evaluating probes.
struct WorkCounters {
  std::uint64_t probes = 0;
  std::uint64_t phi_terms = 0;
  std::uint64_t residual_updates = 0;

  /// `probes=.. phi_terms=.. residual_updates=..`
  std::string report() const;
};

/// One perturbation phase of the component-wise superiorizer (n -> n+1 in sweep k).
struct PhaseRecord {
  std::size_t k = 0;
  std::size_t n = 0;
  double gamma = 0.0;
  double phi_before = 0.0;
  double phi_after = 0.0;
  std::size_t probes = 0;
  bool accepted = false;
};

struct TraceRecord {
  std::size_t k = 0;
  double proximity = 0.0;
  double target = 0.0;
  /// Sum of step sizes consumed by the perturbations that produced this iterate.
  double gamma_consumed = 0.0;
  std::size_t probes_accepted = 0;
  std::size_t probes_rejected = 0;
  /// Penalized objective, exterior-penalty runs only.
  std::optional<double> penalized;
  std::optional<std::vector<double>> snapshot;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct IterateTrace {
  std::vector<TraceRecord> records;
  /// Free-form key/value metadata; written to the CSV header block.
  std::map<std::string, std::string> metadata;
  WorkCounters work;
  std::vector<PhaseRecord> phases;

  std::size_t size() const { return records.size(); }
  const TraceRecord& operator[](std::size_t k) const { return records[k]; }
  double total_gamma() const;
};

/// The first record whose proximity is <= epsilon, if any.
std::optional<TraceRecord> epsilon_output(const IterateTrace& trace, double epsilon);

/// True iff proximity strictly decreases at every step of records [lo, hi].
bool is_monotone_proximity(const IterateTrace& trace, std::size_t lo, std::size_t hi);

class NonMonotoneError : public std::runtime_error {
 public:
  NonMonotoneError(std::size_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}
  /// First record index k whose proximity is not below that of k-1.
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

struct CurveVertex {
  double proximity;
  double target;
};

/// Piecewise-linear curve through (proximity, target) vertices, proximity
/// strictly decreasing along the vertex list.
class ProximityTargetCurve {
 public:
  explicit ProximityTargetCurve(std::vector<CurveVertex> vertices);

  const std::vector<CurveVertex>& vertices() const { return vertices_; }
  double max_proximity() const { return vertices_.front().proximity; }
  double min_proximity() const { return vertices_.back().proximity; }

 private:
  std::vector<CurveVertex> vertices_;
};

/// Throws NonMonotoneError if the slice is not of monotone proximity.
ProximityTargetCurve build_curve(const IterateTrace& trace, std::size_t lo, std::size_t hi);

/// Target value of the curve at proximity h; throws std::out_of_range outside
/// [min_proximity, max_proximity].
double curve_value(const ProximityTargetCurve& curve, double h);

struct Verdict {
  bool better = false;
  double t = 0.0;
  double u = 0.0;
  std::optional<double> witness;
  std::string reason;

  /// `t=.. u=.. verdict=better|not-better witness=..`
  std::string report() const;
};

/// Whether curve p lies at or below curve q over [t, u]. Both curves are
/// compared at every vertex abscissa in [t, u] plus `samples` uniform points.
Verdict better_targeted(const ProximityTargetCurve& p, const ProximityTargetCurve& q,
                        std::size_t samples = 100);

Verdict better_targeted(const IterateTrace& r, std::size_t r_lo, std::size_t r_hi,
                        const IterateTrace& s, std::size_t s_lo, std::size_t s_hi,
                        std::size_t samples = 100);

}  // namespace dfs
