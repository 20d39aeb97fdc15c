#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dfs/evaluation.hpp"
#include "dfs/sparse_system.hpp"
#include "dfs/target.hpp"

namespace dfs {

enum class OrderingScheme { sequential, projection_bit_reversal, explicit_permutation };

/// Order in which the rows of a system are visited by one sweep.
///
/// The permutation is over candidate rows (projection-major, ray-minor), the
/// numbering build_system records as each row's source index. Candidates that
/// were dropped as zero rows are skipped when the ordering is resolved.
class RowOrdering {
 public:
  /// Identity over whatever rows a system has.
  RowOrdering() = default;

  static RowOrdering explicit_permutation(std::vector<std::uint32_t> permutation);

  OrderingScheme scheme() const { return scheme_; }
  std::span<const std::uint32_t> permutation() const { return permutation_; }

  /// System row indices in visiting order; a bijection on [0, I).
  std::vector<std::uint32_t> resolve(const ConstraintSystem& system) const;

 private:
  friend RowOrdering make_ordering(OrderingScheme, std::size_t, std::size_t);

  OrderingScheme scheme_ = OrderingScheme::sequential;
  std::vector<std::uint32_t> permutation_;
};

/// sequential: identity. projection_bit_reversal: projections visited in
/// bit-reversed index order (P padded to a power of two, out-of-range indices
/// skipped), rays within a projection in natural order.
RowOrdering make_ordering(OrderingScheme scheme, std::size_t projections,
                          std::size_t rays_per_projection);

/// Reverses the low `bits` bits of v.
std::uint32_t reverse_bits(std::uint32_t v, unsigned bits);

struct FeasibilityConfig {
  double relaxation = 1.0;
  RowOrdering ordering;

  /// Relaxation inside (0, 2), the range in which the sweep is known to converge.
  bool relaxation_in_convergent_range() const { return relaxation > 0.0 && relaxation < 2.0; }
};

/// One relaxed Kaczmarz sweep, with the visiting order and row norms resolved
/// once for a given system.
class KaczmarzSweep {
 public:
  KaczmarzSweep(const ConstraintSystem& system, const FeasibilityConfig& config);

  /// y <- y - relaxation * (<d^i, y> - h_i) / ||d^i||^2 * d^i for each row in order.
  void apply(std::span<double> x) const;

  const ConstraintSystem& system() const { return *system_; }

 private:
  const ConstraintSystem* system_;
  double relaxation_;
  std::vector<std::uint32_t> order_;
  std::vector<double> scale_;  // relaxation / ||d^i||^2 by system row
};

ImageVector apply_PT(const ConstraintSystem& system, const FeasibilityConfig& config,
                     const ImageVector& x);

struct TraceOptions {
  /// Store the iterate in every record.
  bool snapshots = false;
  /// Store the iterate in the last record only.
  bool snapshot_final = false;
};

/// Attaches x to the last record when only the final snapshot was requested.
void attach_final_snapshot(IterateTrace& trace, std::span<const double> x, const TraceOptions& options);

/// K sweeps from x_bar; records x^0 .. x^K with proximity and target values.
IterateTrace art_run(const ConstraintSystem& system, const FeasibilityConfig& config,
                     const LocalTermTarget& target, const ImageVector& x_bar, std::size_t sweeps,
                     const TraceOptions& options = {});

}  // namespace dfs
