#include "dfs/feasibility.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace dfs {

std::uint32_t reverse_bits(std::uint32_t v, unsigned bits) {
  std::uint32_t r = 0;
  for (unsigned b = 0; b < bits; ++b) {
    r = (r << 1) | (v & 1u);
    v >>= 1;
  }
  return r;
}

RowOrdering make_ordering(OrderingScheme scheme, std::size_t projections,
                          std::size_t rays_per_projection) {
  if (projections == 0 || rays_per_projection == 0)
    throw std::invalid_argument("make_ordering: projections and rays per projection must be positive");
  const std::size_t total = projections * rays_per_projection;
  if (total > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("make_ordering: too many candidate rows");

  RowOrdering ordering;
  ordering.scheme_ = scheme;
  ordering.permutation_.reserve(total);
  switch (scheme) {
    case OrderingScheme::sequential:
      for (std::size_t i = 0; i < total; ++i) ordering.permutation_.push_back(static_cast<std::uint32_t>(i));
      break;
    case OrderingScheme::projection_bit_reversal: {
      const auto padded = std::bit_ceil(static_cast<std::uint32_t>(projections));
      const auto bits = static_cast<unsigned>(std::countr_zero(padded));
      for (std::uint32_t slot = 0; slot < padded; ++slot) {
        const std::uint32_t p = reverse_bits(slot, bits);
        if (p >= projections) continue;
        for (std::size_t m = 0; m < rays_per_projection; ++m)
          ordering.permutation_.push_back(static_cast<std::uint32_t>(p * rays_per_projection + m));
      }
      break;
    }
    case OrderingScheme::explicit_permutation:
      throw std::invalid_argument("make_ordering: use RowOrdering::explicit_permutation");
  }
  return ordering;
}

RowOrdering RowOrdering::explicit_permutation(std::vector<std::uint32_t> permutation) {
  std::vector<bool> seen(permutation.size(), false);
  for (const auto p : permutation) {
    if (p >= permutation.size() || seen[p])
      throw std::invalid_argument("RowOrdering: explicit ordering is not a permutation");
    seen[p] = true;
  }
  RowOrdering ordering;
  ordering.scheme_ = OrderingScheme::explicit_permutation;
  ordering.permutation_ = std::move(permutation);
  return ordering;
}

std::vector<std::uint32_t> RowOrdering::resolve(const ConstraintSystem& system) const {
  std::vector<std::uint32_t> order;
  order.reserve(system.row_count());
  if (permutation_.empty()) {
    for (std::size_t i = 0; i < system.row_count(); ++i) order.push_back(static_cast<std::uint32_t>(i));
    return order;
  }
  constexpr auto absent = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> row_of(permutation_.size(), absent);
  for (std::size_t i = 0; i < system.row_count(); ++i) {
    const std::size_t src = system.source_index(i);
    if (src >= permutation_.size())
      throw DimensionError(fmt::format("RowOrdering: system row with source index {} outside an "
                                       "ordering over {} candidates",
                                       src, permutation_.size()));
    row_of[src] = static_cast<std::uint32_t>(i);
  }
  for (const auto candidate : permutation_)
    if (row_of[candidate] != absent) order.push_back(row_of[candidate]);
  return order;
}

KaczmarzSweep::KaczmarzSweep(const ConstraintSystem& system, const FeasibilityConfig& config)
    : system_(&system), relaxation_(config.relaxation), order_(config.ordering.resolve(system)) {
  scale_.resize(system.row_count());
  for (std::size_t i = 0; i < system.row_count(); ++i)
    scale_[i] = relaxation_ / system.row_squared_norm(i);
}

void KaczmarzSweep::apply(std::span<double> x) const {
  if (x.size() != system_->dimension())
    throw DimensionError(fmt::format("P_T: vector length {} != J={}", x.size(), system_->dimension()));
  for (const auto i : order_) {
    const auto& row = system_->row(i);
    const double step = scale_[i] * (row.dot(x) - system_->rhs(i));
    for (const auto& e : row.entries()) x[e.column] -= step * e.value;
  }
}

ImageVector apply_PT(const ConstraintSystem& system, const FeasibilityConfig& config,
                     const ImageVector& x) {
  ImageVector y = x;
  KaczmarzSweep(system, config).apply(y.values());
  return y;
}

void attach_final_snapshot(IterateTrace& trace, std::span<const double> x, const TraceOptions& options) {
  if (options.snapshot_final && !options.snapshots && !trace.records.empty())
    trace.records.back().snapshot.emplace(x.begin(), x.end());
}

IterateTrace art_run(const ConstraintSystem& system, const FeasibilityConfig& config,
                     const LocalTermTarget& target, const ImageVector& x_bar, std::size_t sweeps,
                     const TraceOptions& options) {
  if (sweeps == 0) throw std::invalid_argument("art_run: need at least one sweep");
  if (x_bar.size() != system.dimension() || target.dimension() != system.dimension())
    throw DimensionError("art_run: dimension mismatch between system, target and start vector");

  const KaczmarzSweep sweep(system, config);
  ImageVector x = x_bar;
  IterateTrace trace;
  trace.records.reserve(sweeps + 1);
  auto record = [&](std::size_t k) {
    TraceRecord r;
    r.k = k;
    r.proximity = proximity(system, x.values());
    r.target = target.value(x.values());
    if (options.snapshots) r.snapshot.emplace(x.values().begin(), x.values().end());
    trace.records.push_back(std::move(r));
  };
  record(0);
  for (std::size_t k = 0; k < sweeps; ++k) {
    sweep.apply(x.values());
    record(k + 1);
  }
  attach_final_snapshot(trace, x.values(), options);
  return trace;
}

}  // namespace dfs
