#include "dfs/target.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dfs {

double LocalTermTarget::value(std::span<const double> x) const {
  if (x.size() != dimension())
    throw DimensionError(fmt::format("target: vector length {} != {}", x.size(), dimension()));
  const PatchedView view(x);
  CompensatedSum sum;
  for (std::size_t t = 0; t < term_count(); ++t) sum.add(term(t, view));
  return sum.value();
}

std::pair<double, TargetCache> phi_full(const LocalTermTarget& target, std::span<const double> x) {
  if (x.size() != target.dimension())
    throw DimensionError(fmt::format("phi_full: vector length {} != {}", x.size(), target.dimension()));
  TargetCache cache;
  cache.terms.resize(target.term_count());
  const PatchedView view(x);
  for (std::size_t t = 0; t < cache.terms.size(); ++t) {
    cache.terms[t] = target.term(t, view);
    cache.total.add(cache.terms[t]);
  }
  return {cache.value(), std::move(cache)};
}

TermProbe phi_probe(const LocalTermTarget& target, const TargetCache& cache,
                    std::span<const double> x, std::size_t j, double new_value) {
  if (j >= target.dimension())
    throw std::out_of_range(fmt::format("phi_probe: index {} >= {}", j, target.dimension()));
  TermProbe probe;
  probe.component = j;
  probe.new_value = new_value;
  probe.terms = target.terms_touching(j);
  const PatchedView view(x, j, new_value);
  CompensatedSum total = cache.total;
  for (std::size_t k = 0; k < probe.terms.count; ++k) {
    const std::size_t t = probe.terms.index[k];
    probe.new_terms[k] = target.term(t, view);
    total.add(-cache.terms[t]);
    total.add(probe.new_terms[k]);
  }
  probe.phi = total.value();
  return probe;
}

void phi_commit(TargetCache& cache, const TermProbe& probe) {
  for (std::size_t k = 0; k < probe.terms.count; ++k) {
    const std::size_t t = probe.terms.index[k];
    cache.total.add(-cache.terms[t]);
    cache.total.add(probe.new_terms[k]);
    cache.terms[t] = probe.new_terms[k];
  }
}

double phi_delta(const LocalTermTarget& target, TargetCache& cache, std::span<const double> x,
                 std::size_t j, double new_value) {
  const TermProbe probe = phi_probe(target, cache, x, j, new_value);
  phi_commit(cache, probe);
  return cache.value();
}

MedianRoughnessTarget::MedianRoughnessTarget(std::size_t width, std::size_t height)
    : width_(width), height_(height) {
  if (width == 0 || height == 0)
    throw DimensionError("MedianRoughnessTarget: grid must be nonempty");
}

TermSet MedianRoughnessTarget::terms_touching(std::size_t j) const {
  TermSet s;
  if (in_theta(j)) s.push(j);
  // j is the right neighbour of j-1 ...
  if (j % width_ != 0 && in_theta(j - 1)) s.push(j - 1);
  // ... and the lower neighbour of j-W.
  if (j >= width_ && in_theta(j - width_)) s.push(j - width_);
  return s;
}

double MedianRoughnessTarget::term(std::size_t t, const PatchedView& x) const {
  if (!in_theta(t)) return 0.0;
  const double v = x[t];
  return std::sqrt(std::abs(v - median3(v, x[t + 1], x[t + width_])));
}

void HalfSquaredNorm::gradient(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dimension_ || out.size() != dimension_)
    throw DimensionError("HalfSquaredNorm::gradient: length mismatch");
  std::copy(x.begin(), x.end(), out.begin());
}

DomainSpec DomainSpec::box(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("DomainSpec::box: lo must not exceed hi");
  DomainSpec d;
  d.uniform_ = true;
  d.ulo_ = lo;
  d.uhi_ = hi;
  return d;
}

DomainSpec DomainSpec::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size() || lo.empty())
    throw std::invalid_argument("DomainSpec::box: bound vectors must be nonempty and equal length");
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!(lo[j] <= hi[j]))
      throw std::invalid_argument(fmt::format("DomainSpec::box: lo > hi at component {}", j));
  DomainSpec d;
  d.lo_ = std::move(lo);
  d.hi_ = std::move(hi);
  return d;
}

double DomainSpec::lower(std::size_t j) const {
  if (uniform_) return ulo_;
  return lo_.empty() ? -std::numeric_limits<double>::infinity() : lo_[j];
}

double DomainSpec::upper(std::size_t j) const {
  if (uniform_) return uhi_;
  return hi_.empty() ? std::numeric_limits<double>::infinity() : hi_[j];
}

std::size_t domain_violations(const DomainSpec& domain, std::span<const double> x) {
  if (domain.is_whole_space()) return 0;
  if (domain.bound_size() != 0 && domain.bound_size() != x.size())
    throw DimensionError(fmt::format("DomainSpec: {} bounds for a vector of length {}", domain.bound_size(), x.size()));
  std::size_t n = 0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!domain.contains(j, x[j])) ++n;
  return n;
}

bool in_domain(const DomainSpec& domain, std::span<const double> x) {
  return domain_violations(domain, x) == 0;
}

}  // namespace dfs
