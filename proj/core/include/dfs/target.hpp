#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "dfs/sparse_system.hpp"

namespace dfs {

/// Read access to x with at most one component overridden.
class PatchedView {
 public:
  static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  explicit PatchedView(std::span<const double> x, std::size_t j = none, double value = 0.0)
      : x_(x), j_(j), value_(value) {}
  double operator[](std::size_t i) const { return i == j_ ? value_ : x_[i]; }
  std::size_t size() const { return x_.size(); }

 private:
  std::span<const double> x_;
  std::size_t j_;
  double value_;
};

/// Indices of the terms that read a given component. At most three.
struct TermSet {
  std::array<std::size_t, 3> index{};
  std::size_t count = 0;

  void push(std::size_t t) { index[count++] = t; }
  const std::size_t* begin() const { return index.data(); }
  const std::size_t* end() const { return index.data() + count; }
};

/// Per-term values and their compensated running total.
struct TargetCache {
  std::vector<double> terms;
  CompensatedSum total;

  double value() const { return total.value(); }
};

/// A target phi(x) = sum_t term_t(x) in which each component feeds at most
/// three terms, so a single-component change is re-evaluated locally.
class LocalTermTarget {
 public:
  virtual ~LocalTermTarget() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t term_count() const = 0;
  virtual TermSet terms_touching(std::size_t j) const = 0;
  virtual double term(std::size_t t, const PatchedView& x) const = 0;

  double value(std::span<const double> x) const;
};

/// Result of evaluating phi with x_j replaced, without touching the cache.
struct TermProbe {
  std::size_t component = PatchedView::none;
  double new_value = 0.0;
  TermSet terms;
  std::array<double, 3> new_terms{};
  double phi = 0.0;
};

std::pair<double, TargetCache> phi_full(const LocalTermTarget& target, std::span<const double> x);

/// phi with x_j := new_value, recomputing only the touched terms.
TermProbe phi_probe(const LocalTermTarget& target, const TargetCache& cache,
                    std::span<const double> x, std::size_t j, double new_value);

/// Writes the probe's terms into the cache. The caller updates x itself.
void phi_commit(TargetCache& cache, const TermProbe& probe);

/// Probe and commit in one step; returns the new phi.
double phi_delta(const LocalTermTarget& target, TargetCache& cache, std::span<const double> x,
                 std::size_t j, double new_value);

/// Sum over pixels j not in the last column or last row of
/// sqrt(|x_j - med{x_j, x_right(j), x_below(j)}|).
class MedianRoughnessTarget final : public LocalTermTarget {
 public:
  MedianRoughnessTarget(std::size_t width, std::size_t height);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }

  std::size_t dimension() const override { return width_ * height_; }
  /// Terms are indexed by pixel index; pixels outside Theta carry a zero term.
  std::size_t term_count() const override { return width_ * height_; }
  TermSet terms_touching(std::size_t j) const override;
  double term(std::size_t t, const PatchedView& x) const override;

  bool in_theta(std::size_t j) const {
    return j % width_ + 1 < width_ && j / width_ + 1 < height_;
  }
  std::size_t theta_size() const { return (width_ - 1) * (height_ - 1); }

 private:
  std::size_t width_;
  std::size_t height_;
};

inline double median3(double a, double b, double c) {
  const double lo = a < b ? a : b;
  const double hi = a < b ? b : a;
  return c < lo ? lo : (c > hi ? hi : c);
}

/// Gradient access for targets that have one.
class DifferentiableTarget {
 public:
  virtual ~DifferentiableTarget() = default;
  virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;
};

/// phi(x) = 0.5 * ||x||^2. Convex and differentiable; used to exercise the
/// gradient-based nonascent provider in tests.
class HalfSquaredNorm final : public LocalTermTarget, public DifferentiableTarget {
 public:
  explicit HalfSquaredNorm(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const override { return dimension_; }
  std::size_t term_count() const override { return dimension_; }
  TermSet terms_touching(std::size_t j) const override {
    TermSet s;
    s.push(j);
    return s;
  }
  double term(std::size_t t, const PatchedView& x) const override {
    const double v = x[t];
    return 0.5 * v * v;
  }
  void gradient(std::span<const double> x, std::span<double> out) const override;

 private:
  std::size_t dimension_;
};

/// The set Delta in which perturbed points must stay.
class DomainSpec {
 public:
  static DomainSpec whole_space() { return {}; }
  /// Componentwise box [lo, hi]^J.
  static DomainSpec box(double lo, double hi);
  static DomainSpec box(std::vector<double> lo, std::vector<double> hi);

  bool is_whole_space() const { return lo_.empty() && !uniform_; }
  bool contains(std::size_t j, double v) const {
    if (uniform_) return v >= ulo_ && v <= uhi_;
    if (lo_.empty()) return true;
    return v >= lo_[j] && v <= hi_[j];
  }
  /// Length of the per-component bound vectors; 0 for uniform boxes and the whole space.
  std::size_t bound_size() const { return lo_.size(); }
  double lower(std::size_t j) const;
  double upper(std::size_t j) const;

 private:
  bool uniform_ = false;
  double ulo_ = 0.0;
  double uhi_ = 0.0;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

bool in_domain(const DomainSpec& domain, std::span<const double> x);

/// Number of components of x outside the domain. Throws DimensionError when
/// per-component bounds do not match x.
std::size_t domain_violations(const DomainSpec& domain, std::span<const double> x);

}  // namespace dfs
