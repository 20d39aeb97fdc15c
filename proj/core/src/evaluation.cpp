#include "dfs/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace dfs {

std::string WorkCounters::report() const {
  return fmt::format("probes={} phi_terms={} residual_updates={}", probes, phi_terms, residual_updates);
}

double IterateTrace::total_gamma() const {
  double s = 0.0;
  for (const auto& r : records) s += r.gamma_consumed;
  return s;
}

std::optional<TraceRecord> epsilon_output(const IterateTrace& trace, double epsilon) {
  for (const auto& r : trace.records)
    if (r.proximity <= epsilon) return r;
  return std::nullopt;
}

namespace {

void check_slice(const IterateTrace& trace, std::size_t lo, std::size_t hi) {
  if (!(lo < hi) || hi >= trace.size())
    throw std::out_of_range(
        fmt::format("slice [{}, {}] invalid for a trace of {} records", lo, hi, trace.size()));
}

}  // namespace

bool is_monotone_proximity(const IterateTrace& trace, std::size_t lo, std::size_t hi) {
  check_slice(trace, lo, hi);
  for (std::size_t k = lo + 1; k <= hi; ++k)
    if (!(trace[k - 1].proximity > trace[k].proximity)) return false;
  return true;
}

ProximityTargetCurve::ProximityTargetCurve(std::vector<CurveVertex> vertices)
    : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) throw std::invalid_argument("ProximityTargetCurve: need at least two vertices");
  for (std::size_t k = 1; k < vertices_.size(); ++k)
    if (!(vertices_[k - 1].proximity > vertices_[k].proximity))
      throw NonMonotoneError(k, fmt::format("ProximityTargetCurve: proximity not strictly "
                                            "decreasing at vertex {}",
                                            k));
}

ProximityTargetCurve build_curve(const IterateTrace& trace, std::size_t lo, std::size_t hi) {
  check_slice(trace, lo, hi);
  for (std::size_t k = lo + 1; k <= hi; ++k)
    if (!(trace[k - 1].proximity > trace[k].proximity))
      throw NonMonotoneError(
          k, fmt::format("slice [{}, {}] is not of monotone proximity: Pr(x^{}) = {} >= Pr(x^{}) = {}",
                         lo, hi, k, trace[k].proximity, k - 1, trace[k - 1].proximity));
  std::vector<CurveVertex> v;
  v.reserve(hi - lo + 1);
  for (std::size_t k = lo; k <= hi; ++k) v.push_back({trace[k].proximity, trace[k].target});
  return ProximityTargetCurve(std::move(v));
}

double curve_value(const ProximityTargetCurve& curve, double h) {
  const auto& v = curve.vertices();
  if (!(h <= curve.max_proximity() && h >= curve.min_proximity()))
    throw std::out_of_range(fmt::format("curve_value: h={} outside [{}, {}]", h,
                                        curve.min_proximity(), curve.max_proximity()));
  // First vertex with proximity <= h; vertices are sorted by decreasing proximity.
  const auto it = std::partition_point(v.begin(), v.end(),
                                       [h](const CurveVertex& c) { return c.proximity > h; });
  if (it->proximity == h) return it->target;
  const CurveVertex& right = *it;
  const CurveVertex& left = *(it - 1);
  const double w = (left.proximity - h) / (left.proximity - right.proximity);
  return left.target + w * (right.target - left.target);
}

std::string Verdict::report() const {
  return fmt::format("t={} u={} verdict={} witness={}", t, u, better ? "better" : "not-better",
                     witness ? fmt::format("{}", *witness) : std::string(reason.empty() ? "none" : reason));
}

Verdict better_targeted(const ProximityTargetCurve& p, const ProximityTargetCurve& q,
                        std::size_t samples) {
  Verdict verdict;
  verdict.t = std::max(p.min_proximity(), q.min_proximity());
  verdict.u = std::min(p.max_proximity(), q.max_proximity());
  if (verdict.t > verdict.u) {
    verdict.reason = "no-overlap";
    return verdict;
  }

  double scale = 0.0;
  for (const auto* c : {&p, &q})
    for (const auto& v : c->vertices()) scale = std::max(scale, std::abs(v.target));
  const double tol = 1e-12 * (scale > 0.0 ? scale : 1.0);

  // The difference of two piecewise-linear functions is piecewise linear with
  // breaks only at vertices, so checking the breakpoints in [t, u] is exact.
  std::vector<double> checks{verdict.t, verdict.u};
  for (const auto* c : {&p, &q})
    for (const auto& v : c->vertices())
      if (v.proximity >= verdict.t && v.proximity <= verdict.u) checks.push_back(v.proximity);
  for (std::size_t s = 0; s < samples; ++s) {
    const double w = samples > 1 ? static_cast<double>(s) / static_cast<double>(samples - 1) : 0.5;
    checks.push_back(std::clamp(verdict.t + w * (verdict.u - verdict.t), verdict.t, verdict.u));
  }
  std::sort(checks.begin(), checks.end(), std::greater<>());
  checks.erase(std::unique(checks.begin(), checks.end()), checks.end());

  for (const double h : checks) {
    if (curve_value(p, h) > curve_value(q, h) + tol) {
      verdict.witness = h;
      verdict.reason = "curve-above";
      return verdict;
    }
  }
  verdict.better = true;
  return verdict;
}

Verdict better_targeted(const IterateTrace& r, std::size_t r_lo, std::size_t r_hi,
                        const IterateTrace& s, std::size_t s_lo, std::size_t s_hi,
                        std::size_t samples) {
  return better_targeted(build_curve(r, r_lo, r_hi), build_curve(s, s_lo, s_hi), samples);
}

}  // namespace dfs
