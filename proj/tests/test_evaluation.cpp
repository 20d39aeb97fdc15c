#include <doctest.h>

#include <algorithm>
#include <random>

#include "dfs/evaluation.hpp"

using namespace dfs;

namespace {

IterateTrace trace_of(const std::vector<double>& proximity, const std::vector<double>& target = {}) {
  IterateTrace t;
  for (std::size_t k = 0; k < proximity.size(); ++k) {
    TraceRecord r;
    r.k = k;
    r.proximity = proximity[k];
    r.target = target.empty() ? 0.0 : target[k];
    t.records.push_back(r);
  }
  return t;
}

ProximityTargetCurve curve(std::vector<CurveVertex> v) { return ProximityTargetCurve(std::move(v)); }

// Random strictly decreasing proximities with arbitrary targets.
IterateTrace random_monotone(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> step(1e-3, 5.0);
  std::uniform_real_distribution<double> tgt(-10.0, 100.0);
  std::vector<double> p(n), t(n);
  double cur = 1000.0 * step(rng);
  for (std::size_t k = 0; k < n; ++k) {
    p[k] = cur;
    t[k] = tgt(rng);
    cur -= step(rng);
  }
  return trace_of(p, t);
}

}  // namespace

TEST_CASE("epsilon_output examples") {
  const auto t = trace_of({10, 5, 2});
  CHECK(epsilon_output(t, 10)->k == 0);
  CHECK(epsilon_output(t, 6)->k == 1);
  CHECK(epsilon_output(t, 2)->k == 2);
  CHECK_FALSE(epsilon_output(t, 1).has_value());
}

TEST_CASE("epsilon_output returns the first epsilon-compatible record") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(20);
    for (auto& v : p) v = u(rng);
    const double eps = u(rng);
    const auto t = trace_of(p);
    const auto out = epsilon_output(t, eps);
    if (!out) {
      for (const double v : p) CHECK(v > eps);
      continue;
    }
    CHECK(out->proximity <= eps);
    for (std::size_t k = 0; k < out->k; ++k) CHECK(p[k] > eps);
  }
}

TEST_CASE("is_monotone_proximity examples") {
  CHECK(is_monotone_proximity(trace_of({10, 5, 2}), 0, 2));
  CHECK_FALSE(is_monotone_proximity(trace_of({10, 5, 5}), 0, 2));
  const auto t = trace_of({10, 5, 6, 2});
  CHECK_FALSE(is_monotone_proximity(t, 0, 3));
  CHECK(is_monotone_proximity(t, 2, 3));
  CHECK_THROWS_AS(is_monotone_proximity(t, 2, 2), std::out_of_range);
  CHECK_THROWS_AS(is_monotone_proximity(t, 1, 4), std::out_of_range);
}

TEST_CASE("build_curve") {
  const auto two = build_curve(trace_of({4, 1}, {7, 8}), 0, 1);
  REQUIRE(two.vertices().size() == 2);
  CHECK(two.max_proximity() == 4);
  CHECK(two.min_proximity() == 1);

  const auto t = trace_of({10, 5, 6, 2});
  try {
    build_curve(t, 0, 3);
    FAIL("expected NonMonotoneError");
  } catch (const NonMonotoneError& e) {
    CHECK(e.index() == 2);
  }
  CHECK(build_curve(t, 2, 3).vertices().size() == 2);
  CHECK_THROWS_AS(curve({{1, 0}, {1, 0}}), NonMonotoneError);
  CHECK_THROWS(curve({{1, 0}}));
}

TEST_CASE("curve_value examples") {
  const auto c = curve({{10, 5}, {2, 1}});
  CHECK(curve_value(c, 10) == 5);
  CHECK(curve_value(c, 6) == 3);
  CHECK(curve_value(c, 2) == 1);
  CHECK_THROWS_AS(curve_value(c, 11), std::out_of_range);
  CHECK_THROWS_AS(curve_value(c, 1.999), std::out_of_range);
}

TEST_CASE("curve_value: exact at vertices, two-point interpolation between") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = random_monotone(rng, 2 + trial % 15);
    const auto c = build_curve(t, 0, t.size() - 1);
    for (const auto& r : t.records) CHECK(curve_value(c, r.proximity) == r.target);
    std::uniform_real_distribution<double> w(0.0, 1.0);
    for (std::size_t k = 1; k < t.size(); ++k) {
      const double a = w(rng);
      const double h = t[k - 1].proximity + a * (t[k].proximity - t[k - 1].proximity);
      if (h <= t[k].proximity || h >= t[k - 1].proximity) continue;
      const double expected = t[k - 1].target + (t[k].target - t[k - 1].target) *
                                                    (h - t[k - 1].proximity) /
                                                    (t[k].proximity - t[k - 1].proximity);
      CHECK(curve_value(c, h) == doctest::Approx(expected).epsilon(1e-12).scale(100.0));
    }
  }
}

TEST_CASE("better_targeted hand example") {
  const auto r = curve({{10, 5}, {5, 3}, {2, 2}});
  const auto s = curve({{12, 6}, {6, 5}, {3, 4}});
  const auto v = better_targeted(r, s);
  CHECK(v.t == 3);
  CHECK(v.u == 10);
  CHECK(v.better);
  CHECK_FALSE(v.witness.has_value());
  CHECK(v.report() == "t=3 u=10 verdict=better witness=none");

  // Reversed, S lies above R everywhere on [3, 10].
  const auto back = better_targeted(s, r);
  CHECK_FALSE(back.better);
  REQUIRE(back.witness.has_value());
  CHECK(curve_value(s, *back.witness) > curve_value(r, *back.witness));
  CHECK(back.reason == "curve-above");
}

TEST_CASE("better_targeted over traces uses the slices") {
  const auto r = trace_of({20, 10, 5, 2}, {0, 5, 3, 2});
  const auto s = trace_of({30, 12, 6, 3}, {0, 6, 5, 4});
  const auto v = better_targeted(r, 1, 3, s, 1, 3);
  CHECK(v.better);
  CHECK(v.t == 3);
  CHECK(v.u == 10);
  CHECK_THROWS_AS(better_targeted(trace_of({1, 2, 0}), 0, 2, s, 1, 3), NonMonotoneError);
}

TEST_CASE("a crossing inside [t, u] is found between samples") {
  // Curves cross only on a tiny interval around h = 5; a breakpoint sits there.
  const auto p = curve({{10, 0}, {5.0000001, 0}, {5, 1}, {4.9999999, 0}, {0, 0}});
  const auto q = curve({{10, 0.5}, {0, 0.5}});
  const auto v = better_targeted(p, q, 3);
  CHECK_FALSE(v.better);
  REQUIRE(v.witness.has_value());
  CHECK(*v.witness == 5);
  CHECK(v.report() == "t=0 u=10 verdict=not-better witness=5");
}

TEST_CASE("disjoint proximity ranges are not-better") {
  const auto p = curve({{10, 0}, {8, 0}});
  const auto q = curve({{5, 1}, {1, 1}});
  const auto v = better_targeted(p, q);
  CHECK_FALSE(v.better);
  CHECK(v.t == 8);
  CHECK(v.u == 5);
  CHECK(v.reason == "no-overlap");
  CHECK(v.report() == "t=8 u=5 verdict=not-better witness=no-overlap");
}

TEST_CASE("R is better targeted than itself for random monotone traces") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = random_monotone(rng, 2 + trial % 40);
    CHECK(better_targeted(t, 0, t.size() - 1, t, 0, t.size() - 1).better);
  }
}

TEST_CASE("lowering a curve keeps it better; raising one vertex breaks it") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = random_monotone(rng, 10);
    auto lower = t;
    for (auto& r : lower.records) r.target -= 0.5;
    CHECK(better_targeted(lower, 0, 9, t, 0, 9).better);
    auto bump = t;
    bump.records[4].target += 1.0;
    const auto v = better_targeted(bump, 0, 9, t, 0, 9);
    CHECK_FALSE(v.better);
    REQUIRE(v.witness.has_value());
    CHECK(*v.witness > t[5].proximity);
    CHECK(*v.witness < t[3].proximity);
  }
}

TEST_CASE("total_gamma") {
  IterateTrace t = trace_of({3, 2, 1});
  t.records[1].gamma_consumed = 0.25;
  t.records[2].gamma_consumed = 0.5;
  CHECK(t.total_gamma() == 0.75);
}
