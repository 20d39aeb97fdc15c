// Acceptance checks. One PASS/FAIL line per criterion; nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dfs/ep_baseline.hpp"
#include "dfs/evaluation.hpp"
#include "dfs/experiment.hpp"
#include "dfs/feasibility.hpp"
#include "dfs/superiorizer.hpp"
#include "dfs/target.hpp"
#include "dfs/tomo_sim.hpp"
#include "helpers.hpp"

using namespace dfs;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void report(int n, const std::function<Check()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = fmt::format("exception: {}", e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!c.ok) ++failures;
  fmt::print("{} criterion {}: {} [{:.1f}s]\n", c.ok ? "PASS" : "FAIL", n, c.detail, secs);
  std::fflush(stdout);
}

// The desk instance: 64x64 grid, 120 projections x 95 rays, 4-ellipse phantom.
ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.width = c.height = 64;
  c.projections = 120;
  c.rays = 95;
  c.noise_sigma = 0.01;
  c.noise_seed = 1;
  c.lambda = 0.05;
  c.ordering = "bit-reversal";
  c.perturbations = 2000;
  c.step_b = 0.02;
  c.step_a = 0.99999;
  c.sweeps = 30;
  return c;
}

struct Desk {
  ExperimentConfig config = desk_config();
  GeneratedProblem problem;
  IterateTrace none;      // K = 30, unperturbed
  IterateTrace cw;        // K = 30, perturbed
  IterateTrace cw_long;   // K = 90, perturbed, phases recorded

  Desk() {
    config.validate();
    problem = load_or_generate(config, default_cache_dir()).problem;
    config.mode = RunMode::none;
    none = run_algorithm(config, problem);
    config.mode = RunMode::cw;
    cw = run_algorithm(config, problem);

    SuperiorizationConfig sup;
    sup.perturbations = config.perturbations;
    sup.sweeps = 3 * config.sweeps;
    sup.schedule = StepSchedule(config.step_b, config.step_a);
    SuperiorizeOptions opts;
    opts.record_phases = true;
    cw_long = superiorize_cw(problem.system, sup, config.feasibility(),
                             MedianRoughnessTarget(config.width, config.height),
                             ImageVector(config.width, config.height), opts);
  }
};

// Structural invariants of one component-wise run; empty string if all hold.
std::string cw_invariants(const IterateTrace& t, std::size_t N, std::size_t K, std::size_t J) {
  if (t.phases.size() != N * K) return fmt::format("{} phases, expected {}", t.phases.size(), N * K);
  for (std::size_t p = 0; p < t.phases.size(); ++p) {
    const auto& ph = t.phases[p];
    if (ph.k != p / N || ph.n != p % N) return fmt::format("phase {} labelled ({}, {})", p, ph.k, ph.n);
    if (ph.probes > 2 * J) return fmt::format("phase {} used {} probes", p, ph.probes);
    if (ph.phi_after > ph.phi_before) return fmt::format("phi rose in phase {}", p);
    if (ph.accepted != (ph.phi_after < ph.phi_before)) return fmt::format("phase {} accept flag vs phi", p);
    if (ph.n > 0 && ph.phi_before != t.phases[p - 1].phi_after)
      return fmt::format("phi not carried into phase {}", p);
  }
  for (std::size_t k = 1; k < t.size(); ++k)
    if (t[k].probes_accepted + t[k].probes_rejected == 0 && N > 0)
      return fmt::format("sweep {} recorded no probes", k);
  return {};
}

}  // namespace

int main() {
  fmt::print("building desk instance and runs (64x64, 120x95, N=2000, K=30 and K=90)...\n");
  std::fflush(stdout);
  const auto t0 = std::chrono::steady_clock::now();
  const Desk desk;
  fmt::print("desk runs ready [{:.1f}s]\n",
             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

  report(1, [&] {
    Check c;
    const bool mono_cw = is_monotone_proximity(desk.cw, 1, 30);
    const bool mono_none = is_monotone_proximity(desk.none, 1, 30);
    c.require(mono_cw, "perturbed run not of monotone proximity on [1,30]");
    c.require(mono_none, "unperturbed run not of monotone proximity on [1,30]");
    if (!c.ok) return c;
    const auto v = better_targeted(desk.cw, 1, 30, desk.none, 1, 30);
    c.require(v.better, "verdict " + v.report());
    c.detail = fmt::format("{}; Pr(cw,30)={:.6g} phi(cw,30)={:.6g} Pr(none,30)={:.6g} phi(none,30)={:.6g}",
                           v.report(), desk.cw[30].proximity, desk.cw[30].target, desk.none[30].proximity,
                           desk.none[30].target);
    if (!v.better) c.detail = "verdict " + v.report();
    return c;
  });

  report(2, [] {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    const MedianRoughnessTarget t(32, 32);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, 1023);
    std::vector<double> x(1024);
    for (auto& v : x) v = u(rng);
    auto [phi, cache] = phi_full(t, x);
    double worst = 0.0;
    for (int step = 0; step < 10000; ++step) {
      const std::size_t j = pick(rng);
      const double v = u(rng);
      phi = phi_delta(t, cache, x, j, v);
      x[j] = v;
      worst = std::max(worst, dfs::testing::rel_err(phi, phi_full(t, x).first));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.require(worst <= 1e-9, fmt::format("worst relative error {:.3g}", worst));
    c.require(secs < 5.0, fmt::format("took {:.2f}s", secs));
    if (c.ok) c.detail = fmt::format("worst relative error {:.3g} over 10^4 updates", worst);
    return c;
  });

  report(3, [] {
    Check c;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    FeasibilityConfig exact;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<SparseEntry> e;
      for (std::uint32_t j = 0; j < 30; ++j)
        if (g(rng) > 0.5) e.push_back({j, g(rng)});
      if (e.empty()) e.push_back({0, 1.0});
      const double h = 10.0 * g(rng);
      const auto s = build_system({SparseRow(e)}, {h}, 30);
      std::vector<double> x(30);
      for (auto& v : x) v = 5.0 * g(rng);
      const auto y = apply_PT(s, exact, ImageVector::flat(x));
      double scale = std::abs(h);
      for (const auto& en : e) scale += std::abs(en.value * y[en.column]);
      worst = std::max(worst, std::abs(s.row(0).dot(y.values()) - h) / scale);
    }
    c.require(worst <= 1e-12, fmt::format("single-row residual {:.3g} relative", worst));

    const auto sys = dfs::testing::random_consistent_system(40, 20, 2024);
    HalfSquaredNorm target(20);
    const auto trace = art_run(sys, exact, target, ImageVector::flat(std::vector<double>(20, 0.0)), 10000);
    std::size_t reached = 0;
    for (std::size_t k = 0; k < trace.size() && !reached; ++k)
      if (trace[k].proximity < 1e-8) reached = k;
    c.require(reached > 0, "40x20 system did not reach proximity < 1e-8 in 10000 sweeps");
    if (c.ok)
      c.detail = fmt::format("single-row worst {:.3g}; 40x20 proximity < 1e-8 after {} sweeps", worst, reached);
    return c;
  });

  report(4, [&] {
    Check c;
    const std::size_t J = desk.problem.system.dimension();
    const auto msg = cw_invariants(desk.cw_long, desk.config.perturbations, 90, J);
    c.require(msg.empty(), "desk K=90: " + msg);

    // The K=30 run is a prefix of the K=90 run.
    for (std::size_t k = 0; k <= 30; ++k)
      c.require(desk.cw[k].proximity == desk.cw_long[k].proximity && desk.cw[k].target == desk.cw_long[k].target,
                fmt::format("K=30 and K=90 runs differ at k={}", k));

    // A small instance, several N.
    const PixelGrid grid{12, 10, 1.0};
    const auto small = generate(grid, FanGeometry::covering(grid, 16, 15), default_head_phantom(grid));
    const MedianRoughnessTarget target(12, 10);
    FeasibilityConfig f;
    f.relaxation = 0.3;
    for (const std::size_t N : {1u, 5u, 40u, 300u}) {
      SuperiorizationConfig sup;
      sup.perturbations = N;
      sup.sweeps = 6;
      sup.schedule = StepSchedule(0.5, 0.99);
      SuperiorizeOptions opts;
      opts.record_phases = true;
      ImageVector x0(12, 10);
      for (std::size_t j = 0; j < 120; j += 3) x0[j] = 0.1 * static_cast<double>(j % 7);
      const auto t = superiorize_cw(small.system, sup, f, target, x0, opts);
      const auto m = cw_invariants(t, N, 6, 120);
      c.require(m.empty(), fmt::format("small N={}: {}", N, m));
    }

    // N = 0 is ART, bit for bit, on the desk instance.
    SuperiorizationConfig zero;
    zero.perturbations = 0;
    zero.sweeps = 30;
    zero.schedule = StepSchedule(desk.config.step_b, desk.config.step_a);
    SuperiorizeOptions snap;
    snap.trace.snapshots = true;
    TraceOptions art_snap;
    art_snap.snapshots = true;
    const MedianRoughnessTarget desk_target(64, 64);
    const auto feas = desk.config.feasibility();
    const auto sup0 = superiorize_cw(desk.problem.system, zero, feas, desk_target, ImageVector(64, 64), snap);
    const auto art = art_run(desk.problem.system, feas, desk_target, ImageVector(64, 64), 30, art_snap);
    bool same = sup0.size() == art.size();
    for (std::size_t k = 0; same && k < art.size(); ++k)
      same = *sup0[k].snapshot == *art[k].snapshot && sup0[k].proximity == art[k].proximity;
    c.require(same, "N=0 run differs from ART");
    if (c.ok)
      c.detail = fmt::format("desk K=90 ({} phases) and 4 small runs hold every invariant; N=0 == ART on 31 iterates",
                             desk.cw_long.phases.size());
    return c;
  });

  report(5, [&] {
    Check c;
    const double eps = desk.none.records.back().proximity;
    const double target_prox = 1.05 * eps;
    std::size_t reached = 0;
    for (std::size_t k = 0; k < desk.cw_long.size() && !reached; ++k)
      if (desk.cw_long[k].proximity <= target_prox) reached = k;
    c.require(reached > 0, fmt::format("perturbed run never reached 1.05*eps = {:.6g} in 90 sweeps (final {:.6g})",
                                       target_prox, desk.cw_long.records.back().proximity));
    if (c.ok)
      c.detail = fmt::format("eps = Pr(none, 30) = {:.6g}; perturbed run reaches <= 1.05 eps at sweep {} (budget 90)",
                             eps, reached);
    return c;
  });

  report(6, [&] {
    Check c;
    auto config = desk.config;
    const MedianRoughnessTarget target(64, 64);
    PenalizedObjective objective(target, desk.problem.system, config.eta);
    StepSchedule schedule(config.step_b, config.step_a);
    DirectionSequence directions(desk.problem.system.dimension());
    const auto ep = ep_coordinate_search(objective, schedule, directions, config.perturbations, ImageVector(64, 64));
    const auto& cw = desk.cw.work;
    const double ep_per_probe = static_cast<double>(ep.work.residual_updates) / static_cast<double>(ep.work.probes);
    const double dfs_per_probe = static_cast<double>(cw.phi_terms) / static_cast<double>(cw.probes);
    c.require(dfs_per_probe <= 3.0, fmt::format("DFS phi terms per probe {:.3f} > 3", dfs_per_probe));
    const double ratio = ep_per_probe / dfs_per_probe;
    c.require(ratio > 20.0, fmt::format("ratio {:.2f}", ratio));
    if (c.ok)
      c.detail = fmt::format("EP residual updates/probe {:.2f}, DFS phi terms/probe {:.3f}, ratio {:.2f}",
                             ep_per_probe, dfs_per_probe, ratio);
    return c;
  });

  report(7, [] {
    Check c;
    auto trace_of = [](std::vector<double> p, std::vector<double> t = {}) {
      IterateTrace tr;
      for (std::size_t k = 0; k < p.size(); ++k) {
        TraceRecord r;
        r.k = k;
        r.proximity = p[k];
        r.target = t.empty() ? 0.0 : t[k];
        tr.records.push_back(r);
      }
      return tr;
    };
    const auto t = trace_of({10, 5, 2});
    c.require(epsilon_output(t, 10)->k == 0, "epsilon_output eps=10");
    c.require(epsilon_output(t, 6)->k == 1, "epsilon_output eps=6");
    c.require(!epsilon_output(t, 1).has_value(), "epsilon_output eps=1");
    c.require(is_monotone_proximity(t, 0, 2), "monotone [10,5,2]");
    c.require(!is_monotone_proximity(trace_of({10, 5, 5}), 0, 2), "monotone [10,5,5]");
    const auto t4 = trace_of({10, 5, 6, 2});
    c.require(!is_monotone_proximity(t4, 0, 3) && is_monotone_proximity(t4, 2, 3), "monotone [10,5,6,2]");

    const ProximityTargetCurve seg({{10, 5}, {2, 1}});
    c.require(curve_value(seg, 10) == 5 && curve_value(seg, 6) == 3, "curve_value examples");
    bool threw = false;
    try {
      curve_value(seg, 11);
    } catch (const std::out_of_range&) {
      threw = true;
    }
    c.require(threw, "curve_value(11) did not throw");

    const ProximityTargetCurve r({{10, 5}, {5, 3}, {2, 2}});
    const ProximityTargetCurve s({{12, 6}, {6, 5}, {3, 4}});
    const auto v = better_targeted(r, s);
    c.require(v.t == 3 && v.u == 10 && v.better, "hand example: " + v.report());

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> step(1e-3, 5.0), tgt(-10.0, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial % 40);
      std::vector<double> p(n), q(n);
      double cur = 1000.0;
      for (std::size_t k = 0; k < n; ++k) {
        p[k] = cur;
        q[k] = tgt(rng);
        cur -= step(rng);
      }
      const auto rt = trace_of(p, q);
      c.require(better_targeted(rt, 0, n - 1, rt, 0, n - 1).better, fmt::format("R=R trial {}", trial));
    }
    if (c.ok) c.detail = "all hand examples exact; R better-targeted than R for 100 random traces; " + v.report();
    return c;
  });

  report(8, [&] {
    Check c;
    const StepSchedule full_steps(0.02, 0.999999);
    c.require(std::abs(full_steps.series_sum() - 20000.0) < 1e-6, fmt::format("b/(1-a) = {}", full_steps.series_sum()));

    auto check_run = [&](const IterateTrace& t, double b, double a, const std::string& name) {
      const double bound = b / (1.0 - a) + 1e-9;
      c.require(t.total_gamma() <= bound, fmt::format("{}: sum gamma {} > {}", name, t.total_gamma(), bound));
      return t.total_gamma();
    };
    const double desk_sum = check_run(desk.cw_long, 0.02, 0.99999, "desk cw K=90");

    // Full-scale step parameters on a small instance, long enough to consume a visible share.
    const PixelGrid grid{12, 10, 1.0};
    const auto small = generate(grid, FanGeometry::covering(grid, 16, 15), default_head_phantom(grid));
    SuperiorizationConfig sup;
    sup.perturbations = 20000;
    sup.sweeps = 5;
    sup.schedule = StepSchedule(0.02, 0.999999);
    FeasibilityConfig f;
    const auto full_run = superiorize_cw(small.system, sup, f, MedianRoughnessTarget(12, 10), ImageVector(12, 10));
    const double full_sum = check_run(full_run, 0.02, 0.999999, "small cw, full-scale steps");

    NonascentOptions nopts;
    SuperiorizationConfig nsup = sup;
    nsup.perturbations = 200;
    nsup.schedule = StepSchedule(0.02, 0.999999);
    const HalfSquaredNorm convex(120);
    const auto nonascent =
        superiorize_nonascent(small.system, nsup, f, convex, NonascentProvider::normalized_negative_gradient(convex),
                              ImageVector(12, 10, 1.0), nopts);
    check_run(nonascent, 0.02, 0.999999, "nonascent");
    if (c.ok)
      c.detail = fmt::format("b/(1-a) = {:.6g}; desk K=90 sum {:.6g} <= 2000; full-scale-step run sum {:.6g} <= 20000",
                             full_steps.series_sum(), desk_sum, full_sum);
    return c;
  });

  report(9, [] {
    Check c;
    const std::size_t J = 40;
    const auto s = dfs::testing::random_consistent_system(25, J, 9);
    const HalfSquaredNorm target(J);
    FeasibilityConfig f;
    f.relaxation = 0.5;
    std::size_t accepted = 0, failed = 0;
    SuperiorizeOptions opts;
    opts.on_accept = [&](const AcceptedProbe& p) {
      if (accepted >= 100) return;
      ++accepted;
      // Normalized direction: sign * e_j; displacement norm gamma.
      const double phi_y = target.value(p.point);
      std::vector<double> y(p.point.begin(), p.point.end());
      for (int i = 1; i <= 20; ++i) {
        y[p.direction.component] = p.point[p.direction.component] + p.direction.sign * p.gamma * i / 20.0;
        if (target.value(y) > phi_y) {
          ++failed;
          break;
        }
      }
    };
    ImageVector x0 = ImageVector::flat(std::vector<double>(J, 0.0));
    for (std::size_t j = 0; j < J; ++j) x0[j] = 3.0 * std::cos(static_cast<double>(j));
    SuperiorizationConfig sup;
    sup.perturbations = 50;
    sup.sweeps = 10;
    sup.schedule = StepSchedule(0.05, 0.999);
    superiorize_cw(s, sup, f, target, x0, opts);
    c.require(accepted >= 100, fmt::format("only {} accepted probes", accepted));
    c.require(failed == 0, fmt::format("{} of {} directions failed the segment check", failed, accepted));
    if (c.ok) c.detail = fmt::format("{} accepted probes, all pass the 20-point segment check", accepted);
    return c;
  });

  fmt::print("{} of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
