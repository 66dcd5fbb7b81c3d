#pragma once

// Named suites of paired analytic / simulated checks. Each check carries the
// acceptance criterion it belongs to, so the same suites drive the command-line
// `validate` command and the acceptance test.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aloha/regions.hpp"
#include "aloha/simulator.hpp"
#include "aloha/steady_state.hpp"

namespace aloha::validation {

enum class Comparison { AbsWithin, RelWithin, Below, Above, Holds };

struct Check {
  int criterion = 0;
  std::string name;
  Comparison comparison = Comparison::Holds;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  // |value - target|, |value - target| / |target|, or signed margin for bounds.
  double delta = 0.0;
  bool pass = false;
};

inline Check within_abs(int criterion, std::string name, double value, double target, double tol) {
  const double d = std::abs(value - target);
  return {criterion, std::move(name), Comparison::AbsWithin, value, target, tol, d, d <= tol};
}

inline Check within_rel(int criterion, std::string name, double value, double target, double tol) {
  const double d = std::abs(value - target) / std::abs(target);
  return {criterion, std::move(name), Comparison::RelWithin, value, target, tol, d, d <= tol};
}

/// value < bound
inline Check below(int criterion, std::string name, double value, double bound) {
  return {criterion, std::move(name), Comparison::Below, value, bound, 0.0, value - bound, value < bound};
}

/// value > bound
inline Check above(int criterion, std::string name, double value, double bound) {
  return {criterion, std::move(name), Comparison::Above, value, bound, 0.0, bound - value, value > bound};
}

inline Check holds(int criterion, std::string name, bool ok, double value = 0.0) {
  return {criterion, std::move(name), Comparison::Holds, value, 0.0, 0.0, 0.0, ok};
}

inline std::string_view to_string(Comparison c) {
  switch (c) {
    case Comparison::AbsWithin: return "abs";
    case Comparison::RelWithin: return "rel";
    case Comparison::Below: return "below";
    case Comparison::Above: return "above";
    case Comparison::Holds: return "holds";
  }
  return "?";
}

struct Options {
  std::uint64_t seed = sim::kDefaultSeed;
};

struct Suite {
  std::string name;
  std::string description;
  std::function<std::vector<Check>(const Options&)> run;
};

namespace detail {

inline std::string fmt(const char* pattern, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

inline std::string fmt(const char* pattern, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

inline sim::SimConfig sim_config(long n, double rate, Cutoff cutoff, double q, std::uint64_t seed,
                                 std::uint64_t measure = sim::kDefaultMeasureSlots) {
  sim::SimConfig c;
  c.network = {n, rate, cutoff, q};
  c.seed = seed;
  c.measure_slots = measure;
  return c;
}

// Evenly spaced points on [lo + 10% of the width, hi].
inline std::vector<double> inner_grid(double lo, double hi, std::size_t points) {
  return numerics::grid(lo + 0.1 * (hi - lo), hi, points, false);
}

}  // namespace detail

inline std::vector<Check> region_numbers(const Options&) {
  constexpr long n = 50;
  constexpr double rate = 0.3;
  const Cutoff geo = Cutoff::finite(1);
  const Cutoff inf = Cutoff::unbounded();
  const PseudoRegion pseudo = pseudo_region(rate);
  return {
      within_abs(1, "S geo lower", q_lower(n, rate, geo), 0.0038, 5e-4),
      within_abs(1, "S geo upper", q_upper(n, rate), 0.0356, 5e-4),
      within_abs(1, "S* lower", q_lower(n, rate, inf), 0.3893, 5e-4),
      within_abs(1, "S* upper", q_upper_star(n, rate, inf), 0.4088, 5e-4),
      within_abs(1, "pseudo lower", pseudo.lower, 0.387, 1e-3),
      within_abs(1, "pseudo upper", pseudo.upper, 0.8316, 1e-3),
  };
}

inline std::vector<Check> fixed_points(const Options& opts) {
  sim::RandomStream rng(opts.seed, 0xF1);
  double worst_residual = 0.0;
  bool ordered = true;
  for (int i = 0; i < 200; ++i) {
    double rate = 0.0;
    while (rate <= 0.0) rate = rng.uniform() * kInvE;
    const StablePoints sp = stable_points(rate);
    for (const double p : {sp.p_L, sp.p_S}) {
      worst_residual = std::max(worst_residual, std::abs(p - std::exp(-rate / p)));
    }
    ordered = ordered && sp.p_S <= kInvE && kInvE <= sp.p_L;
  }
  const StablePoints edge = stable_points(kInvE);
  return {
      within_abs(2, "max residual of p = exp(-rate/p) over 200 rates", worst_residual, 0.0, 1e-10),
      holds(2, "p_S <= 1/e <= p_L for every rate", ordered),
      within_abs(2, "p_L at rate 1/e", edge.p_L, kInvE, 1e-8),
      within_abs(2, "p_S at rate 1/e", edge.p_S, kInvE, 1e-8),
  };
}

inline std::vector<Check> invariance(const Options& opts) {
  constexpr long n = 10;
  constexpr double rate = 0.1;
  const double p_L = stable_points(rate).p_L;
  std::vector<Check> out;
  std::uint64_t index = 0;
  for (const Cutoff k : {Cutoff::finite(1), Cutoff::unbounded()}) {
    for (const double q : {0.01, 0.05, 0.1, 0.2}) {
      const auto m = sim::run(detail::sim_config(n, rate, k, q, sim::mix_seed(opts.seed, index++)));
      const std::string tag = "K=" + k.to_string() + detail::fmt(" q=%g", q);
      out.push_back(within_abs(3, "p_hat " + tag, m.p_hat, p_L, 0.01));
      out.push_back(within_abs(3, "throughput " + tag, m.throughput_hat, rate, 0.005));
    }
  }
  return out;
}

inline std::vector<Check> offered_load_agreement(const Options& opts) {
  constexpr long n = 10;
  constexpr double rate = 0.1;
  std::vector<Check> out;
  std::uint64_t index = 0;
  for (const Cutoff k : {Cutoff::finite(1), Cutoff::finite(2), Cutoff::finite(4), Cutoff::unbounded()}) {
    const double lo = q_lower(n, rate, k);
    const double hi = k.is_unbounded() ? q_upper_star(n, rate, k) : q_upper(n, rate);
    for (const double q : detail::inner_grid(lo, hi, 5)) {
      const NetworkConfig cfg{n, rate, k, q};
      const auto m = sim::run(detail::sim_config(n, rate, k, q, sim::mix_seed(opts.seed, index++)));
      const std::string tag = "K=" + k.to_string() + detail::fmt(" q=%.6g", q);
      out.push_back(within_rel(4, "rho_hat " + tag, m.rho_hat, offered_load(cfg, stable_points(rate).p_L), 0.05));
    }
  }
  return out;
}

inline std::vector<Check> dynamics(const Options& opts) {
  constexpr double kTol = 1e-9;
  constexpr std::size_t kMaxSteps = 100000;
  std::vector<Check> out;
  sim::RandomStream rng(opts.seed, 0xD5);
  for (const double rate : {0.1, 0.3}) {
    const StablePoints sp = stable_points(rate);
    int converged = 0;
    int diverged = 0;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      // (p_S + 0.01, 1]
      const double p0 = 1.0 - rng.uniform() * (1.0 - (sp.p_S + 0.01));
      const auto r = iterate_dynamics(p0, rate, kMaxSteps, kTol);
      const double err = std::abs(r.trajectory.back() - sp.p_L);
      worst = std::max(worst, err);
      if (r.verdict == DynamicsVerdict::ConvergedToPL && err <= kTol) ++converged;
    }
    for (int i = 0; i < 50; ++i) {
      double p0 = 0.0;
      while (p0 <= 0.0) p0 = rng.uniform() * (sp.p_S - 0.01);
      const auto r = iterate_dynamics(p0, rate, kMaxSteps, kTol);
      if (r.verdict == DynamicsVerdict::DivergedBelowPS) ++diverged;
    }
    const std::string tag = detail::fmt(" rate=%g", rate);
    out.push_back(holds(5, "50/50 starts above p_S converge to p_L" + tag, converged == 50, worst));
    out.push_back(holds(5, "50/50 starts below p_S diverge" + tag, diverged == 50, diverged));
  }
  return out;
}

inline std::vector<Check> saturation(const Options& opts) {
  constexpr long n = 50;
  const Cutoff geo = Cutoff::finite(1);
  const Cutoff inf = Cutoff::unbounded();
  std::vector<Check> out;
  for (const double q : {0.05, 0.1}) {
    out.push_back(within_rel(6, detail::fmt("p_A vs exp(-nq) K=1 q=%g", q), saturated_fixed_point(n, q, geo).p_A,
                             p_A_closed_form_geo(n, q), 0.05));
  }
  for (const double q : {0.5, 0.8}) {
    out.push_back(within_abs(6, detail::fmt("p_A vs closed form K=inf q=%g", q),
                             saturated_fixed_point(n, q, inf).p_A, p_A_closed_form_exp(n, q), 0.01));
  }
  out.push_back(within_abs(6, "p_A K=inf n=1e6 q=0.8", saturated_fixed_point(1'000'000, 0.8, inf).p_A, 0.2, 1e-4));

  std::uint64_t index = 0;
  for (const auto& [k, q] : {std::pair{geo, 0.05}, std::pair{geo, 0.1}, std::pair{inf, 0.5}, std::pair{inf, 0.8}}) {
    const double p_A = saturated_fixed_point(n, q, k).p_A;
    if (p_A < 1e-3) continue;
    auto cfg = detail::sim_config(n, 0.0, k, q, sim::mix_seed(opts.seed, index++));
    cfg.saturated = true;
    const auto m = sim::run(cfg);
    out.push_back(within_abs(6, "saturated p_hat K=" + k.to_string() + detail::fmt(" q=%g (3 s.e.)", q), m.p_hat,
                             p_A, 3.0 * m.p_hat_stderr));
  }
  return out;
}

inline std::vector<Check> cutoff_monotonicity(const Options&) {
  constexpr long n = 50;
  constexpr double q = 0.3;
  std::vector<Check> out;
  double prev = -1.0;
  bool increasing = true;
  for (const long k : {2L, 4L, 8L, 16L}) {
    const double p_A = saturated_fixed_point(n, q, Cutoff::finite(k)).p_A;
    increasing = increasing && p_A > prev;
    prev = p_A;
  }
  out.push_back(holds(7, "p_A strictly increasing over K = 2, 4, 8, 16", increasing));
  out.push_back(below(7, "p_A n=1e5 K=4 q=0.3", saturated_fixed_point(100'000, q, Cutoff::finite(4)).p_A, 1e-3));
  return out;
}

inline std::vector<Check> pseudo_throughput(const Options& opts) {
  constexpr long n = 50;
  constexpr double rate = 0.3;
  constexpr std::uint64_t kSlots = 10'000'000;
  std::vector<Check> out;
  std::uint64_t index = 0;
  for (const double q : {0.5, 0.65, 0.8, 0.95}) {
    const auto m = sim::run(detail::sim_config(n, rate, Cutoff::unbounded(), q, sim::mix_seed(opts.seed, index++), kSlots));
    const double target = q < 0.9 ? rate : -(1.0 - q) * std::log1p(-q);
    out.push_back(within_rel(8, detail::fmt("throughput K=inf q=%g", q), m.throughput_hat, target, 0.15));
  }
  const auto m = sim::run(detail::sim_config(n, rate, Cutoff::finite(1), 0.2, sim::mix_seed(opts.seed, index++), kSlots));
  out.push_back(below(9, "throughput K=1 q=0.2", m.throughput_hat, 0.01));
  return out;
}

inline std::vector<Check> max_throughput(const Options& opts) {
  std::vector<Check> out;
  for (const long n : {100L, 1000L, 10000L}) {
    const double nn = static_cast<double>(n);
    const auto exact = max_stable_throughput(n, Cutoff::unbounded(), StabilityMode::Absolute);
    out.push_back(within_rel(10, detail::fmt("exact root K=inf vs ln n/n, n=%g", nn), exact.lambda_max,
                             std::log(nn) / nn, 0.15));
  }
  for (const long n : {100L, 1000L, 10000L}) {
    const double nn = static_cast<double>(n);
    const double v = max_stable_throughput(n, Cutoff::finite(1), StabilityMode::Absolute).lambda_max;
    out.push_back(holds(10, detail::fmt("K=1 max in [1/e - 2/(e n), 1/e], n=%g", nn),
                        v >= kInvE - 2.0 * kInvE / nn && v <= kInvE, v));
  }
  {
    const long n = 10000;
    const auto exact = max_stable_throughput(n, Cutoff::finite(4), StabilityMode::Absolute);
    const auto approx = max_stable_throughput_approx(n, Cutoff::finite(4), StabilityMode::Absolute);
    out.push_back(within_rel(10, "closed form vs exact root K=4 n=1e4", approx->lambda_max, exact.lambda_max, 0.15));
  }
  {
    constexpr long n = 10;
    constexpr double rate = 0.3;
    const double q = q_lower(n, rate, Cutoff::finite(1)) * (1.0 + 1e-3);
    const auto m = sim::run(detail::sim_config(n, rate, Cutoff::finite(1), q, sim::mix_seed(opts.seed, 0)));
    out.push_back(above(10, detail::fmt("rho_hat n=10 rate=0.3 K=1 q=%.6g", q), m.rho_hat, 0.9));
  }
  return out;
}

inline std::vector<Check> capture_trace(const Options& opts) {
  auto cfg = detail::sim_config(50, 0.3, Cutoff::unbounded(), 0.8, opts.seed);
  cfg.trace_node = 0;
  const auto m = sim::run(cfg);
  return {
      above(11, "longest idle stretch of node 0 (slots)", static_cast<double>(m.capture->longest_idle_stretch), 1e4),
      above(11, "longest run of consecutive departures by node 0", static_cast<double>(m.capture->longest_capture_run),
            50.0),
  };
}

inline const std::vector<Suite>& suites() {
  static const std::vector<Suite> all = {
      {"regions", "region endpoints at n=50, rate=0.3", region_numbers},
      {"fixed_points", "stable points over 200 random rates", fixed_points},
      {"fig14", "p_hat and throughput invariance across q and K", invariance},
      {"fig13", "simulated offered load against the model", offered_load_agreement},
      {"dynamics", "success-probability iteration from random starts", dynamics},
      {"theorem6", "saturated fixed point, closed forms and saturated p_hat", saturation},
      {"corollary6", "undesired point against the cutoff K", cutoff_monotonicity},
      {"fig16", "throughput in the pseudo and collapse regimes", pseudo_throughput},
      {"max_throughput", "largest stable rate and a near-boundary simulation", max_throughput},
      {"fig12", "capture effect on a traced node", capture_trace},
  };
  return all;
}

inline const Suite& find_suite(std::string_view name) {
  for (const auto& s : suites()) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown suite: " + std::string(name));
}

inline bool all_pass(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

/// One fixed-format line per check; no timing so reruns are byte-identical.
inline std::string format_check(const std::string& suite, const Check& c) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-5s %-15s c%-2d %-52s value=%-14.8g target=%-12.8g tol=%-10.4g delta=%.4g",
                c.pass ? "PASS" : "FAIL", suite.c_str(), c.criterion, c.name.c_str(), c.value, c.target, c.tolerance,
                c.delta);
  return buf;
}

}  // namespace aloha::validation
