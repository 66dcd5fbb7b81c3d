#pragma once

// Stable regions of the retransmission factor q.
//
//   absolute    S  = [q_l, q_u]     convergence to p_L guaranteed and ρ <= 1
//   asymptotic  S* = [q_l, q_u*]    (K = inf) convergence to p_L w.p. -> 1 as n grows
//   pseudo         [1-p_L, 1-p_S]   (K = inf) throughput λ̂ held at p_A, delay unbounded
//
// Region endpoints are closed. At q = q_l the offered load is exactly 1, so a
// bounded queue needs q strictly above q_l.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/lambert_w.hpp"
#include "aloha/numerics.hpp"
#include "aloha/steady_state.hpp"

namespace aloha {

namespace detail {

inline StablePoints require_stable_points(double aggregate_rate, const char* fn) {
  const StablePoints sp = stable_points(aggregate_rate);
  if (!sp.defined) {
    throw std::domain_error(std::string(fn) + ": no stable points for aggregate rate above 1/e");
  }
  return sp;
}

inline void require_nodes(long n, long minimum, const char* fn) {
  if (n < minimum) throw std::domain_error(std::string(fn) + ": n = " + std::to_string(n) + " too small");
}

inline constexpr double kScanLow = 1e-9;
inline constexpr double kScanHigh = 1.0 - 1e-9;
inline constexpr std::size_t kScanPoints = 64;

struct QRoot {
  double value = 0.0;
  std::size_t brackets = 0;
};

// Root in q of ln(1/f_0(p_L, q, K)) = ln(target). The left side falls
// monotonically in q, from +inf at q -> 0 to ln(1/p_L) at q = 1.
inline QRoot solve_service_time_equation(double p_L, Cutoff cutoff, double target, std::optional<double> hint) {
  const double log_target = std::log(target);
  auto f = [&](double log_q) { return log_mean_service_time(p_L, std::exp(log_q), cutoff) - log_target; };

  std::vector<double> pts = numerics::grid(std::log(kScanLow), std::log(kScanHigh), kScanPoints, false);
  auto brackets = numerics::sign_brackets(f, pts);
  QRoot out;
  out.brackets = brackets.size();
  if (brackets.empty()) {
    if (f(pts.front()) < 0.0) {
      // Root below the scan window (very light load).
      constexpr double kLogFloor = -690.0;
      if (f(kLogFloor) < 0.0) return out;  // value 0
      out.value = std::exp(numerics::bisect(f, kLogFloor, pts.front()).root);
      return out;
    }
    out.value = 1.0;  // never reaches the target inside (0, 1)
    return out;
  }
  auto chosen = brackets.front();
  if (hint && brackets.size() > 1) {
    const double log_hint = std::log(*hint);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : brackets) {
      const double d = std::min(std::abs(b.first - log_hint), std::abs(b.second - log_hint));
      if (d < best) {
        best = d;
        chosen = b;
      }
    }
  }
  out.value = std::exp(numerics::bisect(f, chosen.first, chosen.second).root);
  return out;
}

}  // namespace detail

/// q_u = -ln p_S / n = -W_{-1}(-λ̂) / n. +inf at λ̂ = 0.
inline double q_upper(long n, double aggregate_rate) {
  detail::require_nodes(n, 1, "q_upper");
  const StablePoints sp = detail::require_stable_points(aggregate_rate, "q_upper");
  if (sp.degenerate) return std::numeric_limits<double>::infinity();
  return -std::log(sp.p_S) / static_cast<double>(n);
}

/// Approximate q_l for finite K >= 2 and large n: (1 - p_L) / (n p_L / λ̂)^{1/K}.
inline double q_lower_approx(long n, double aggregate_rate, Cutoff cutoff) {
  detail::require_nodes(n, 1, "q_lower_approx");
  if (cutoff.is_unbounded()) throw std::domain_error("q_lower_approx: finite cutoff required");
  const StablePoints sp = detail::require_stable_points(aggregate_rate, "q_lower_approx");
  if (sp.degenerate) return 0.0;
  const double k = static_cast<double>(cutoff.value());
  return (1.0 - sp.p_L) / std::pow(static_cast<double>(n) * sp.p_L / aggregate_rate, 1.0 / k);
}

/// q_l: the q at which the offered load at p_L equals 1. Returns 0 when ρ < 1
/// for every q (no lower constraint).
inline double q_lower(long n, double aggregate_rate, Cutoff cutoff) {
  detail::require_nodes(n, 1, "q_lower");
  const StablePoints sp = detail::require_stable_points(aggregate_rate, "q_lower");
  if (sp.degenerate) return 0.0;
  const double nn = static_cast<double>(n);
  const double p_L = sp.p_L;
  if (cutoff.is_geometric()) return aggregate_rate * (1.0 - p_L) / (p_L * (nn - aggregate_rate));
  if (cutoff.is_unbounded()) return (1.0 - p_L) / (1.0 - aggregate_rate / nn);
  return detail::solve_service_time_equation(p_L, cutoff, nn / aggregate_rate, std::nullopt).value;
}

/// Large-n approximation of q_u* for finite K: (1 - p_L) / (n (1 - p_L) / -ln p_S)^{1/K}.
inline double q_upper_star_approx(long n, double aggregate_rate, Cutoff cutoff) {
  if (cutoff.is_unbounded()) throw std::domain_error("q_upper_star_approx: finite cutoff required");
  const StablePoints sp = detail::require_stable_points(aggregate_rate, "q_upper_star_approx");
  if (sp.degenerate) return std::numeric_limits<double>::infinity();
  const double k = static_cast<double>(cutoff.value());
  const double neg_log_ps = -std::log(sp.p_S);
  return (1.0 - sp.p_L) / std::pow(static_cast<double>(n) * (1.0 - sp.p_L) / neg_log_ps, 1.0 / k);
}

struct UpperStar {
  double value = 0.0;
  // Set when the bracket scan saw more than one sign change.
  bool multiple_brackets = false;
};

/// q_u*: largest q keeping the mean backlogged attempt rate n Σ φ_i q^i at or
/// below -ln p_S.
inline UpperStar q_upper_star_detail(long n, double aggregate_rate, Cutoff cutoff) {
  detail::require_nodes(n, 1, "q_upper_star");
  const StablePoints sp = detail::require_stable_points(aggregate_rate, "q_upper_star");
  if (sp.degenerate) return {std::numeric_limits<double>::infinity(), false};
  const double nn = static_cast<double>(n);
  const double neg_log_ps = -std::log(sp.p_S);
  if (cutoff.is_geometric()) return {neg_log_ps / nn, false};
  if (cutoff.is_unbounded()) return {1.0 - sp.p_L + neg_log_ps / nn * sp.p_L, false};
  const double target = 1.0 + (1.0 - sp.p_L) / sp.p_L * nn / neg_log_ps;
  const auto root =
      detail::solve_service_time_equation(sp.p_L, cutoff, target, q_upper_star_approx(n, aggregate_rate, cutoff));
  return {root.value, root.brackets > 1};
}

inline double q_upper_star(long n, double aggregate_rate, Cutoff cutoff) {
  return q_upper_star_detail(n, aggregate_rate, cutoff).value;
}

struct PseudoRegion {
  double lower = 0.0;  // 1 - p_L
  double upper = 0.0;  // 1 - p_S
};

inline PseudoRegion pseudo_region(double aggregate_rate) {
  const StablePoints sp = detail::require_stable_points(aggregate_rate, "pseudo_region");
  return {1.0 - sp.p_L, 1.0 - sp.p_S};
}

enum class StabilityMode { Absolute, Asymptotic };
enum class ThroughputMethod { ExactRoot, Approximation };

inline std::string_view to_string(ThroughputMethod m) {
  return m == ThroughputMethod::ExactRoot ? "exact_root" : "approximation";
}

struct MaxThroughputResult {
  double lambda_max = 0.0;
  double q_at_max = 0.0;
  ThroughputMethod method = ThroughputMethod::ExactRoot;
};

namespace detail {

inline double q_bound(long n, double aggregate_rate, Cutoff cutoff, StabilityMode mode) {
  return mode == StabilityMode::Absolute ? q_upper(n, aggregate_rate) : q_upper_star(n, aggregate_rate, cutoff);
}

}  // namespace detail

/// Largest λ̂ whose region is non-empty: the root of q_l(λ̂) = q_bound(λ̂).
/// When the bounds are still apart at λ̂ = 1/e the result is 1/e itself,
/// reported as an approximation with q at the bound.
inline MaxThroughputResult max_stable_throughput(long n, Cutoff cutoff, StabilityMode mode) {
  detail::require_nodes(n, 2, "max_stable_throughput");
  auto gap = [&](double rate) { return q_lower(n, rate, cutoff) - detail::q_bound(n, rate, cutoff, mode); };
  if (gap(kInvE) <= 0.0) {
    return {kInvE, detail::q_bound(n, kInvE, cutoff, mode), ThroughputMethod::Approximation};
  }
  const auto root = numerics::bisect(gap, 1e-12, kInvE, {.x_tol = 1e-14, .max_iterations = 200});
  return {root.root, q_lower(n, root.root, cutoff), ThroughputMethod::ExactRoot};
}

/// Closed-form approximations: e^-1 at q = 1/n (K = 1), ln n / n (K = inf),
/// ln n^{1-1/K} / n^{1-1/K} (finite K), and e^-1 at q = 1 - e^-1 for the
/// asymptotic region of K = inf. Empty where no closed form exists.
inline std::optional<MaxThroughputResult> max_stable_throughput_approx(long n, Cutoff cutoff, StabilityMode mode) {
  detail::require_nodes(n, 2, "max_stable_throughput_approx");
  const double nn = static_cast<double>(n);
  const auto approx = ThroughputMethod::Approximation;
  if (cutoff.is_geometric()) return MaxThroughputResult{kInvE, 1.0 / nn, approx};
  if (mode == StabilityMode::Asymptotic) {
    if (cutoff.is_unbounded()) return MaxThroughputResult{kInvE, 1.0 - kInvE, approx};
    return std::nullopt;
  }
  if (cutoff.is_unbounded()) {
    const double v = std::log(nn) / nn;
    return MaxThroughputResult{v, v, approx};
  }
  const double m = std::pow(nn, 1.0 - 1.0 / static_cast<double>(cutoff.value()));
  const double v = std::log(m) / m;
  return MaxThroughputResult{v, q_lower_approx(n, std::min(v, kInvE), cutoff), approx};
}

struct EpsilonBounds {
  double markov = 0.0;  // small-backlog bound
  double clt = 0.0;     // large-backlog bound
};

inline constexpr double kDefaultDelta = 0.05;

/// Bounds on ε = Pr{G_t > -ln p_S} for exponential backoff with q in S*,
/// n_b backlogged nodes and normal-approximation margin δ.
inline EpsilonBounds epsilon_bounds(long n, long n_backlogged, double aggregate_rate, double q,
                                    double delta = kDefaultDelta) {
  detail::require_nodes(n, 1, "epsilon_bounds");
  if (n_backlogged < 0 || n_backlogged > n) throw std::domain_error("epsilon_bounds: need 0 <= n_b <= n");
  if (!(delta > 0.0)) throw std::domain_error("epsilon_bounds: delta must be positive");
  const StablePoints sp = detail::require_stable_points(aggregate_rate, "epsilon_bounds");
  const Cutoff inf = Cutoff::unbounded();
  const double lo = q_lower(n, aggregate_rate, inf);
  const double hi = q_upper_star(n, aggregate_rate, inf);
  constexpr double kSlack = 1e-12;
  if (q < lo - kSlack || q > hi + kSlack) {
    throw std::domain_error("epsilon_bounds: q = " + std::to_string(q) + " outside the asymptotic region [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const double nn = static_cast<double>(n);
  const double nb = static_cast<double>(n_backlogged);
  const double mean_attempt = PhaseDistribution(sp.p_L, q, inf).mean_backlogged_attempt();
  const double margin = -std::log(sp.p_S) - (1.0 - nb / nn) * aggregate_rate;
  if (!(margin > 0.0)) throw std::domain_error("epsilon_bounds: non-positive Markov denominator");
  EpsilonBounds out;
  out.markov = nb * mean_attempt / margin;
  out.clt = numerics::normal_sf(delta / std::sqrt(mean_attempt / nn));
  return out;
}

enum class Classification { Absolute, Asymptotic, Pseudo, Unstable };

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::Absolute: return "absolute";
    case Classification::Asymptotic: return "asymptotic";
    case Classification::Pseudo: return "pseudo";
    case Classification::Unstable: return "unstable";
  }
  return "?";
}

struct StabilityReport {
  NetworkConfig config;
  StablePoints points;
  std::optional<double> q_lower;
  std::optional<double> q_upper;
  std::optional<double> q_upper_star;
  std::optional<double> pseudo_lower;
  std::optional<double> pseudo_upper;
  bool absolute_region_empty = true;
  Classification classification = Classification::Unstable;
  std::optional<double> predicted_throughput;
  std::optional<double> epsilon_bound;
  // Undesired stable point; filled for Pseudo and Unstable when n >= 2.
  std::optional<SaturatedPoint> saturated;
  // ρ at p_L; absent when the K = inf phase distribution is singular there.
  std::optional<double> offered_load;
};

/// Aggregate output λ̂_out = min{n f_0, λ̂} evaluated per region.
inline double network_throughput(const NetworkConfig& config, const StabilityReport& report) {
  if (!report.points.defined) throw std::domain_error("network_throughput: undefined for aggregate rate above 1/e");
  const double rate = config.aggregate_rate;
  const double nn = static_cast<double>(config.n);
  const double q = config.q;
  switch (report.classification) {
    case Classification::Absolute:
    case Classification::Asymptotic:
    case Classification::Pseudo:
      return rate;
    case Classification::Unstable:
      break;
  }
  if (config.cutoff.is_unbounded()) return -(1.0 - q) * std::log1p(-q);
  if (config.cutoff.is_geometric() && report.q_upper && q > *report.q_upper) return nn * q * std::exp(-nn * q);

  const SaturatedPoint sat = report.saturated ? *report.saturated : saturated_fixed_point(config.n, q, config.cutoff);
  if (!(sat.p_A > 0.0)) return 0.0;
  const double service_rate = std::exp(-log_mean_service_time(sat.p_A, q, config.cutoff));
  return std::min(nn * service_rate, rate);
}

inline StabilityReport classify(const NetworkConfig& config) {
  config.validate();
  StabilityReport r;
  r.config = config;
  r.points = stable_points(config.aggregate_rate);
  const double q = config.q;
  const bool exponential = config.cutoff.is_unbounded();

  if (!r.points.defined) {
    r.classification = Classification::Unstable;
    if (config.n >= 2) r.saturated = saturated_fixed_point(config.n, q, config.cutoff);
    return r;
  }

  const long n = config.n;
  const double rate = config.aggregate_rate;
  r.q_lower = q_lower(n, rate, config.cutoff);
  r.q_upper = q_upper(n, rate);
  r.q_upper_star = q_upper_star(n, rate, config.cutoff);
  if (exponential) {
    r.pseudo_lower = 1.0 - r.points.p_L;
    r.pseudo_upper = 1.0 - r.points.p_S;
  }
  r.absolute_region_empty = *r.q_lower > *r.q_upper;

  auto within = [q](double lo, double hi) { return lo <= q && q <= hi; };
  if (within(*r.q_lower, *r.q_upper)) {
    r.classification = Classification::Absolute;
  } else if (exponential && within(*r.q_lower, *r.q_upper_star)) {
    r.classification = Classification::Asymptotic;
  } else if (exponential && within(*r.pseudo_lower, *r.pseudo_upper)) {
    r.classification = Classification::Pseudo;
  } else {
    r.classification = Classification::Unstable;
  }

  try {
    r.offered_load = offered_load(config, r.points.p_L);
  } catch (const SingularityError&) {
  }

  if (exponential && !r.points.degenerate && within(*r.q_lower, *r.q_upper_star)) {
    r.epsilon_bound = epsilon_bounds(n, n, rate, q).clt;
  }
  const bool saturating =
      r.classification == Classification::Pseudo || r.classification == Classification::Unstable;
  if (saturating && n >= 2) r.saturated = saturated_fixed_point(n, q, config.cutoff);
  r.predicted_throughput = network_throughput(config, r);
  return r;
}

}  // namespace aloha
