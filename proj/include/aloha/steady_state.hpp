#pragma once

// Decomposed-queue model of buffered slotted Aloha with K-exponential backoff.
//
// Every node is treated as an independent Geo/G/1 queue with Bernoulli(λ)
// arrivals; the queues interact only through the probability of success p of
// head-of-line (HOL) packets. An HOL packet in phase i transmits with
// probability q^i and moves to phase min(i+1, K) on collision.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/lambert_w.hpp"
#include "aloha/numerics.hpp"

namespace aloha {

/// Raised where a K = inf quantity diverges (p + q <= 1 makes the phase
/// distribution non-normalisable).
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cutoff phase K: a finite K >= 1 or unbounded (pure exponential backoff).
class Cutoff {
 public:
  static constexpr Cutoff unbounded() { return Cutoff{}; }
  static Cutoff finite(long k) {
    if (k < 1) throw std::invalid_argument("cutoff phase must be >= 1, got " + std::to_string(k));
    Cutoff c;
    c.k_ = k;
    return c;
  }
  /// Accepts a positive integer or "inf".
  static Cutoff parse(std::string_view text) {
    if (text == "inf" || text == "Inf" || text == "INF" || text == "unbounded") return unbounded();
    long k = 0;
    std::size_t used = 0;
    try {
      k = std::stol(std::string(text), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) {
      throw std::invalid_argument("cutoff must be a positive integer or 'inf', got '" + std::string(text) + "'");
    }
    return finite(k);
  }

  constexpr bool is_unbounded() const { return k_ == 0; }
  constexpr bool is_geometric() const { return k_ == 1; }
  long value() const {
    if (is_unbounded()) throw std::logic_error("cutoff is unbounded");
    return k_;
  }
  std::string to_string() const { return is_unbounded() ? std::string("inf") : std::to_string(k_); }

  friend constexpr bool operator==(Cutoff, Cutoff) = default;

 private:
  constexpr Cutoff() = default;
  long k_ = 0;  // 0 encodes unbounded
};

/// One buffered-Aloha instance (n, λ̂, K, q).
struct NetworkConfig {
  long n = 1;
  double aggregate_rate = 0.0;  // λ̂, packets/slot over the whole network
  Cutoff cutoff = Cutoff::finite(1);
  double q = 0.5;

  double per_node_rate() const { return aggregate_rate / static_cast<double>(n); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("n must be a positive integer");
    if (!(aggregate_rate >= 0.0)) throw std::invalid_argument("aggregate rate must be >= 0");
    if (per_node_rate() > 1.0) throw std::invalid_argument("per-node rate λ̂/n must not exceed 1");
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("retransmission factor q must lie in (0, 1)");
  }
};

namespace detail {

inline void check_pq(double p, double q) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("probability of success must lie in (0, 1]");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("retransmission factor q must lie in (0, 1)");
}

// Σ_{i=0}^{k-1} x^i for x in [0, 1].
inline double geometric_sum(double x, double k) {
  if (x == 1.0) return k;
  if (x == 0.0) return 1.0;
  return -std::expm1(k * std::log(x)) / (1.0 - x);
}

}  // namespace detail

/// ln(1/f_0): log of the mean HOL service time. 1/f_0 = Σ_{i<K} r^i + r^K / p
/// with r = (1-p)/q; for K = inf it is q / (p + q - 1).
inline double log_mean_service_time(double p, double q, Cutoff cutoff) {
  detail::check_pq(p, q);
  if (cutoff.is_unbounded()) {
    const double slack = p + q - 1.0;
    if (!(slack > 0.0)) {
      throw SingularityError("K = inf phase distribution diverges: p + q <= 1 (p = " + std::to_string(p) +
                             ", q = " + std::to_string(q) + ")");
    }
    return std::log(q) - std::log(slack);
  }
  const double k = static_cast<double>(cutoff.value());
  const double r = (1.0 - p) / q;
  if (r <= 1.0) {
    const double head = detail::geometric_sum(r, k);
    const double tail = r == 0.0 ? 0.0 : std::exp(k * std::log(r) - std::log(p));
    return std::log(head + tail);
  }
  // Factor out r^K so nothing overflows: 1/f_0 = r^K (Σ_{j=1}^{K} r^-j + 1/p).
  const double inv_r = 1.0 / r;
  const double head = inv_r * detail::geometric_sum(inv_r, k);
  return k * std::log(r) + std::log(head + 1.0 / p);
}

inline double mean_service_time(double p, double q, Cutoff cutoff) {
  return std::exp(log_mean_service_time(p, q, cutoff));
}

/// Limiting distribution of the HOL phase chain, plus the phase distribution
/// conditioned on being backlogged (phase >= 1).
class PhaseDistribution {
 public:
  PhaseDistribution(double p, double q, Cutoff cutoff) : p_(p), q_(q), cutoff_(cutoff) {
    const double log_inv_f0 = log_mean_service_time(p, q, cutoff);
    ratio_ = (1.0 - p) / q;
    f0_ = std::exp(-log_inv_f0);
    if (cutoff.is_unbounded()) return;

    const long k = cutoff.value();
    const double log_r = std::log(ratio_);
    f_.resize(static_cast<std::size_t>(k) + 1);
    f_[0] = f0_;
    for (long i = 1; i < k; ++i) f_[static_cast<std::size_t>(i)] = std::exp(double(i) * log_r - log_inv_f0);
    f_[static_cast<std::size_t>(k)] = std::exp(double(k) * log_r - std::log(p) - log_inv_f0);

    phi_.assign(static_cast<std::size_t>(k), 0.0);
    double backlogged = 0.0;
    for (long i = 1; i <= k; ++i) backlogged += f_[static_cast<std::size_t>(i)];
    if (backlogged > 0.0) {
      for (long i = 1; i <= k; ++i) phi_[static_cast<std::size_t>(i - 1)] = f_[static_cast<std::size_t>(i)] / backlogged;
    } else {
      // p -> 1: a collided packet almost surely sits in phase 1.
      phi_[0] = 1.0;
    }
  }

  double p() const { return p_; }
  double q() const { return q_; }
  Cutoff cutoff() const { return cutoff_; }
  /// (1 - p) / q; for K = inf f_i = f_0 * ratio^i.
  double ratio() const { return ratio_; }
  double f0() const { return f0_; }

  /// f_i for any i >= 0 (zero beyond a finite cutoff).
  double f(std::size_t i) const {
    if (cutoff_.is_unbounded()) return i == 0 ? f0_ : f0_ * std::pow(ratio_, double(i));
    return i < f_.size() ? f_[i] : 0.0;
  }

  /// φ_i = f_i / (1 - f_0), i >= 1.
  double phi(std::size_t i) const {
    if (i == 0) throw std::out_of_range("phi is defined for phases >= 1");
    if (cutoff_.is_unbounded()) return (1.0 - ratio_) * std::pow(ratio_, double(i - 1));
    return i <= phi_.size() ? phi_[i - 1] : 0.0;
  }

  /// f_0..f_K for finite K; empty for K = inf.
  std::span<const double> finite_f() const { return f_; }

  /// Σ_{i>=1} φ_i q^i: mean per-slot attempt probability of a backlogged node.
  double mean_backlogged_attempt() const {
    if (cutoff_.is_unbounded()) return (p_ + q_ - 1.0) / p_;
    double s = 0.0;
    double qi = 1.0;
    for (std::size_t i = 0; i < phi_.size(); ++i) {
      qi *= q_;
      s += phi_[i] * qi;
    }
    return s;
  }

 private:
  double p_;
  double q_;
  Cutoff cutoff_;
  double ratio_ = 0.0;
  double f0_ = 1.0;
  std::vector<double> f_;
  std::vector<double> phi_;
};

inline PhaseDistribution phase_distribution(double p, double q, Cutoff cutoff) { return {p, q, cutoff}; }

/// Per-node offered load ρ = λ / f_0. Values above 1 mean the queue is unstable.
inline double offered_load(const NetworkConfig& config, double p) {
  return config.per_node_rate() * mean_service_time(p, config.q, config.cutoff);
}

/// Roots of p = exp(-λ̂ / p).
struct StablePoints {
  double p_L = std::numeric_limits<double>::quiet_NaN();
  double p_S = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
  // λ̂ = 0: p_L = 1 and p_S is the limit 0.
  bool degenerate = false;
};

inline StablePoints stable_points(double aggregate_rate) {
  if (!(aggregate_rate >= 0.0)) throw std::domain_error("aggregate rate must be >= 0");
  if (aggregate_rate == 0.0) return {1.0, 0.0, true, true};
  if (aggregate_rate > kInvE + lambert::kDomainTolerance) return {};
  const double z = -aggregate_rate;
  return {std::exp(lambert::w0(z)), std::exp(lambert::wm1(z)), true, false};
}

/// G = λ̂ / p.
inline double attempt_rate(double aggregate_rate, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("attempt_rate: p must lie in (0, 1]");
  return aggregate_rate / p;
}

/// λ̂ = G e^{-G}.
inline double throughput_of_attempt_rate(double attempt_rate) {
  if (!(attempt_rate >= 0.0)) throw std::domain_error("attempt rate must be >= 0");
  return attempt_rate * std::exp(-attempt_rate);
}

/// One step of p_{t+1} = exp(-λ̂ / p_t); p_t = 0 maps to 0.
inline double success_map(double p, double aggregate_rate) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("success_map: p must lie in [0, 1]");
  if (p == 0.0) return 0.0;
  return std::exp(-aggregate_rate / p);
}

enum class DynamicsVerdict { ConvergedToPL, DivergedBelowPS, Undecided };

inline std::string_view to_string(DynamicsVerdict v) {
  switch (v) {
    case DynamicsVerdict::ConvergedToPL: return "converged_to_pL";
    case DynamicsVerdict::DivergedBelowPS: return "diverged_below_pS";
    case DynamicsVerdict::Undecided: return "undecided";
  }
  return "?";
}

struct DynamicsResult {
  std::vector<double> trajectory;  // p_0, p_1, ...
  DynamicsVerdict verdict = DynamicsVerdict::Undecided;
  std::size_t steps() const { return trajectory.empty() ? 0 : trajectory.size() - 1; }
};

inline DynamicsResult iterate_dynamics(double p0, double aggregate_rate, std::size_t max_steps, double tol) {
  if (!(p0 > 0.0 && p0 <= 1.0)) throw std::domain_error("iterate_dynamics: p_0 must lie in (0, 1]");
  const StablePoints sp = stable_points(aggregate_rate);
  DynamicsResult out;
  out.trajectory.push_back(p0);
  double p = p0;
  for (std::size_t t = 0;; ++t) {
    if (sp.defined && std::abs(p - sp.p_L) < tol) {
      out.verdict = DynamicsVerdict::ConvergedToPL;
      return out;
    }
    if (t == max_steps) return out;
    const double next = success_map(p, aggregate_rate);
    out.trajectory.push_back(next);
    if (sp.defined && p < sp.p_S - tol && next < p) {
      out.verdict = DynamicsVerdict::DivergedBelowPS;
      return out;
    }
    p = next;
  }
}

/// g(p) = p / f_0(p): saturated-network attempt scale. +inf for K = inf when
/// (1-p)/q >= 1.
inline double saturated_g(double p, double q, Cutoff cutoff) {
  if (cutoff.is_unbounded() && !(p + q - 1.0 > 0.0)) {
    detail::check_pq(p, q);
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(std::log(p) + log_mean_service_time(p, q, cutoff));
}

/// Saturated dynamics p_{t+1} = exp(-n / g(p_t)).
inline double saturated_map(double p, long n, double q, Cutoff cutoff) {
  if (cutoff.is_unbounded() && !(p + q - 1.0 > 0.0)) {
    detail::check_pq(p, q);
    return 1.0;
  }
  const double log_g = std::log(p) + log_mean_service_time(p, q, cutoff);
  return std::exp(-static_cast<double>(n) * std::exp(-log_g));
}

struct SaturatedPoint {
  double p_A = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  double residual = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double kFixedPointTolerance = 1e-10;

/// Root of p = exp(-n / g(p)), the undesired stable point of a saturated network.
inline SaturatedPoint saturated_fixed_point(long n, double q, Cutoff cutoff) {
  if (n < 2) throw std::domain_error("saturated_fixed_point: n must be >= 2");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("saturated_fixed_point: q must lie in (0, 1)");

  // h(p) = p - map(p) is strictly increasing (the map is decreasing); solve in
  // log p so tiny roots keep full relative precision.
  auto h = [&](double log_p) {
    const double p = std::exp(log_p);
    return p - saturated_map(p, n, q, cutoff);
  };
  constexpr double kLogFloor = -690.0;  // ~1e-300
  SaturatedPoint out;
  if (h(kLogFloor) >= 0.0) {
    // map(0+) itself underflows: the fixed point sits below the double range.
    out.p_A = saturated_map(std::exp(kLogFloor), n, q, cutoff);
  } else {
    const auto root = numerics::bisect(h, kLogFloor, 0.0);
    out.p_A = std::exp(root.root);
    out.iterations = root.iterations;
  }
  out.residual = std::abs(out.p_A - (out.p_A > 0.0 ? saturated_map(out.p_A, n, q, cutoff) : 0.0));
  out.converged = out.residual <= kFixedPointTolerance;
  return out;
}

/// p_A ≈ exp(-nq) for geometric retransmission.
inline double p_A_closed_form_geo(long n, double q) {
  if (n < 2 || !(q > 0.0 && q < 1.0)) throw std::domain_error("p_A_closed_form_geo: need n >= 2, q in (0, 1)");
  return std::exp(-static_cast<double>(n) * q);
}

/// p_A ≈ n(1-q) / (n + q ln(1-q)) for exponential backoff.
inline double p_A_closed_form_exp(long n, double q) {
  if (n < 2 || !(q > 0.0 && q < 1.0)) throw std::domain_error("p_A_closed_form_exp: need n >= 2, q in (0, 1)");
  const double nn = static_cast<double>(n);
  const double denom = nn + q * std::log1p(-q);
  if (!(denom > 0.0)) throw std::domain_error("p_A_closed_form_exp: n + q ln(1-q) must be positive");
  return nn * (1.0 - q) / denom;
}

}  // namespace aloha
