#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aloha {

inline constexpr double kInvE = 0.36787944117144232159552377016146087;  // e^-1

namespace numerics {

struct BisectOptions {
  // 0 means "run to floating-point resolution".
  double x_tol = 0.0;
  int max_iterations = 200;
};

struct BisectResult {
  double root = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
};

/// Bisection on a sign-changing bracket [lo, hi]. f(lo) and f(hi) must have
/// opposite signs (or one of them be zero).
template <std::invocable<double> F>
BisectResult bisect(F&& f, double lo, double hi, BisectOptions opts = {}) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, 0, true};
  if (fhi == 0.0) return {hi, 0, true};
  if (std::signbit(flo) == std::signbit(fhi)) {
    throw std::domain_error("bisect: interval does not bracket a root");
  }
  BisectResult res;
  for (res.iterations = 1; res.iterations <= opts.max_iterations; ++res.iterations) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi || (opts.x_tol > 0.0 && hi - lo <= opts.x_tol)) {
      res.converged = true;
      break;
    }
    const double fmid = f(mid);
    if (fmid == 0.0) {
      lo = hi = mid;
      res.converged = true;
      break;
    }
    if (std::signbit(fmid) == std::signbit(flo)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  res.iterations = std::min(res.iterations, opts.max_iterations);
  res.root = lo + 0.5 * (hi - lo);
  return res;
}

/// Points of a grid on [start, stop]; log spacing requires start > 0.
inline std::vector<double> grid(double start, double stop, std::size_t points, bool log_spaced) {
  if (points == 0) throw std::invalid_argument("grid: need at least one point");
  if (points == 1) return {start};
  if (!(start < stop)) throw std::invalid_argument("grid: start must be below stop");
  if (log_spaced && start <= 0.0) throw std::invalid_argument("grid: log spacing needs start > 0");
  std::vector<double> out(points);
  const double denom = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / denom;
    out[i] = log_spaced ? std::exp(std::log(start) + t * (std::log(stop) - std::log(start)))
                        : start + t * (stop - start);
  }
  out.back() = stop;
  return out;
}

/// All sign-change brackets of f on a grid, in grid order.
template <std::invocable<double> F>
std::vector<std::pair<double, double>> sign_brackets(F&& f, const std::vector<double>& pts) {
  std::vector<std::pair<double, double>> out;
  if (pts.empty()) return out;
  double prev_x = pts.front();
  double prev_f = f(prev_x);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double fx = f(pts[i]);
    if (prev_f == 0.0 || std::signbit(prev_f) != std::signbit(fx)) out.emplace_back(prev_x, pts[i]);
    prev_x = pts[i];
    prev_f = fx;
  }
  return out;
}

/// Standard normal upper tail 1 - Φ(x), via erfc (no cancellation for large x).
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace numerics
}  // namespace aloha
