#pragma once

// Real branches of the Lambert W function, w * exp(w) = z.
//
//   W0  : [-1/e, inf)  -> [-1, inf)
//   W-1 : [-1/e, 0)    -> (-inf, -1]
//
// Both branches start from a truncated series (around 0 for W0, around the
// branch point -1/e for either branch) or a log asymptote, then polish with
// Halley's iteration.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aloha::lambert {

enum class Branch { Principal, MinusOne };

template <std::floating_point Real>
inline constexpr Real kBranchPoint = -Real(0.36787944117144232159552377016146087L);

// Inputs this far below -1/e are still accepted (and treated as the branch point).
inline constexpr double kDomainTolerance = 1e-15;
// |z + 1/e| at or below this returns exactly -1.
inline constexpr double kBranchSnap = 1e-15;
inline constexpr int kMaxHalleySteps = 64;

/// Five-term Taylor series of W0 about z = 0.
template <std::floating_point Real>
constexpr Real w0_series(Real z) {
  // z - z^2 + 3/2 z^3 - 8/3 z^4 + 125/24 z^5
  return z * (Real(1) + z * (Real(-1) + z * (Real(1.5) + z * (Real(-8) / 3 + z * (Real(125) / 24)))));
}

/// Series about the branch point in x = +-sqrt(2(e z + 1)); the sign of x selects
/// the branch (+ for W0, - for W-1).
template <std::floating_point Real>
Real branch_point_series(Real z, Branch branch) {
  const Real t = std::fma(std::numbers::e_v<Real>, z, Real(1));
  const Real root = std::sqrt(Real(2) * std::max(t, Real(0)));
  const Real x = branch == Branch::Principal ? root : -root;
  // -1 + x - x^2/3 + 11/72 x^3 - 43/540 x^4 + 769/17280 x^5
  return Real(-1) +
         x * (Real(1) +
              x * (Real(-1) / 3 + x * (Real(11) / 72 + x * (Real(-43) / 540 + x * (Real(769) / 17280)))));
}

namespace detail {

template <std::floating_point Real>
[[noreturn]] void domain_fail(const char* fn, Real z) {
  throw std::domain_error(std::string(fn) + ": argument " + std::to_string(static_cast<double>(z)) +
                          " outside the branch domain");
}

template <std::floating_point Real>
Real halley(Real z, Real w) {
  for (int i = 0; i < kMaxHalleySteps; ++i) {
    const Real ew = std::exp(w);
    const Real f = w * ew - z;
    if (f == 0) break;
    const Real wp1 = w + 1;
    if (wp1 == 0) break;
    const Real denom = ew * wp1 - (w + 2) * f / (2 * wp1);
    const Real next = w - f / denom;
    if (!std::isfinite(next)) break;
    const Real step = std::abs(next - w);
    w = next;
    if (step <= 4 * std::numeric_limits<Real>::epsilon() * std::max(Real(1), std::abs(w))) break;
  }
  return w;
}

}  // namespace detail

/// Principal branch W0(z), z >= -1/e.
template <std::floating_point Real>
Real w0(Real z) {
  constexpr Real bp = kBranchPoint<Real>;
  if (std::isnan(z) || z < bp - Real(kDomainTolerance)) detail::domain_fail("w0", z);
  if (std::abs(z - bp) <= Real(kBranchSnap) || z <= bp) return Real(-1);
  if (z == 0) return Real(0);
  if (std::isinf(z)) return z;

  Real guess;
  if (z < Real(-0.25)) {
    guess = branch_point_series(z, Branch::Principal);
  } else if (z <= Real(0.25)) {
    guess = w0_series(z);
  } else if (z < Real(3)) {
    guess = std::log1p(z) * Real(0.75);
  } else {
    const Real l1 = std::log(z);
    const Real l2 = std::log(l1);
    guess = l1 - l2 + l2 / l1;
  }
  return std::max(detail::halley(z, guess), Real(-1));
}

/// Lower branch W-1(z), -1/e <= z < 0.
template <std::floating_point Real>
Real wm1(Real z) {
  constexpr Real bp = kBranchPoint<Real>;
  if (std::isnan(z) || z >= 0 || z < bp - Real(kDomainTolerance)) detail::domain_fail("wm1", z);
  if (std::abs(z - bp) <= Real(kBranchSnap) || z <= bp) return Real(-1);

  Real guess;
  if (z < Real(-0.25)) {
    guess = branch_point_series(z, Branch::MinusOne);
  } else {
    const Real l1 = std::log(-z);
    const Real l2 = std::log(-l1);
    guess = l1 - l2 + l2 / l1;
  }
  return std::min(detail::halley(z, guess), Real(-1));
}

template <std::floating_point Real>
Real w(Real z, Branch branch) {
  return branch == Branch::Principal ? w0(z) : wm1(z);
}

}  // namespace aloha::lambert
