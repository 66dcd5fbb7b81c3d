#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "aloha/steady_state.hpp"
#include "oracles.hpp"

using aloha::Cutoff;
using aloha::NetworkConfig;

namespace {

long k_code(Cutoff c) { return c.is_unbounded() ? 0 : c.value(); }

}  // namespace

TEST(Cutoff, ParseAndPrint) {
  EXPECT_TRUE(Cutoff::parse("inf").is_unbounded());
  EXPECT_EQ(Cutoff::parse("4").value(), 4);
  EXPECT_TRUE(Cutoff::parse("1").is_geometric());
  EXPECT_EQ(Cutoff::parse("inf").to_string(), "inf");
  EXPECT_EQ(Cutoff::finite(7).to_string(), "7");
  EXPECT_THROW(Cutoff::parse("0"), std::invalid_argument);
  EXPECT_THROW(Cutoff::parse("-2"), std::invalid_argument);
  EXPECT_THROW(Cutoff::parse("4x"), std::invalid_argument);
  EXPECT_THROW(Cutoff::parse(""), std::invalid_argument);
  EXPECT_THROW(Cutoff::unbounded().value(), std::logic_error);
}

TEST(NetworkConfig, Validation) {
  EXPECT_NO_THROW((NetworkConfig{10, 0.1, Cutoff::finite(1), 0.5}.validate()));
  EXPECT_THROW((NetworkConfig{0, 0.1, Cutoff::finite(1), 0.5}.validate()), std::invalid_argument);
  EXPECT_THROW((NetworkConfig{10, -0.1, Cutoff::finite(1), 0.5}.validate()), std::invalid_argument);
  EXPECT_THROW((NetworkConfig{10, 11.0, Cutoff::finite(1), 0.5}.validate()), std::invalid_argument);
  EXPECT_THROW((NetworkConfig{10, 0.1, Cutoff::finite(1), 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((NetworkConfig{10, 0.1, Cutoff::finite(1), 1.0}.validate()), std::invalid_argument);
}

TEST(PhaseDistribution, Examples) {
  const auto certain = aloha::phase_distribution(1.0, 0.5, Cutoff::finite(1));
  EXPECT_DOUBLE_EQ(certain.f0(), 1.0);
  EXPECT_DOUBLE_EQ(certain.f(1), 0.0);

  const double p = 0.6131;
  const double q = 0.5;
  // Two-state chain solved directly.
  EXPECT_NEAR(aloha::phase_distribution(p, q, Cutoff::finite(1)).f0(), p * q / (1 - p + p * q), 1e-14);
  EXPECT_NEAR(aloha::phase_distribution(p, q, Cutoff::finite(1)).f0(), 0.4420, 1e-4);
  const auto inf = aloha::phase_distribution(p, q, Cutoff::unbounded());
  EXPECT_NEAR(inf.f0(), (p + q - 1) / q, 1e-14);
  EXPECT_NEAR(inf.f0(), 0.2262, 1e-4);
  EXPECT_NEAR(1.0 / inf.f0(), oracle::inv_f0(p, q, 0), 1e-9);
}

TEST(PhaseDistribution, SumsBalanceAndConditional) {
  oracle::Lcg rng{7};
  for (int t = 0; t < 300; ++t) {
    const double p = 0.01 + 0.98 * rng.uniform();
    const double q = 0.01 + 0.98 * rng.uniform();
    const long k = 1 + static_cast<long>(rng.uniform() * 20);
    const auto d = aloha::phase_distribution(p, q, Cutoff::finite(k));
    double sum = 0.0;
    double phi_sum = 0.0;
    for (long i = 0; i <= k; ++i) sum += d.f(static_cast<std::size_t>(i));
    for (long i = 1; i <= k; ++i) phi_sum += d.phi(static_cast<std::size_t>(i));
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(phi_sum, 1.0, 1e-12);
    // f_i q^i = f_{i-1} q^{i-1} (1-p) below the cutoff; f_K q^K p = f_{K-1} q^{K-1} (1-p).
    for (long i = 1; i <= k; ++i) {
      const double lhs = d.f(i) * std::pow(q, double(i)) * (i == k ? p : 1.0);
      const double rhs = d.f(i - 1) * std::pow(q, double(i - 1)) * (1 - p);
      EXPECT_NEAR(lhs, rhs, 1e-12);
    }
    EXPECT_NEAR(1.0 / d.f0(), oracle::inv_f0(p, q, k), 1e-10 * oracle::inv_f0(p, q, k));
  }
}

TEST(PhaseDistribution, MeanBacklogIdentity) {
  // Σ φ_i q^i = f_0 (1-p) / (p (1-f_0)) for any K.
  for (const long k : {1L, 2L, 5L, 30L}) {
    for (const double p : {0.3, 0.6, 0.9}) {
      for (const double q : {0.2, 0.5, 0.8}) {
        const auto d = aloha::phase_distribution(p, q, Cutoff::finite(k));
        const double f0 = d.f0();
        EXPECT_NEAR(d.mean_backlogged_attempt(), f0 * (1 - p) / (p * (1 - f0)), 1e-12);
      }
    }
  }
  const auto d = aloha::phase_distribution(0.7, 0.5, Cutoff::unbounded());
  EXPECT_NEAR(d.mean_backlogged_attempt(), (0.7 + 0.5 - 1) / 0.7, 1e-15);
  double phi_sum = 0.0;
  for (std::size_t i = 1; i < 2000; ++i) phi_sum += d.phi(i);
  EXPECT_NEAR(phi_sum, 1.0, 1e-12);
}

TEST(PhaseDistribution, UnboundedSingularity) {
  EXPECT_THROW(aloha::phase_distribution(0.5, 0.4, Cutoff::unbounded()), aloha::SingularityError);
  EXPECT_THROW(aloha::phase_distribution(0.5, 0.5, Cutoff::unbounded()), aloha::SingularityError);
  EXPECT_THROW(aloha::phase_distribution(0.0, 0.5, Cutoff::finite(2)), std::domain_error);
}

TEST(ServiceTime, LargeCutoffStaysFinite) {
  // r = (1-p)/q > 1 and a large K: the log form must not overflow.
  const double lg = aloha::log_mean_service_time(0.1, 0.2, Cutoff::finite(2000));
  EXPECT_TRUE(std::isfinite(lg));
  EXPECT_NEAR(lg, 2000 * std::log(4.5) + std::log(1.0 / 0.1 + 1.0 / 3.5), 1e-9 * lg);
  // Large finite K approaches the unbounded limit when r < 1.
  EXPECT_NEAR(aloha::mean_service_time(0.7, 0.5, Cutoff::finite(400)),
              aloha::mean_service_time(0.7, 0.5, Cutoff::unbounded()), 1e-12);
}

TEST(OfferedLoad, Examples) {
  EXPECT_NEAR(aloha::offered_load({1, 0.01, Cutoff::finite(1), 0.5}, 1.0), 0.01, 1e-15);
  // Rounded inputs: p and q carry three and four digits.
  EXPECT_NEAR(aloha::offered_load({50, 0.3, Cutoff::unbounded(), 0.3893}, 0.613), 1.0, 0.02);
  const double direct = 0.006 * (0.387 + 0.613 * 0.02) / (0.613 * 0.02);
  EXPECT_NEAR(aloha::offered_load({50, 0.3, Cutoff::finite(1), 0.02}, 0.613), direct, 1e-12);
  EXPECT_NEAR(direct, 0.1955, 2e-4);
}

TEST(OfferedLoad, MonotoneInQAndK) {
  const double p = oracle::p_L(0.1);
  for (const long k : {1L, 2L, 4L, 8L}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 100; ++i) {
      const double q = i / 100.0;
      const double rho = aloha::offered_load({10, 0.1, Cutoff::finite(k), q}, p);
      EXPECT_LT(rho, prev);
      prev = rho;
    }
  }
  for (int i = 1; i < 100; ++i) {
    const double q = i / 100.0;
    double prev = 0.0;
    for (const long k : {1L, 2L, 3L, 4L, 8L, 16L}) {
      const double rho = aloha::offered_load({10, 0.1, Cutoff::finite(k), q}, p);
      EXPECT_GE(rho, prev * (1 - 1e-14));
      prev = rho;
    }
    if (p + q > 1.0) {
      EXPECT_GE(aloha::offered_load({10, 0.1, Cutoff::unbounded(), q}, p), prev * (1 - 1e-12));
    }
  }
}

TEST(StablePoints, Examples) {
  const auto edge = aloha::stable_points(oracle::kInvE);
  EXPECT_NEAR(edge.p_L, oracle::kInvE, 1e-8);
  EXPECT_NEAR(edge.p_S, oracle::kInvE, 1e-8);
  const auto sp = aloha::stable_points(0.3);
  EXPECT_NEAR(sp.p_L, 0.613, 5e-4);
  EXPECT_NEAR(sp.p_S, 0.1684, 5e-5);
  EXPECT_NEAR(sp.p_L, oracle::p_L(0.3), 1e-14);
  EXPECT_NEAR(sp.p_S, oracle::p_S(0.3), 1e-14);
  const auto zero = aloha::stable_points(0.0);
  EXPECT_TRUE(zero.defined);
  EXPECT_TRUE(zero.degenerate);
  EXPECT_EQ(zero.p_L, 1.0);
  EXPECT_FALSE(aloha::stable_points(0.4).defined);
  EXPECT_THROW(aloha::stable_points(-0.1), std::domain_error);
}

TEST(StablePoints, ResidualAndOrderingRandom) {
  oracle::Lcg rng{11};
  for (int i = 0; i < 200; ++i) {
    double rate = 0.0;
    while (rate == 0.0) rate = rng.uniform() * oracle::kInvE;
    const auto sp = aloha::stable_points(rate);
    ASSERT_TRUE(sp.defined);
    EXPECT_LE(std::abs(sp.p_L - std::exp(-rate / sp.p_L)), 1e-10);
    EXPECT_LE(std::abs(sp.p_S - std::exp(-rate / sp.p_S)), 1e-10);
    EXPECT_LE(sp.p_S, oracle::kInvE);
    EXPECT_GE(sp.p_L, oracle::kInvE);
    EXPECT_NEAR(sp.p_L, oracle::p_L(rate), 1e-9);
  }
}

TEST(AttemptRate, Examples) {
  EXPECT_NEAR(aloha::attempt_rate(oracle::kInvE, oracle::kInvE), 1.0, 1e-15);
  EXPECT_EQ(aloha::attempt_rate(0.0, 1.0), 0.0);
  const double pl = oracle::p_L(0.3);
  EXPECT_NEAR(aloha::attempt_rate(0.3, pl), -std::log(pl), 1e-12);
  EXPECT_NEAR(aloha::attempt_rate(0.3, 0.613), 0.4894, 1e-3);
  EXPECT_NEAR(aloha::throughput_of_attempt_rate(1.0), oracle::kInvE, 1e-15);
  EXPECT_EQ(aloha::throughput_of_attempt_rate(0.0), 0.0);
  EXPECT_NEAR(aloha::throughput_of_attempt_rate(-std::log(pl)), 0.3, 1e-12);
}

TEST(Dynamics, SuccessMapExamples) {
  EXPECT_NEAR(aloha::success_map(oracle::kInvE, oracle::kInvE), oracle::kInvE, 1e-15);
  EXPECT_NEAR(aloha::success_map(0.9, 0.3), std::exp(-1.0 / 3.0), 1e-15);
  EXPECT_NEAR(aloha::success_map(0.1, 0.3), std::exp(-3.0), 1e-15);
  EXPECT_LT(aloha::success_map(0.1, 0.3), 0.1);
}

TEST(Dynamics, IterateExamples) {
  auto r = aloha::iterate_dynamics(0.5, 0.1, 10000, 1e-12);
  EXPECT_EQ(r.verdict, aloha::DynamicsVerdict::ConvergedToPL);
  EXPECT_NEAR(r.trajectory.back(), oracle::p_L(0.1), 1e-11);
  EXPECT_NEAR(r.trajectory.back(), 0.8942, 1e-4);

  const double pl = aloha::stable_points(0.2).p_L;
  r = aloha::iterate_dynamics(pl, 0.2, 100, 1e-12);
  EXPECT_EQ(r.verdict, aloha::DynamicsVerdict::ConvergedToPL);
  EXPECT_EQ(r.steps(), 0u);

  r = aloha::iterate_dynamics(0.10, 0.3, 100, 1e-12);
  EXPECT_EQ(r.verdict, aloha::DynamicsVerdict::DivergedBelowPS);

  EXPECT_THROW(aloha::iterate_dynamics(0.0, 0.3, 10, 1e-9), std::domain_error);
}

TEST(Dynamics, TrajectoryMonotonicity) {
  oracle::Lcg rng{5};
  for (const double rate : {0.05, 0.1, 0.2, 0.3, 0.35}) {
    const auto sp = aloha::stable_points(rate);
    for (int t = 0; t < 30; ++t) {
      double mid = sp.p_S + (sp.p_L - sp.p_S) * (0.01 + 0.98 * rng.uniform());
      double high = sp.p_L + (1.0 - sp.p_L) * (0.01 + 0.99 * rng.uniform());
      double low = sp.p_S * (0.01 + 0.98 * rng.uniform());
      for (int s = 0; s < 20; ++s) {
        const double a = aloha::success_map(mid, rate);
        const double b = aloha::success_map(high, rate);
        const double c = aloha::success_map(low, rate);
        if (std::abs(mid - sp.p_L) > 1e-12) {
          EXPECT_GT(a, mid);
        }
        if (std::abs(high - sp.p_L) > 1e-12) {
          EXPECT_LT(b, high);
        }
        if (c > 0.0) {
          EXPECT_LT(c, low);
        }
        mid = a;
        high = b;
        low = c;
      }
    }
  }
}

TEST(SaturatedMap, Examples) {
  for (const double p : {0.1, 0.4, 0.9}) {
    EXPECT_NEAR(aloha::saturated_map(p, 50, 0.1, Cutoff::finite(1)), std::exp(-50 * 0.1 / (1 - p + p * 0.1)), 1e-15);
  }
  EXPECT_EQ(aloha::saturated_map(0.3, 50, 0.5, Cutoff::unbounded()), 1.0);
  const double fixed = oracle::saturated_p(50, 0.8, 0);
  EXPECT_NEAR(aloha::saturated_map(fixed, 50, 0.8, Cutoff::unbounded()), fixed, 1e-12);
  EXPECT_NEAR(fixed, 0.2053, 2e-4);
}

TEST(SaturatedMap, AlternatesAroundFixedPoint) {
  oracle::Lcg rng{9};
  for (const long k : {0L, 1L, 4L}) {
    const Cutoff c = k == 0 ? Cutoff::unbounded() : Cutoff::finite(k);
    for (int t = 0; t < 200; ++t) {
      const double q = k == 0 ? 0.5 + 0.45 * rng.uniform() : 0.02 + 0.3 * rng.uniform();
      const double a = 1e-3 + (1.0 - 1e-3) * rng.uniform();
      const double b = 1e-3 + (1.0 - 1e-3) * rng.uniform();
      if (a == b) continue;
      const double fa = aloha::saturated_map(a, 50, q, c);
      const double fb = aloha::saturated_map(b, 50, q, c);
      // The map is non-increasing, so p_{t-1} < p_t implies p_t >= p_{t+1}.
      if (a < b) {
        EXPECT_GE(fa, fb);
      } else {
        EXPECT_LE(fa, fb);
      }
    }
  }
}

TEST(SaturatedFixedPoint, MatchesOracle) {
  for (const long k : {0L, 1L, 2L, 4L, 8L, 16L}) {
    const Cutoff c = k == 0 ? Cutoff::unbounded() : Cutoff::finite(k);
    for (const double q : {0.05, 0.1, 0.3, 0.5, 0.8, 0.95}) {
      const auto sp = aloha::saturated_fixed_point(50, q, c);
      const double ref = oracle::saturated_p(50, q, k);
      EXPECT_TRUE(sp.converged) << k << " " << q;
      EXPECT_LE(sp.residual, 1e-10);
      EXPECT_NEAR(sp.p_A, ref, 1e-12 + 1e-10 * ref) << "K=" << k << " q=" << q;
    }
  }
}

TEST(SaturatedFixedPoint, Examples) {
  const auto geo = aloha::saturated_fixed_point(50, 0.1, Cutoff::finite(1));
  EXPECT_NEAR(geo.p_A, std::exp(-5.0), 0.05 * std::exp(-5.0));
  const auto exp8 = aloha::saturated_fixed_point(50, 0.8, Cutoff::unbounded());
  EXPECT_NEAR(exp8.p_A, 0.2053, 2e-4);
  EXPECT_NEAR(aloha::saturated_fixed_point(1'000'000, 0.8, Cutoff::unbounded()).p_A, 0.2, 1e-4);
  EXPECT_THROW(aloha::saturated_fixed_point(1, 0.5, Cutoff::finite(1)), std::domain_error);
  EXPECT_THROW(aloha::saturated_fixed_point(10, 1.0, Cutoff::finite(1)), std::domain_error);
}

TEST(SaturatedFixedPoint, MonotoneInCutoffAndVanishing) {
  double prev = 0.0;
  for (const long k : {2L, 4L, 8L, 16L}) {
    const double p = aloha::saturated_fixed_point(50, 0.3, Cutoff::finite(k)).p_A;
    EXPECT_GT(p, prev);
    prev = p;
  }
  EXPECT_LT(aloha::saturated_fixed_point(100'000, 0.3, Cutoff::finite(4)).p_A, 1e-3);
}

TEST(ClosedForms, Values) {
  EXPECT_NEAR(aloha::p_A_closed_form_geo(50, 0.1), std::exp(-5.0), 1e-18);
  EXPECT_NEAR(aloha::p_A_closed_form_exp(50, 0.8), 50 * 0.2 / (50 + 0.8 * std::log(0.2)), 1e-15);
  EXPECT_NEAR(aloha::p_A_closed_form_exp(50, 0.8), 0.2053, 1e-4);
  EXPECT_NEAR(aloha::p_A_closed_form_exp(50, 1e-9), 1.0, 1e-8);
  EXPECT_THROW(aloha::p_A_closed_form_geo(1, 0.1), std::domain_error);
}

TEST(ClosedForms, ExponentialAgreesWithFixedPoint) {
  for (const double q : {0.5, 0.8}) {
    EXPECT_NEAR(aloha::saturated_fixed_point(50, q, Cutoff::unbounded()).p_A, aloha::p_A_closed_form_exp(50, q), 0.01);
  }
  // Geometric: the closed form is accurate once (1-q) p_A << 1.
  EXPECT_NEAR(aloha::saturated_fixed_point(50, 0.1, Cutoff::finite(1)).p_A / aloha::p_A_closed_form_geo(50, 0.1), 1.0,
              0.05);
}

TEST(Cutoffs, CodeHelper) { EXPECT_EQ(k_code(Cutoff::finite(3)), 3); }
