// Prints the stability regions of a network for several cutoff phases.
#include <cstdio>
#include <cstdlib>

#include "aloha/regions.hpp"

int main(int argc, char** argv) {
  const long n = argc > 1 ? std::atol(argv[1]) : 50;
  const double rate = argc > 2 ? std::atof(argv[2]) : 0.3;

  const auto sp = aloha::stable_points(rate);
  if (!sp.defined) {
    std::fprintf(stderr, "rate %.4g exceeds 1/e: no stable points\n", rate);
    return 1;
  }
  std::printf("n = %ld, aggregate rate = %.4g\n", n, rate);
  std::printf("p_L = %.6f  p_S = %.6f\n", sp.p_L, sp.p_S);
  const auto pr = aloha::pseudo_region(rate);
  std::printf("pseudo region [%.4f, %.4f]\n\n", pr.lower, pr.upper);

  const double q_u = aloha::q_upper(n, rate);
  std::printf("%-5s %-10s %-10s %-10s\n", "K", "q_lower", "q_upper", "q_upper*");
  for (const auto cutoff :
       {aloha::Cutoff::finite(1), aloha::Cutoff::finite(2), aloha::Cutoff::finite(4), aloha::Cutoff::unbounded()}) {
    std::printf("%-5s %-10.4f %-10.4f %-10.4f\n", cutoff.to_string().c_str(), aloha::q_lower(n, rate, cutoff), q_u,
                aloha::q_upper_star(n, rate, cutoff));
  }

  std::printf("\nmax stable aggregate rate (absolute region)\n");
  for (const auto cutoff : {aloha::Cutoff::finite(1), aloha::Cutoff::unbounded()}) {
    const auto r = aloha::max_stable_throughput(n, cutoff, aloha::StabilityMode::Absolute);
    std::printf("K = %-4s %.6f at q = %.6f\n", cutoff.to_string().c_str(), r.lambda_max, r.q_at_max);
  }
  return 0;
}
