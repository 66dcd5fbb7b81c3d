// Simulates one network across a range of retransmission factors and compares
// the measured success probability with p_L and the throughput with the model.
#include <cstdio>
#include <string>
#include <vector>

#include "aloha/regions.hpp"
#include "aloha/simulator.hpp"

int main() {
  const long n = 10;
  const double rate = 0.1;
  const auto cutoff = aloha::Cutoff::finite(2);
  const std::vector<double> qs = {0.05, 0.1, 0.2, 0.3, 0.5};

  aloha::sim::SimConfig base;
  base.network = {n, rate, cutoff, qs.front()};
  base.measure_slots = 200'000;

  std::printf("%-6s %-12s %-10s %-10s %-10s %-10s\n", "q", "class", "p_L", "p_hat", "thr_model", "thr_hat");
  for (const auto& row : aloha::sim::sweep(aloha::sim::sweep_configs(base, qs))) {
    const aloha::NetworkConfig cfg{n, rate, cutoff, row.q};
    const auto report = aloha::classify(cfg);
    std::printf("%-6.3f %-12s %-10.4f %-10.4f %-10.4f %-10.4f\n", row.q,
                std::string(aloha::to_string(report.classification)).c_str(), report.points.p_L, row.metrics.p_hat,
                aloha::network_throughput(cfg, report), row.metrics.throughput_hat);
  }
  return 0;
}
