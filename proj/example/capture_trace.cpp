// Follows one node of an overloaded exponential-backoff network and reports
// how long it waits between departures and how long it holds the channel.
#include <algorithm>
#include <cstdio>

#include "aloha/simulator.hpp"

int main() {
  aloha::sim::SimConfig cfg;
  cfg.network = {50, 0.3, aloha::Cutoff::unbounded(), 0.8};
  cfg.measure_slots = 1'000'000;
  cfg.trace_node = 0;
  const auto m = aloha::sim::run(cfg);

  std::uint64_t peak = 0;
  for (const auto& point : m.queue_trace) peak = std::max(peak, point.queue_length);
  std::printf("network throughput        %.4f\n", m.throughput_hat);
  std::printf("node 0 departures         %llu\n", static_cast<unsigned long long>(m.capture->departures));
  std::printf("longest idle stretch      %llu slots\n",
              static_cast<unsigned long long>(m.capture->longest_idle_stretch));
  std::printf("longest capture run       %llu departures\n",
              static_cast<unsigned long long>(m.capture->longest_capture_run));
  std::printf("peak queue length         %llu\n", static_cast<unsigned long long>(peak));
  return 0;
}
