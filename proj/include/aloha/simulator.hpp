#pragma once

// Slot-level simulation of n buffered nodes running slotted Aloha with
// K-exponential backoff on one collision channel.
//
// Slot order: (1) Bernoulli(λ) arrivals, early-arrival model, so a packet that
// lands in an empty queue is a fresh phase-0 HOL and transmits this slot;
// (2) every busy node transmits its HOL with probability q^phase; (3) a lone
// transmitter succeeds and its next packet becomes a fresh phase-0 HOL, while
// two or more collide and each colliding HOL moves to phase min(phase+1, K).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aloha/steady_state.hpp"

namespace aloha::sim {

inline constexpr std::uint64_t kDefaultSeed = 20080422;
inline constexpr std::uint64_t kDefaultWarmupSlots = 100'000;
inline constexpr std::uint64_t kDefaultMeasureSlots = 1'000'000;
inline constexpr std::size_t kBatches = 32;

/// splitmix64 finaliser; used to derive independent seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seedable 64-bit stream with a portable uniform in [0, 1).
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
    engine_.seed(seq);
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Failures before the first success of Bernoulli(prob) trials.
  std::uint64_t geometric(double prob) {
    if (prob >= 1.0) return 0;
    const double u = 1.0 - uniform();  // (0, 1]
    const double k = std::floor(std::log(u) / std::log1p(-prob));
    return k >= 9.0e18 ? std::numeric_limits<std::uint64_t>::max() / 2 : static_cast<std::uint64_t>(k);
  }

 private:
  std::mt19937_64 engine_;
};

struct NodeState {
  std::uint64_t queue_length = 0;  // packets, HOL included
  std::uint32_t hol_phase = 0;     // meaningful only when queue_length >= 1
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t busy_slots = 0;
};

enum class SlotKind { Idle, Success, Collision };

struct SlotOutcome {
  SlotKind kind = SlotKind::Idle;
  std::size_t winner = 0;  // valid for Success
  std::vector<std::size_t> transmitters;
};

/// The n-node system; one call to step() advances one slot.
class Network {
 public:
  Network(const NetworkConfig& config, std::uint64_t seed, bool saturated)
      : config_(config), saturated_(saturated), arrival_stream_(seed, 0) {
    config_.validate();
    const auto n = static_cast<std::size_t>(config_.n);
    nodes_.resize(n);
    busy_pos_.assign(n, kNotBusy);
    streams_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) streams_.emplace_back(seed, i + 1);
    tx_prob_.push_back(1.0);
    lambda_ = config_.per_node_rate();
    if (saturated_) {
      for (std::size_t i = 0; i < n; ++i) {
        nodes_[i].queue_length = 1;
        mark_busy(i);
      }
    } else if (lambda_ > 0.0) {
      next_arrival_ = arrival_stream_.geometric(lambda_);
    } else {
      next_arrival_ = std::numeric_limits<std::uint64_t>::max();
    }
  }

  std::span<const NodeState> nodes() const { return nodes_; }
  std::span<const std::size_t> busy_nodes() const { return busy_; }
  std::uint64_t slot() const { return slot_; }
  std::uint64_t total_arrivals() const { return arrivals_; }
  std::uint64_t total_departures() const { return departures_; }
  std::uint64_t backlog() const {
    std::uint64_t s = 0;
    for (const auto& nd : nodes_) s += nd.queue_length;
    return s;
  }

  /// Occupancy by HOL phase of busy nodes during the last step (before resolution).
  std::span<const std::uint64_t> last_phase_counts() const { return phase_counts_; }

  /// Sets the queue of node i directly; used to build test scenarios.
  void set_node(std::size_t i, std::uint64_t queue_length, std::uint32_t phase) {
    NodeState& nd = nodes_.at(i);
    nd.queue_length = queue_length;
    nd.hol_phase = queue_length > 0 ? clamp_phase(phase) : 0;
    if (queue_length > 0) {
      mark_busy(i);
    } else {
      unmark_busy(i);
    }
  }

  SlotOutcome step() {
    SlotOutcome out;
    step_into(out);
    return out;
  }

  void step_into(SlotOutcome& out) {
    out.transmitters.clear();
    if (!saturated_) deliver_arrivals();

    std::fill(phase_counts_.begin(), phase_counts_.end(), 0);
    for (const std::size_t i : busy_) {
      NodeState& nd = nodes_[i];
      ++nd.busy_slots;
      if (nd.hol_phase >= phase_counts_.size()) phase_counts_.resize(nd.hol_phase + 1, 0);
      ++phase_counts_[nd.hol_phase];
      const bool transmit = nd.hol_phase == 0 || streams_[i].uniform() < transmit_probability(nd.hol_phase);
      if (transmit) {
        ++nd.attempts;
        out.transmitters.push_back(i);
      }
    }

    if (out.transmitters.empty()) {
      out.kind = SlotKind::Idle;
    } else if (out.transmitters.size() == 1) {
      out.kind = SlotKind::Success;
      out.winner = out.transmitters.front();
      NodeState& nd = nodes_[out.winner];
      ++nd.successes;
      ++departures_;
      nd.hol_phase = 0;
      if (!saturated_ && --nd.queue_length == 0) unmark_busy(out.winner);
    } else {
      out.kind = SlotKind::Collision;
      for (const std::size_t i : out.transmitters) nodes_[i].hol_phase = clamp_phase(nodes_[i].hol_phase + 1);
    }
    ++slot_;
  }

 private:
  static constexpr std::size_t kNotBusy = std::numeric_limits<std::size_t>::max();

  std::uint32_t clamp_phase(std::uint64_t phase) const {
    if (!config_.cutoff.is_unbounded()) phase = std::min<std::uint64_t>(phase, config_.cutoff.value());
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(phase, std::numeric_limits<std::uint32_t>::max()));
  }

  double transmit_probability(std::uint32_t phase) {
    while (tx_prob_.size() <= phase) tx_prob_.push_back(tx_prob_.back() * config_.q);
    return tx_prob_[phase];
  }

  void mark_busy(std::size_t i) {
    if (busy_pos_[i] != kNotBusy) return;
    busy_pos_[i] = busy_.size();
    busy_.push_back(i);
  }

  void unmark_busy(std::size_t i) {
    const std::size_t pos = busy_pos_[i];
    if (pos == kNotBusy) return;
    const std::size_t last = busy_.back();
    busy_[pos] = last;
    busy_pos_[last] = pos;
    busy_.pop_back();
    busy_pos_[i] = kNotBusy;
  }

  // Arrivals are Bernoulli trials over the flattened (slot, node) sequence;
  // geometric skips jump straight to the next success.
  void deliver_arrivals() {
    const auto n = static_cast<std::uint64_t>(nodes_.size());
    const std::uint64_t begin = slot_ * n;
    const std::uint64_t end = begin + n;
    while (next_arrival_ < end) {
      const auto i = static_cast<std::size_t>(next_arrival_ - begin);
      NodeState& nd = nodes_[i];
      if (nd.queue_length++ == 0) {
        nd.hol_phase = 0;
        mark_busy(i);
      }
      ++arrivals_;
      next_arrival_ += 1 + arrival_stream_.geometric(lambda_);
    }
  }

  NetworkConfig config_;
  bool saturated_;
  double lambda_ = 0.0;
  std::vector<NodeState> nodes_;
  std::vector<std::size_t> busy_;
  std::vector<std::size_t> busy_pos_;
  std::vector<RandomStream> streams_;
  RandomStream arrival_stream_;
  std::vector<double> tx_prob_;
  std::vector<std::uint64_t> phase_counts_ = std::vector<std::uint64_t>(1, 0);
  std::uint64_t next_arrival_ = 0;
  std::uint64_t slot_ = 0;
  std::uint64_t arrivals_ = 0;
  std::uint64_t departures_ = 0;
};

struct SimConfig {
  NetworkConfig network;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t warmup_slots = kDefaultWarmupSlots;
  std::uint64_t measure_slots = kDefaultMeasureSlots;
  bool saturated = false;  // every queue permanently non-empty
  std::optional<std::size_t> trace_node;

  void validate() const {
    network.validate();
    if (measure_slots < 1) throw std::invalid_argument("measure_slots must be >= 1");
    if (trace_node && *trace_node >= static_cast<std::size_t>(network.n)) {
      throw std::out_of_range("trace node " + std::to_string(*trace_node) + " out of range for n = " +
                              std::to_string(network.n));
    }
  }
};

struct TracePoint {
  std::uint64_t slot = 0;
  std::uint64_t queue_length = 0;
  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

/// Capture statistics of the traced node over the measurement window.
struct CaptureStats {
  std::uint64_t departures = 0;
  // Longest run of slots between two of the node's departures (or window edge).
  std::uint64_t longest_idle_stretch = 0;
  // Longest run of channel successes that all belong to the traced node.
  std::uint64_t longest_capture_run = 0;
  friend bool operator==(const CaptureStats&, const CaptureStats&) = default;
};

struct SimMetrics {
  std::uint64_t slots = 0;
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t busy_node_slots = 0;
  std::uint64_t arrivals = 0;  // during measurement
  std::uint64_t collisions = 0;
  std::uint64_t idle_slots = 0;
  // Whole-run bookkeeping (warmup included) for conservation checks.
  std::uint64_t total_arrivals = 0;
  std::uint64_t total_departures = 0;
  std::uint64_t final_backlog = 0;

  double p_hat = 0.0;           // successes / attempts
  double G_hat = 0.0;           // attempts / slot
  double throughput_hat = 0.0;  // successes / slot
  double rho_hat = 0.0;         // busy node-slots / (n * slots)
  double p_hat_stderr = 0.0;    // batch-means standard error

  // Busy node-slots spent with the HOL in each phase.
  std::vector<std::uint64_t> phase_occupancy;
  std::vector<TracePoint> queue_trace;
  std::optional<CaptureStats> capture;

  /// Empirical f_i: fraction of busy node-slots in phase i.
  std::vector<double> empirical_phase_distribution() const {
    std::vector<double> out(phase_occupancy.size(), 0.0);
    if (busy_node_slots == 0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<double>(phase_occupancy[i]) / static_cast<double>(busy_node_slots);
    }
    return out;
  }

  friend bool operator==(const SimMetrics&, const SimMetrics&) = default;
};

inline SimMetrics run(const SimConfig& config) {
  config.validate();
  Network net(config.network, config.seed, config.saturated);
  SlotOutcome outcome;
  for (std::uint64_t t = 0; t < config.warmup_slots; ++t) net.step_into(outcome);

  SimMetrics m;
  m.slots = config.measure_slots;
  const std::uint64_t arrivals_before = net.total_arrivals();
  const std::size_t batches = std::min<std::uint64_t>(kBatches, config.measure_slots);
  std::vector<std::uint64_t> batch_attempts(batches, 0);
  std::vector<std::uint64_t> batch_successes(batches, 0);

  const bool tracing = config.trace_node.has_value();
  const std::size_t traced = tracing ? *config.trace_node : 0;
  CaptureStats capture;
  std::uint64_t last_departure = 0;
  std::uint64_t run_length = 0;
  if (tracing) m.queue_trace.reserve(config.measure_slots);

  for (std::uint64_t t = 0; t < config.measure_slots; ++t) {
    net.step_into(outcome);
    const std::size_t b = static_cast<std::size_t>(t * batches / config.measure_slots);
    // Busy population as seen by the slot, i.e. before departures.
    const auto phases = net.last_phase_counts();
    if (m.phase_occupancy.size() < phases.size()) m.phase_occupancy.resize(phases.size(), 0);
    for (std::size_t i = 0; i < phases.size(); ++i) {
      m.phase_occupancy[i] += phases[i];
      m.busy_node_slots += phases[i];
    }

    m.attempts += outcome.transmitters.size();
    batch_attempts[b] += outcome.transmitters.size();
    switch (outcome.kind) {
      case SlotKind::Idle: ++m.idle_slots; break;
      case SlotKind::Collision: ++m.collisions; break;
      case SlotKind::Success:
        ++m.successes;
        ++batch_successes[b];
        break;
    }

    if (tracing) {
      m.queue_trace.push_back({t, net.nodes()[traced].queue_length});
      if (outcome.kind == SlotKind::Success) {
        if (outcome.winner == traced) {
          const std::uint64_t gap = capture.departures == 0 ? t : t - last_departure - 1;
          capture.longest_idle_stretch = std::max(capture.longest_idle_stretch, gap);
          last_departure = t;
          ++capture.departures;
          capture.longest_capture_run = std::max(capture.longest_capture_run, ++run_length);
        } else {
          run_length = 0;
        }
      }
    }
  }

  if (tracing) {
    const std::uint64_t tail =
        capture.departures == 0 ? config.measure_slots : config.measure_slots - last_departure - 1;
    capture.longest_idle_stretch = std::max(capture.longest_idle_stretch, tail);
    m.capture = capture;
  }

  const double slots = static_cast<double>(m.slots);
  m.arrivals = net.total_arrivals() - arrivals_before;
  m.total_arrivals = net.total_arrivals();
  m.total_departures = net.total_departures();
  m.final_backlog = config.saturated ? 0 : net.backlog();
  m.p_hat = m.attempts == 0 ? 0.0 : static_cast<double>(m.successes) / static_cast<double>(m.attempts);
  m.G_hat = static_cast<double>(m.attempts) / slots;
  m.throughput_hat = static_cast<double>(m.successes) / slots;
  m.rho_hat = static_cast<double>(m.busy_node_slots) / (static_cast<double>(config.network.n) * slots);

  // Batch means of the ratio estimator.
  std::vector<double> ratios;
  for (std::size_t b = 0; b < batches; ++b) {
    if (batch_attempts[b] > 0) {
      ratios.push_back(static_cast<double>(batch_successes[b]) / static_cast<double>(batch_attempts[b]));
    }
  }
  if (ratios.size() >= 2) {
    double mean = 0.0;
    for (double r : ratios) mean += r;
    mean /= static_cast<double>(ratios.size());
    double ss = 0.0;
    for (double r : ratios) ss += (r - mean) * (r - mean);
    const double k = static_cast<double>(ratios.size());
    m.p_hat_stderr = std::sqrt(ss / (k - 1.0) / k);
  }
  return m;
}

struct SweepRow {
  double q = 0.0;
  SimMetrics metrics;
};

/// One config per q value, seeds derived from base.seed and the row index.
inline std::vector<SimConfig> sweep_configs(const SimConfig& base, std::span<const double> qs) {
  std::vector<SimConfig> out;
  out.reserve(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    SimConfig c = base;
    c.network.q = qs[i];
    c.seed = mix_seed(base.seed, i);
    out.push_back(c);
  }
  return out;
}

/// Runs every config; rows come back in input order regardless of scheduling.
inline std::vector<SweepRow> sweep(const std::vector<SimConfig>& configs, unsigned threads = 0) {
  if (configs.empty()) return {};
  for (const auto& c : configs) {
    c.validate();
    const auto& first = configs.front().network;
    if (c.network.n != first.n || c.network.aggregate_rate != first.aggregate_rate ||
        !(c.network.cutoff == first.cutoff)) {
      throw std::invalid_argument("sweep: configs must share n, aggregate rate and cutoff");
    }
  }
  std::vector<SweepRow> rows(configs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(configs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      rows[i] = {configs[i].network.q, run(configs[i])};
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return rows;
}

}  // namespace aloha::sim
