#pragma once

// Table builders behind each subcommand of aloha_lab.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aloha/regions.hpp"
#include "aloha/simulator.hpp"
#include "aloha/steady_state.hpp"
#include "aloha/validation.hpp"
#include "report_io.hpp"

namespace aloha::cli {

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  std::size_t points = 1;
  bool log_spaced = false;

  std::vector<double> values() const { return numerics::grid(start, stop, points, log_spaced); }
};

/// "start:stop:points[:log]"
inline GridSpec parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = text.find(':', pos);
    parts.push_back(text.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() < 3 || parts.size() > 4) throw std::invalid_argument("q-grid must be start:stop:points[:log]");
  GridSpec g;
  try {
    std::size_t used = 0;
    g.start = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    g.stop = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    const long long pts = std::stoll(parts[2], &used);
    if (used != parts[2].size() || pts < 1) throw std::invalid_argument(parts[2]);
    g.points = static_cast<std::size_t>(pts);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("q-grid '" + text + "': bad number");
  }
  if (parts.size() == 4) {
    if (parts[3] != "log" && parts[3] != "lin") throw std::invalid_argument("q-grid spacing must be 'log' or 'lin'");
    g.log_spaced = parts[3] == "log";
  }
  if (g.points > 1 && !(g.start < g.stop)) throw std::invalid_argument("q-grid needs start < stop");
  if (g.log_spaced && !(g.start > 0.0)) throw std::invalid_argument("log q-grid needs start > 0");
  return g;
}

inline const std::vector<std::string>& analyze_columns() {
  static const std::vector<std::string> c = {
      "n",          "rate",         "K",            "q",          "p_L",          "p_S",
      "G_at_p_L",   "q_lower",      "q_upper",      "q_upper_star", "pseudo_lower", "pseudo_upper",
      "classification", "offered_load", "throughput", "p_A"};
  return c;
}

inline const std::vector<std::string>& regions_columns() {
  static const std::vector<std::string> c = {
      "n",           "rate",        "K",          "p_L",          "p_S",         "q_lower",
      "q_lower_approx", "q_upper", "q_upper_star", "q_upper_star_approx", "pseudo_lower", "pseudo_upper",
      "absolute_empty", "max_rate", "max_rate_q",  "max_rate_method", "max_rate_approx",
      "max_rate_asymptotic"};
  return c;
}

inline const std::vector<std::string>& sweep_columns(bool simulated) {
  static const std::vector<std::string> base = {"q", "classification", "rho_model", "p_model", "throughput_model"};
  static const std::vector<std::string> sim = [] {
    auto c = base;
    for (const char* s : {"p_hat", "p_hat_stderr", "G_hat", "throughput_hat", "rho_hat"}) c.emplace_back(s);
    return c;
  }();
  return simulated ? sim : base;
}

inline const std::vector<std::string>& simulate_columns() {
  static const std::vector<std::string> c = {
      "n",       "rate",      "K",          "q",           "seed",          "saturated", "warmup_slots",
      "slots",   "attempts",  "successes",  "collisions",  "idle_slots",    "arrivals",  "final_backlog",
      "p_hat",   "p_hat_stderr", "G_hat",   "throughput_hat", "rho_hat",    "p_model",   "rho_model"};
  return c;
}

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> c = {"slot", "queue_length"};
  return c;
}

inline const std::vector<std::string>& validate_columns() {
  static const std::vector<std::string> c = {"suite", "criterion", "check", "comparison", "value",
                                             "target", "tolerance", "delta", "pass"};
  return c;
}

namespace detail {

inline std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

inline std::optional<double> model_offered_load(const NetworkConfig& cfg, double p) {
  try {
    return offered_load(cfg, p);
  } catch (const SingularityError&) {
    return std::numeric_limits<double>::infinity();
  }
}

// p_L where the network settles at the desired point, p_A where it saturates.
inline std::optional<double> model_success(const StabilityReport& r) {
  if (r.saturated) return r.saturated->p_A;
  if (r.points.defined) return r.points.p_L;
  return std::nullopt;
}

inline void require_stable(double rate) {
  if (!stable_points(rate).defined) throw std::domain_error("no stable points: rate exceeds 1/e");
}

}  // namespace detail

inline io::Table analyze(const NetworkConfig& cfg) {
  cfg.validate();
  detail::require_stable(cfg.aggregate_rate);
  const StabilityReport r = classify(cfg);
  io::Table t{"analyze", analyze_columns(), {}, nullptr};
  std::optional<double> p_A;
  if (r.classification == Classification::Pseudo || r.classification == Classification::Unstable) {
    if (r.saturated) p_A = r.saturated->p_A;
  }
  t.add_row({static_cast<std::int64_t>(cfg.n), cfg.aggregate_rate, cfg.cutoff.to_string(), cfg.q, r.points.p_L,
             r.points.p_S, attempt_rate(cfg.aggregate_rate, r.points.p_L), io::cell(r.q_lower), io::cell(r.q_upper),
             io::cell(r.q_upper_star), io::cell(r.pseudo_lower), io::cell(r.pseudo_upper),
             std::string(to_string(r.classification)),
             r.offered_load ? io::Cell{*r.offered_load} : io::Cell{std::numeric_limits<double>::infinity()},
             io::cell(r.predicted_throughput), io::cell(p_A)});
  return t;
}

inline io::Table regions(long n, double rate, Cutoff cutoff) {
  NetworkConfig{n, rate, cutoff, 0.5}.validate();
  detail::require_stable(rate);
  const StablePoints sp = stable_points(rate);
  io::Table t{"regions", regions_columns(), {}, nullptr};

  std::optional<double> lower_approx, upper_star_approx;
  if (!cutoff.is_unbounded()) {
    if (!cutoff.is_geometric()) lower_approx = q_lower_approx(n, rate, cutoff);
    upper_star_approx = q_upper_star_approx(n, rate, cutoff);
  }
  std::optional<double> pseudo_lo, pseudo_hi;
  if (cutoff.is_unbounded()) {
    const PseudoRegion pr = pseudo_region(rate);
    pseudo_lo = pr.lower;
    pseudo_hi = pr.upper;
  }
  const double ql = q_lower(n, rate, cutoff);
  const double qu = q_upper(n, rate);

  io::Cell max_rate, max_q, max_method, max_approx, max_asym;
  if (n >= 2) {
    const auto m = max_stable_throughput(n, cutoff, StabilityMode::Absolute);
    max_rate = m.lambda_max;
    max_q = m.q_at_max;
    max_method = std::string(to_string(m.method));
    if (auto a = max_stable_throughput_approx(n, cutoff, StabilityMode::Absolute)) max_approx = a->lambda_max;
    if (cutoff.is_unbounded()) max_asym = max_stable_throughput(n, cutoff, StabilityMode::Asymptotic).lambda_max;
  }
  t.add_row({static_cast<std::int64_t>(n), rate, cutoff.to_string(), sp.p_L, sp.p_S, ql, io::cell(lower_approx), qu,
             q_upper_star(n, rate, cutoff), io::cell(upper_star_approx), io::cell(pseudo_lo),
             io::cell(pseudo_hi), ql > qu, max_rate, max_q, max_method, max_approx, max_asym});
  return t;
}

struct SimSettings {
  std::uint64_t seed = sim::kDefaultSeed;
  std::uint64_t warmup = sim::kDefaultWarmupSlots;
  std::uint64_t slots = sim::kDefaultMeasureSlots;
  bool saturated = false;
};

inline sim::SimConfig make_sim(const NetworkConfig& cfg, const SimSettings& s) {
  sim::SimConfig c;
  c.network = cfg;
  c.seed = s.seed;
  c.warmup_slots = s.warmup;
  c.measure_slots = s.slots;
  c.saturated = s.saturated;
  return c;
}

inline io::Table sweep(const NetworkConfig& base, const std::vector<double>& qs, std::optional<SimSettings> sim_settings) {
  io::Table t{"sweep", sweep_columns(sim_settings.has_value()), {}, nullptr};
  std::vector<NetworkConfig> cfgs;
  for (const double q : qs) {
    NetworkConfig c = base;
    c.q = q;
    c.validate();
    cfgs.push_back(c);
  }
  if (!sim_settings) detail::require_stable(base.aggregate_rate);
  std::vector<sim::SweepRow> simulated;
  if (sim_settings) simulated = sim::sweep(sim::sweep_configs(make_sim(base, *sim_settings), qs));

  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const NetworkConfig& c = cfgs[i];
    std::vector<io::Cell> row{c.q};
    if (stable_points(c.aggregate_rate).defined) {
      const StabilityReport r = classify(c);
      row.push_back(std::string(to_string(r.classification)));
      row.push_back(io::cell(detail::model_offered_load(c, r.points.p_L)));
      row.push_back(io::cell(detail::model_success(r)));
      row.push_back(io::cell(r.predicted_throughput));
    } else {
      row.insert(row.end(), {std::string("unstable"), io::Cell{}, io::Cell{}, io::Cell{}});
    }
    if (sim_settings) {
      const auto& m = simulated[i].metrics;
      row.insert(row.end(), {m.p_hat, m.p_hat_stderr, m.G_hat, m.throughput_hat, m.rho_hat});
    }
    t.add_row(std::move(row));
  }
  return t;
}

inline io::Table simulate(const NetworkConfig& cfg, const SimSettings& s) {
  const auto m = sim::run(make_sim(cfg, s));
  io::Cell p_model, rho_model;
  if (stable_points(cfg.aggregate_rate).defined) {
    const StabilityReport r = classify(cfg);
    p_model = io::cell(s.saturated ? std::optional<double>(saturated_fixed_point(cfg.n, cfg.q, cfg.cutoff).p_A)
                                   : detail::model_success(r));
    rho_model = io::cell(detail::model_offered_load(cfg, r.points.p_L));
  }
  io::Table t{"simulate", simulate_columns(), {}, nullptr};
  using detail::i64;
  t.add_row({static_cast<std::int64_t>(cfg.n), cfg.aggregate_rate, cfg.cutoff.to_string(), cfg.q, i64(s.seed),
             s.saturated, i64(s.warmup), i64(m.slots), i64(m.attempts), i64(m.successes), i64(m.collisions),
             i64(m.idle_slots), i64(m.arrivals), i64(m.final_backlog), m.p_hat, m.p_hat_stderr, m.G_hat,
             m.throughput_hat, m.rho_hat, p_model, rho_model});
  return t;
}

inline io::Table trace(const NetworkConfig& cfg, const SimSettings& s, std::size_t node) {
  auto c = make_sim(cfg, s);
  c.trace_node = node;
  const auto m = sim::run(c);
  io::Table t{"trace", trace_columns(), {}, nullptr};
  t.rows.reserve(m.queue_trace.size());
  std::uint64_t max_queue = 0;
  double sum = 0.0;
  for (const auto& p : m.queue_trace) {
    t.rows.push_back({detail::i64(p.slot), detail::i64(p.queue_length)});
    max_queue = std::max(max_queue, p.queue_length);
    sum += static_cast<double>(p.queue_length);
  }
  io::Json summary;
  summary["node"] = node;
  summary["departures"] = m.capture->departures;
  summary["longest_idle_stretch"] = m.capture->longest_idle_stretch;
  summary["longest_capture_run"] = m.capture->longest_capture_run;
  summary["max_queue_length"] = max_queue;
  summary["mean_queue_length"] = m.queue_trace.empty() ? 0.0 : sum / static_cast<double>(m.queue_trace.size());
  t.summary = std::move(summary);
  return t;
}

struct ValidationRun {
  io::Table table;
  std::vector<std::string> lines;
  bool pass = true;
};

inline ValidationRun validate(const std::vector<std::string>& suite_names, std::uint64_t seed) {
  if (suite_names.empty()) throw std::invalid_argument("validate: at least one suite is required");
  std::vector<const validation::Suite*> chosen;
  for (const auto& name : suite_names) {
    if (name == "all") {
      for (const auto& s : validation::suites()) chosen.push_back(&s);
    } else {
      chosen.push_back(&validation::find_suite(name));
    }
  }
  ValidationRun out{{"validate", validate_columns(), {}, nullptr}, {}, true};
  const validation::Options opts{seed};
  for (const auto* s : chosen) {
    for (const auto& c : s->run(opts)) {
      out.lines.push_back(validation::format_check(s->name, c));
      out.pass = out.pass && c.pass;
      out.table.add_row({s->name, static_cast<std::int64_t>(c.criterion), c.name,
                         std::string(validation::to_string(c.comparison)), c.value, c.target, c.tolerance, c.delta,
                         c.pass});
    }
  }
  return out;
}

}  // namespace aloha::cli
