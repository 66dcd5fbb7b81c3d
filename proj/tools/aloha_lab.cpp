// aloha_lab: stability analysis and slot-level simulation of slotted Aloha
// with K-exponential backoff.
//
// Exit codes: 0 ok, 1 validation failure, 2 usage or parameter error.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ALOHA_LAB_SEED")) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw std::invalid_argument(std::string("ALOHA_LAB_SEED is not an unsigned integer: ") + env);
  }
  return aloha::sim::kDefaultSeed;
}

std::string column_help(const std::vector<std::string>& columns) {
  std::string out = "CSV columns: ";
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? ", " : "") + columns[i];
  return out;
}

struct Args {
  long n = 0;
  double rate = 0.0;
  std::string k = "inf";
  std::optional<double> q;
  std::string q_grid;
  std::uint64_t slots = aloha::sim::kDefaultMeasureSlots;
  std::uint64_t warmup = aloha::sim::kDefaultWarmupSlots;
  std::optional<std::uint64_t> seed;
  bool saturated = false;
  bool simulate = false;
  std::size_t trace_node = 0;
  std::string format = "csv";
  std::string out;
  std::vector<std::string> suites;
  bool list = false;

  aloha::NetworkConfig network(double q_value) const { return {n, rate, aloha::Cutoff::parse(k), q_value}; }
  aloha::io::Format fmt() const { return format == "json" ? aloha::io::Format::Json : aloha::io::Format::Csv; }
  aloha::cli::SimSettings sim() const { return {seed.value_or(default_seed()), warmup, slots, saturated}; }
};

void add_network(CLI::App* cmd, Args& a, bool needs_q) {
  cmd->add_option("--n", a.n, "Number of nodes")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--rate", a.rate, "Aggregate arrival rate (packets/slot)")->required()->check(CLI::NonNegativeNumber);
  cmd->add_option("--K", a.k, "Backoff cutoff phase: positive integer or 'inf'")->capture_default_str();
  if (needs_q) cmd->add_option("--q", a.q, "Retransmission factor in (0, 1)")->required();
}

void add_output(CLI::App* cmd, Args& a) {
  cmd->add_option("--format", a.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  cmd->add_option("--out", a.out, "Output file (default: standard output)");
}

void add_sim(CLI::App* cmd, Args& a) {
  cmd->add_option("--slots", a.slots, "Measured slots")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--warmup", a.warmup, "Warmup slots discarded before measuring")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Master seed (default 20080422, or ALOHA_LAB_SEED)");
  cmd->add_flag("--saturated", a.saturated, "Keep every queue permanently non-empty");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability regions and simulation of slotted Aloha with K-exponential backoff"};
  app.require_subcommand(1);
  Args a;

  auto* analyze = app.add_subcommand("analyze", "Stable points, region bounds, classification and throughput at one q");
  add_network(analyze, a, true);
  add_output(analyze, a);
  analyze->footer(column_help(aloha::cli::analyze_columns()));

  auto* regions = app.add_subcommand("regions", "Region bounds and maximum stable throughput for (n, rate, K)");
  add_network(regions, a, false);
  add_output(regions, a);
  regions->footer(column_help(aloha::cli::regions_columns()));

  auto* sweep = app.add_subcommand("sweep", "Model predictions (and optionally simulation) over a q-grid");
  add_network(sweep, a, false);
  auto* q_single = sweep->add_option("--q", a.q, "Single retransmission factor");
  sweep->add_option("--q-grid", a.q_grid, "Grid start:stop:points[:log]")->excludes(q_single);
  sweep->add_flag("--simulate", a.simulate, "Also simulate every grid point");
  add_sim(sweep, a);
  add_output(sweep, a);
  sweep->footer(column_help(aloha::cli::sweep_columns(true)) +
                "\nThe last five columns appear only with --simulate.");

  auto* simulate = app.add_subcommand("simulate", "Simulate one configuration");
  add_network(simulate, a, true);
  add_sim(simulate, a);
  add_output(simulate, a);
  simulate->footer(column_help(aloha::cli::simulate_columns()));

  auto* trace = app.add_subcommand("trace", "Per-slot queue length of one node");
  add_network(trace, a, true);
  add_sim(trace, a);
  trace->add_option("--trace-node", a.trace_node, "Index of the traced node")->capture_default_str();
  add_output(trace, a);
  trace->footer(column_help(aloha::cli::trace_columns()) +
                "\nJSON output adds a summary: departures, longest_idle_stretch, longest_capture_run, "
                "max_queue_length, mean_queue_length.");

  auto* validate = app.add_subcommand("validate", "Run named acceptance suites; exit 1 on any failure");
  validate->add_option("--suite", a.suites, "Suite name (repeatable), or 'all'");
  validate->add_flag("--list", a.list, "List suite names and exit");
  validate->add_option("--seed", a.seed, "Master seed (default 20080422, or ALOHA_LAB_SEED)");
  add_output(validate, a);
  validate->footer(column_help(aloha::cli::validate_columns()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    namespace cli = aloha::cli;
    if (*analyze) {
      aloha::io::emit(aloha::io::render(cli::analyze(a.network(*a.q)), a.fmt()), a.out);
    } else if (*regions) {
      aloha::io::emit(aloha::io::render(cli::regions(a.n, a.rate, aloha::Cutoff::parse(a.k)), a.fmt()), a.out);
    } else if (*sweep) {
      std::vector<double> qs;
      if (a.q) {
        qs = {*a.q};
      } else if (!a.q_grid.empty()) {
        qs = cli::parse_grid(a.q_grid).values();
      } else {
        throw std::invalid_argument("sweep needs --q or --q-grid");
      }
      std::optional<cli::SimSettings> s;
      if (a.simulate) s = a.sim();
      aloha::io::emit(aloha::io::render(cli::sweep(a.network(qs.front()), qs, s), a.fmt()), a.out);
    } else if (*simulate) {
      aloha::io::emit(aloha::io::render(cli::simulate(a.network(*a.q), a.sim()), a.fmt()), a.out);
    } else if (*trace) {
      aloha::io::emit(aloha::io::render(cli::trace(a.network(*a.q), a.sim(), a.trace_node), a.fmt()), a.out);
    } else if (*validate) {
      if (a.list) {
        for (const auto& s : aloha::validation::suites()) std::cout << s.name << "  " << s.description << "\n";
        return kExitOk;
      }
      auto run = cli::validate(a.suites, a.seed.value_or(default_seed()));
      for (const auto& line : run.lines) std::cout << line << "\n";
      std::cout << (run.pass ? "all checks passed" : "some checks FAILED") << std::endl;
      if (!a.out.empty()) aloha::io::emit(aloha::io::render(run.table, a.fmt()), a.out);
      return run.pass ? kExitOk : kExitValidation;
    }
  } catch (const std::exception& e) {
    std::cerr << "aloha_lab: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
