#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"

using aloha::Cutoff;
namespace cli = aloha::cli;
namespace io = aloha::io;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + ALOHA_LAB_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("aloha_lab_test_" + name);
}

std::string cell_text(const io::Table& t, std::size_t row, const std::string& column) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == column) return io::format_cell(t.rows.at(row).at(i));
  }
  throw std::out_of_range("no column " + column);
}

void expect_schema(const io::Table& t) {
  const std::string text = io::render_json(t);
  const auto doc = io::Json::parse(text);
  const auto errs = io::schema_errors(doc, t.command, t.columns);
  EXPECT_TRUE(errs.empty()) << t.command << ": " << (errs.empty() ? "" : errs.front());
  EXPECT_EQ(doc["rows"].size(), t.rows.size());
  EXPECT_EQ(doc.dump(2) + "\n", text);
}

}  // namespace

TEST(Grid, Parse) {
  const auto g = cli::parse_grid("0.01:0.3:4:log");
  EXPECT_TRUE(g.log_spaced);
  const auto v = g.values();
  ASSERT_EQ(v.size(), 4u);
  EXPECT_DOUBLE_EQ(v.front(), 0.01);
  EXPECT_DOUBLE_EQ(v.back(), 0.3);
  EXPECT_NEAR(v[1] / v[0], v[2] / v[1], 1e-12);
  EXPECT_EQ(cli::parse_grid("0.2:0.2:1").values().size(), 1u);
  EXPECT_EQ(cli::parse_grid("0.1:0.5:5:lin").values()[2], 0.30000000000000004);
  EXPECT_THROW(cli::parse_grid("0.3:0.1:3"), std::invalid_argument);
  EXPECT_THROW(cli::parse_grid("0.1:0.3"), std::invalid_argument);
  EXPECT_THROW(cli::parse_grid("0.1:0.3:0"), std::invalid_argument);
  EXPECT_THROW(cli::parse_grid("a:0.3:3"), std::invalid_argument);
  EXPECT_THROW(cli::parse_grid("0:0.3:3:log"), std::invalid_argument);
  EXPECT_THROW(cli::parse_grid("0.1:0.3:3:cubic"), std::invalid_argument);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::format_number(0.1 + 0.2), "0.3");
  EXPECT_EQ(io::format_number(1234567.0), "1234567");
  EXPECT_EQ(io::format_number(1e-20), "1e-20");
  EXPECT_EQ(io::format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::format_cell(io::Cell{}), "");
  EXPECT_EQ(io::format_cell(io::Cell{std::string("a,b")}), "\"a,b\"");
  EXPECT_EQ(io::format_cell(io::Cell{true}), "true");
}

TEST(Analyze, Examples) {
  const auto pseudo = cli::analyze({50, 0.3, Cutoff::unbounded(), 0.6});
  EXPECT_EQ(cell_text(pseudo, 0, "classification"), "pseudo");
  EXPECT_EQ(cell_text(pseudo, 0, "throughput"), "0.3");
  EXPECT_NE(cell_text(pseudo, 0, "p_A"), "");

  const auto abs = cli::analyze({50, 0.3, Cutoff::finite(1), 0.02});
  EXPECT_EQ(cell_text(abs, 0, "classification"), "absolute");
  EXPECT_EQ(cell_text(abs, 0, "p_A"), "");

  const auto idle = cli::analyze({10, 0.0, Cutoff::finite(1), 0.5});
  EXPECT_EQ(cell_text(idle, 0, "p_L"), "1");
  EXPECT_EQ(cell_text(idle, 0, "throughput"), "0");
  EXPECT_EQ(cell_text(idle, 0, "q_upper"), "inf");

  EXPECT_THROW(cli::analyze({10, 0.4, Cutoff::finite(1), 0.5}), std::domain_error);
  EXPECT_THROW(cli::analyze({10, 0.1, Cutoff::finite(1), 1.5}), std::invalid_argument);
}

TEST(Sweep, Scenarios) {
  // Offered load against q for each cutoff.
  for (const auto& k : {Cutoff::finite(1), Cutoff::finite(2), Cutoff::finite(4), Cutoff::unbounded()}) {
    const auto t = cli::sweep({10, 0.1, k, 0.1}, cli::parse_grid("0.01:0.9:12:log").values(), std::nullopt);
    EXPECT_EQ(t.rows.size(), 12u);
    EXPECT_EQ(t.columns, cli::sweep_columns(false));
    expect_schema(t);
  }
  // Success probability against q with simulation.
  const auto sim = cli::sweep({50, 0.3, Cutoff::unbounded(), 0.5}, {0.2, 0.5, 0.9},
                              cli::SimSettings{1, 1000, 5000, false});
  EXPECT_EQ(sim.columns, cli::sweep_columns(true));
  EXPECT_EQ(sim.rows.size(), 3u);
  expect_schema(sim);

  const auto single = cli::sweep({10, 0.1, Cutoff::finite(1), 0.1}, cli::parse_grid("0.1:0.1:1").values(), std::nullopt);
  const std::string csv = io::render_csv(single);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Schema, EveryCommandRoundTrips) {
  expect_schema(cli::analyze({50, 0.3, Cutoff::unbounded(), 0.9}));
  expect_schema(cli::regions(50, 0.3, Cutoff::unbounded()));
  expect_schema(cli::regions(50, 0.3, Cutoff::finite(4)));
  expect_schema(cli::simulate({10, 0.1, Cutoff::finite(1), 0.1}, {1, 100, 1000, false}));
  expect_schema(cli::simulate({10, 0.0, Cutoff::finite(2), 0.1}, {1, 0, 1000, true}));
  const auto tr = cli::trace({10, 0.1, Cutoff::finite(1), 0.1}, {1, 0, 100, false}, 3);
  expect_schema(tr);
  EXPECT_TRUE(io::table_json(tr)["summary"].contains("longest_capture_run"));
  expect_schema(cli::validate({"regions"}, 1).table);
}

TEST(Schema, DetectsProblems) {
  const auto good = io::table_json(cli::analyze({50, 0.3, Cutoff::finite(1), 0.02}));
  auto bad = good;
  bad["rows"][0].erase("p_L");
  EXPECT_FALSE(io::schema_errors(bad, "analyze", cli::analyze_columns()).empty());
  bad = good;
  bad["extra"] = 1;
  EXPECT_FALSE(io::schema_errors(bad, "analyze", cli::analyze_columns()).empty());
  EXPECT_FALSE(io::schema_errors(good, "regions", cli::analyze_columns()).empty());
  bad = good;
  bad["rows"][0]["q"] = io::Json::array();
  EXPECT_FALSE(io::schema_errors(bad, "analyze", cli::analyze_columns()).empty());
  // Infinities become null.
  const auto idle = io::table_json(cli::analyze({10, 0.0, Cutoff::finite(1), 0.5}));
  EXPECT_TRUE(idle["rows"][0]["q_upper"].is_null());
}

TEST(Validate, Suites) {
  EXPECT_THROW(cli::validate({}, 1), std::invalid_argument);
  EXPECT_THROW(cli::validate({"no_such_suite"}, 1), std::invalid_argument);
  const auto r = cli::validate({"regions", "fixed_points"}, 1);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.lines.size(), r.table.rows.size());
  for (const auto& line : r.lines) EXPECT_EQ(line.rfind("PASS", 0), 0u) << line;
}

TEST(Trace, ZeroRateIsAllZero) {
  const auto t = cli::trace({10, 0.0, Cutoff::finite(1), 0.5}, {1, 0, 200, false}, 0);
  ASSERT_EQ(t.rows.size(), 200u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_EQ(cell_text(t, i, "queue_length"), "0");
  EXPECT_THROW(cli::trace({10, 0.1, Cutoff::finite(1), 0.5}, {1, 0, 10, false}, 10), std::out_of_range);
}

TEST(Tool, ExitCodes) {
  EXPECT_EQ(run_tool("--help"), 0);
  EXPECT_EQ(run_tool("analyze --n 50 --rate 0.3 --K inf --q 0.6"), 0);
  EXPECT_EQ(run_tool("analyze --n 50 --rate 0.5 --K inf --q 0.6"), 2);
  EXPECT_EQ(run_tool("analyze --n 50 --rate 0.3 --K zero --q 0.6"), 2);
  EXPECT_EQ(run_tool("analyze --n 50"), 2);
  EXPECT_EQ(run_tool("frobnicate"), 2);
  EXPECT_EQ(run_tool("validate"), 2);
  EXPECT_EQ(run_tool("validate --suite nope"), 2);
  EXPECT_EQ(run_tool("validate --suite regions"), 0);
  // The saturation suite contains checks that do not hold (documented in the README).
  EXPECT_EQ(run_tool("validate --suite theorem6"), 1);
  EXPECT_EQ(run_tool("sweep --n 10 --rate 0.1 --q-grid 0.1:0.2:2 --out /nonexistent/dir/out.csv"), 2);
}

TEST(Tool, HelpDocumentsColumns) {
  const auto out = temp_path("help.txt");
  ASSERT_EQ(std::system((std::string(ALOHA_LAB_PATH) + " sweep --help > " + out.string()).c_str()), 0);
  const std::string text = read_file(out);
  EXPECT_NE(text.find("CSV columns: q, classification, rho_model"), std::string::npos);
  std::filesystem::remove(out);
}

TEST(Tool, ByteIdenticalReruns) {
  const std::vector<std::string> commands = {
      "validate --suite regions --suite fixed_points --suite dynamics --format csv",
      "sweep --n 10 --rate 0.1 --K 2 --q-grid 0.05:0.3:4 --simulate --slots 20000 --warmup 1000 --format json",
      "trace --n 10 --rate 0.1 --K inf --q 0.5 --slots 5000 --trace-node 2 --format csv",
  };
  for (std::size_t i = 0; i < commands.size(); ++i) {
    const auto a = temp_path("rerun_a_" + std::to_string(i));
    const auto b = temp_path("rerun_b_" + std::to_string(i));
    run_tool(commands[i] + " --out " + a.string());
    run_tool(commands[i] + " --out " + b.string());
    const std::string ta = read_file(a);
    EXPECT_FALSE(ta.empty()) << commands[i];
    EXPECT_EQ(ta, read_file(b)) << commands[i];
    std::filesystem::remove(a);
    std::filesystem::remove(b);
  }
}

TEST(Tool, SeedFromEnvironment) {
  const std::string cmd = "simulate --n 10 --rate 0.2 --K 1 --q 0.1 --slots 5000 --warmup 0 --out ";
  const auto a = temp_path("seed_a");
  const auto b = temp_path("seed_b");
  const auto c = temp_path("seed_c");
  EXPECT_EQ(run_tool(cmd + a.string()), 0);
  EXPECT_EQ(run_tool(cmd + b.string(), "ALOHA_LAB_SEED=99"), 0);
  EXPECT_EQ(run_tool(cmd + c.string() + " --seed 99"), 0);
  EXPECT_NE(read_file(a), read_file(b));
  EXPECT_EQ(read_file(b), read_file(c));
  EXPECT_NE(read_file(a).find(",20080422,"), std::string::npos);
  EXPECT_EQ(run_tool(cmd + a.string(), "ALOHA_LAB_SEED=abc"), 2);
  for (const auto& p : {a, b, c}) std::filesystem::remove(p);
}
