// End-to-end checks of the selharq binary: output schemas, determinism,
// config/env precedence, threshold-table wiring, and exit codes.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "selharq/montecarlo.hpp"
#include "selharq/optimizer.hpp"

namespace {

std::string cli_path() {
#ifdef SELHARQ_CLI_PATH
  return SELHARQ_CLI_PATH;
#else
  const char* p = std::getenv("SELHARQ_CLI_PATH");
  EXPECT_NE(p, nullptr) << "SELHARQ_CLI_PATH must point at the selharq binary";
  return p ? p : "";
#endif
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Runs the CLI through the shell; `env_prefix` may carry VAR=value pairs.
RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string out_path = std::string(::testing::TempDir()) + "cli_stdout.txt";
  const std::string err_path = std::string(::testing::TempDir()) + "cli_stderr.txt";
  std::string cmd = env_prefix.empty() ? "" : env_prefix + " ";
  cmd += "'" + cli_path() + "' " + args + " > '" + out_path + "' 2> '" + err_path + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

std::string temp_file(const std::string& name) {
  return std::string(::testing::TempDir()) + name;
}

TEST(CliBounds, SchemaDeterminismAndDegenerateThreshold) {
  const std::string args =
      "bounds --snr 0:4:8 --protocol scc,cc --tau 0 --ns 16";
  const RunResult a = run_cli(args);
  const RunResult b = run_cli(args);
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);

  const auto lines = lines_of(a.out);
  ASSERT_EQ(lines.size(), 2 + 3 * 2u);
  EXPECT_EQ(lines[0].rfind("# selharq ", 0), 0u);
  EXPECT_EQ(lines[1],
            "snr_db,protocol,tau,ber_single,ber_full_cc,ber_scc_joint,ber_ccws_first,"
            "ber_ccws_joint,eta_a,m,clamped");
  // tau = 0 disables selection, so the selective joint bound collapses to
  // the single-transmission bound and the retransmitted fraction is zero.
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto cells = cells_of(lines[i]);
    ASSERT_EQ(cells.size(), 11u);
    EXPECT_EQ(cells[5], cells[3]) << lines[i];
    EXPECT_EQ(cells[9], "0") << lines[i];
    EXPECT_EQ(cells[10], "0") << lines[i];
  }
}

TEST(CliBounds, JsonCarriesSameRows) {
  const RunResult r = run_cli("bounds --snr 6 --protocol scc --tau 0.5 --format json");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\"tool\": \"selharq\""), std::string::npos);
  EXPECT_NE(r.out.find("\"protocol\": \"scc\""), std::string::npos);
  EXPECT_NE(r.out.find("\"tau\": 0.5"), std::string::npos);
  EXPECT_NE(r.out.find("\"clamped\": false"), std::string::npos);
}

TEST(CliOptimize, TableRoundTripsAndRerunsIdentically) {
  const std::string table_path = temp_file("scc_table.csv");
  const std::string args =
      "optimize --protocol scc --snr 4:4:12 --ns 16 --out '" + table_path + "'";
  ASSERT_EQ(run_cli(args).exit_code, 0);
  const std::string first = slurp(table_path);

  const selharq::ThresholdTable table = selharq::ThresholdTable::load_csv(table_path);
  EXPECT_EQ(table.protocol, selharq::Protocol::scc);
  ASSERT_EQ(table.size(), 3u);
  EXPECT_DOUBLE_EQ(table.snr_db[0], 4.0);
  EXPECT_GT(table.tau_opt[0], table.tau_opt[2]);

  ASSERT_EQ(run_cli(args).exit_code, 0);
  EXPECT_EQ(slurp(table_path), first);
}

TEST(CliSimulate, RerunAndWorkerCountKeepBytes) {
  const std::string args =
      "simulate --snr 4:4:8 --protocol cc,scc --tau 0.6 --ns 16 --channel-mode iid "
      "--packets 200";
  const RunResult a = run_cli(args + " --workers 1");
  const RunResult b = run_cli(args + " --workers 3");
  const RunResult c = run_cli(args + " --workers 1");
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  const auto lines = lines_of(a.out);
  ASSERT_EQ(lines.size(), 2 + 2 * 2u);
  EXPECT_EQ(lines[1], selharq::SweepResult::csv_header());
}

TEST(CliSimulate, ConfigFileYieldsToFlagsAndEnv) {
  const std::string conf = temp_file("sweep.conf");
  {
    std::ofstream out(conf);
    out << "# sweep defaults\n"
        << "packets = 100\n"
        << "seed = 7\n"
        << "ns = 16\n"
        << "channel-mode = iid\n";
  }
  const std::string base = "simulate --snr 8 --protocol cc --config '" + conf + "'";

  const RunResult file_only = run_cli(base);
  ASSERT_EQ(file_only.exit_code, 0) << file_only.err;
  EXPECT_NE(file_only.out.find("packets=100"), std::string::npos);
  EXPECT_NE(file_only.out.find("seed=7"), std::string::npos);
  EXPECT_NE(file_only.out.find("channel=iid"), std::string::npos);

  const RunResult flag_wins = run_cli(base + " --packets 50");
  EXPECT_NE(flag_wins.out.find("packets=50"), std::string::npos);
  EXPECT_NE(flag_wins.out.find("seed=7"), std::string::npos);

  const RunResult env_wins = run_cli(base, "SELHARQ_SEED=99");
  EXPECT_NE(env_wins.out.find("seed=99"), std::string::npos);

  const RunResult env_run = run_cli("simulate --snr 8 --protocol cc --ns 16 "
                                    "--channel-mode iid --packets 100",
                                    "SELHARQ_SEED=7");
  EXPECT_EQ(env_run.out, file_only.out);

  const RunResult bad = run_cli(base + "typo" /* no such file */);
  EXPECT_EQ(bad.exit_code, 2);
}

TEST(CliSimulate, TauOptUsesTableValues) {
  const std::string table_path = temp_file("tau_opt_table.csv");
  ASSERT_EQ(run_cli("optimize --protocol scc --snr 4:4:8 --ns 16 --out '" + table_path +
                    "'").exit_code,
            0);
  const selharq::ThresholdTable table = selharq::ThresholdTable::load_csv(table_path);

  const RunResult sim = run_cli(
      "simulate --snr 4:4:8 --protocol scc --tau opt --table '" + table_path +
      "' --ns 16 --channel-mode iid --packets 100");
  ASSERT_EQ(sim.exit_code, 0) << sim.err;
  const auto lines = lines_of(sim.out);
  ASSERT_EQ(lines.size(), 4u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto cells = cells_of(lines[2 + i]);
    EXPECT_NEAR(std::stod(cells[2]), table.tau_opt[i], 1e-5) << lines[2 + i];
  }

  // mscc borrows the scc table; ccws must not.
  EXPECT_EQ(run_cli("simulate --snr 4 --protocol mscc --omega 2 --tau opt --table '" +
                    table_path + "' --ns 16 --channel-mode iid --packets 20")
                .exit_code,
            0);
  const RunResult mismatch =
      run_cli("simulate --snr 4 --protocol ccws --tau opt --table '" + table_path +
              "' --ns 16 --packets 20");
  EXPECT_EQ(mismatch.exit_code, 2);
  EXPECT_NE(mismatch.err.find("threshold table"), std::string::npos);
}

TEST(CliErrors, UsageProblemsExitTwo) {
  EXPECT_EQ(run_cli("simulate --snr 4 --protocol scc --tau opt --packets 10").exit_code, 2);
  EXPECT_EQ(run_cli("simulate --snr 4 --protocol zigzag --packets 10").exit_code, 2);
  EXPECT_EQ(run_cli("bounds --snr 8:0:4").exit_code, 2);
  EXPECT_EQ(run_cli("bounds --snr abc").exit_code, 2);
  EXPECT_EQ(run_cli("simulate --snr 4 --protocol cc --tau full-equiv --packets 10").exit_code,
            2);
  EXPECT_EQ(run_cli("simulate --snr 4 --protocol scc --tau -0.5 --packets 10").exit_code, 2);
  EXPECT_EQ(run_cli("simulate --no-such-flag").exit_code, 2);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli("optimize --protocol cc --snr 4").exit_code, 2);
  EXPECT_EQ(run_cli("reproduce nosuch-preset").exit_code, 2);
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  EXPECT_EQ(run_cli("--version").exit_code, 0);
}

TEST(CliCompare, HealthyRunExitsZeroWithMergedColumns) {
  const RunResult r = run_cli(
      "compare --snr 8 --protocol cc,scc --tau 0.5 --ns 16 --channel-mode iid "
      "--packets 300");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[1], std::string(selharq::SweepResult::csv_header()) +
                          ",comparable,ber_bound_ok,eta_bound_ok,ber_ratio,eta_gap");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const auto cells = cells_of(lines[i]);
    ASSERT_EQ(cells.size(), 17u);
    EXPECT_EQ(cells[12], "1") << lines[i];  // comparable
    EXPECT_EQ(cells[13], "1") << lines[i];  // ber bound holds
    EXPECT_EQ(cells[14], "1") << lines[i];  // eta bound holds
  }
}

TEST(CliReproduce, ListsPresetsAndRunsSmallBudget) {
  const RunResult list = run_cli("reproduce --list");
  ASSERT_EQ(list.exit_code, 0);
  EXPECT_NE(list.out.find("fig-throughput-comparison"), std::string::npos);
  EXPECT_NE(list.out.find("fig-ber-scc"), std::string::npos);
  EXPECT_NE(list.out.find("fig-mscc-gain"), std::string::npos);

  const std::string out_path = temp_file("mscc_gain.csv");
  const RunResult r =
      run_cli("reproduce fig-mscc-gain --packets 200 --out '" + out_path + "'");
  EXPECT_EQ(r.exit_code, 0) << r.err;
  const auto lines = lines_of(slurp(out_path));
  ASSERT_EQ(lines.size(), 2 + 4 * 2u);
  EXPECT_NE(lines[0].find("preset=fig-mscc-gain"), std::string::npos);
}

TEST(CliTrace, EmitsOneRecordPerPacket) {
  const std::string trace_path = temp_file("trace.jsonl");
  const RunResult r = run_cli(
      "simulate --snr 6 --protocol ccws --tau 0.7 --ns 16 --channel-mode iid "
      "--packets 40 --trace '" + trace_path + "' --out /dev/null");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto lines = lines_of(slurp(trace_path));
  ASSERT_EQ(lines.size(), 40u);
  for (const std::string& line : lines) {
    EXPECT_EQ(line.rfind("{\"packet\": ", 0), 0u);
    EXPECT_NE(line.find("\"outcome\": "), std::string::npos);
    EXPECT_NE(line.find("\"betas\": ["), std::string::npos);
  }

  EXPECT_EQ(run_cli("simulate --snr 4:2:8 --protocol ccws --tau 0.7 --packets 10 "
                    "--trace '" + trace_path + "'")
                .exit_code,
            2);
}

}  // namespace
