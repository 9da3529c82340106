#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stochchain/stochchain.h"

namespace fs = std::filesystem;

namespace {

struct Text {
  char* p = nullptr;
  ~Text() { scn_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Chain {
  scn_chain* p = nullptr;
  ~Chain() { scn_chain_free(p); }
};

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / ("stochchain_capi_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STOCHCHAIN_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

scn_config quiet() {
  scn_config c = scn_config_default();
  c.include_timestamp = 0;
  c.horizon = 100;
  return c;
}

}  // namespace

TEST(CApi, Version) { EXPECT_STREQ(scn_version(), "0.1.0"); }

TEST(CApi, FixtureRoundTrip) {
  Chain a;
  ASSERT_EQ(scn_chain_fixture("counterexample", 0, 0, &a.p), SCN_OK);
  EXPECT_EQ(scn_chain_dim(a.p), 4u);
  Text json;
  ASSERT_EQ(scn_chain_to_json(a.p, &json.p), SCN_OK);
  Chain b;
  ASSERT_EQ(scn_chain_from_json(json.p, 1e-12, &b.p), SCN_OK);
  double m[16];
  ASSERT_EQ(scn_chain_expected_matrix(b.p, 2, m), SCN_OK);
  EXPECT_EQ(m[4], 1.0);  // row 1 of the even-step matrix is e_0
  EXPECT_EQ(scn_chain_expected_matrix(b.p, 0, m), SCN_ERR_USAGE);
}

TEST(CApi, ErrorsMapToStatus) {
  Chain c;
  EXPECT_EQ(scn_chain_from_json("{\"dim\": 2,", 1e-12, &c.p), SCN_ERR_PARSE);
  EXPECT_EQ(c.p, nullptr);
  EXPECT_NE(std::string(scn_last_error()).find("line"), std::string::npos);
  EXPECT_EQ(scn_chain_from_json(R"({"dim":2,"kind":"static","matrix":[[0.5,0.5],[0.5,0.6]]})", 1e-12, &c.p),
            SCN_ERR_VALIDATION);
  EXPECT_NE(std::string(scn_last_error()).find("RowSumOutOfTolerance"), std::string::npos);
  EXPECT_EQ(scn_chain_fixture("missing", 0, 0, &c.p), SCN_ERR_USAGE);
  EXPECT_EQ(scn_chain_from_json(nullptr, 1e-12, &c.p), SCN_ERR_USAGE);
}

TEST(CApi, RunsCommands) {
  Chain c;
  ASSERT_EQ(scn_chain_fixture("two_block", 6, 1, &c.p), SCN_OK);
  scn_config cfg = quiet();
  Text report, csv;
  EXPECT_EQ(scn_run_analyze(c.p, &cfg, &report.p), SCN_OK);
  EXPECT_NE(report.str().find("\"flow_graph\""), std::string::npos);
  Text r2;
  cfg.csv = 1;
  EXPECT_EQ(scn_run_simulate(c.p, &cfg, &r2.p, &csv.p), SCN_OK);
  EXPECT_EQ(csv.str().substr(0, 5), "k,x0,");
  Text r3;
  const size_t subset[] = {0, 1, 2};
  cfg.subset = subset;
  cfg.subset_len = 3;
  EXPECT_EQ(scn_run_decouple(c.p, &cfg, &r3.p, nullptr), SCN_OK);
}

TEST(CApi, ReportsAreReproducible) {
  Chain c;
  ASSERT_EQ(scn_chain_fixture("doubly_stochastic", 4, 9, &c.p), SCN_OK);
  scn_config cfg = quiet();
  cfg.seed = 42;
  Text a, b;
  ASSERT_EQ(scn_run_ergodicity(c.p, &cfg, &a.p, nullptr), SCN_OK);
  ASSERT_EQ(scn_run_ergodicity(c.p, &cfg, &b.p, nullptr), SCN_OK);
  EXPECT_EQ(a.str(), b.str());
}

TEST(CApi, ValidateReportOnBadInput) {
  scn_config cfg = quiet();
  Text report;
  EXPECT_EQ(scn_run_validate("{ nope", &cfg, &report.p), SCN_ERR_PARSE);
  EXPECT_NE(report.str().find("parse-error"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch();
  ASSERT_EQ(run_cli("fixtures two_block --seed 3 --out " + (dir / "tb.json").string()), 0);
  EXPECT_EQ(run_cli("validate --chain " + (dir / "tb.json").string()), 0);

  write(dir / "bad_sum.json", R"({"dim":2,"kind":"static","matrix":[[0.5,0.5],[0.5,0.6]]})");
  EXPECT_EQ(run_cli("validate --chain " + (dir / "bad_sum.json").string()), 3);
  EXPECT_EQ(run_cli("analyze --chain " + (dir / "bad_sum.json").string()), 3);

  write(dir / "bad_syntax.json", "{\n\"dim\": ]");
  EXPECT_EQ(run_cli("validate --chain " + (dir / "bad_syntax.json").string()), 2);

  write(dir / "neg_prob.json",
        R"({"dim":2,"kind":"iid","matrices":[[[1,0],[0,1]],[[0,1],[1,0]]],"probabilities":[1.5,-0.5]})");
  EXPECT_EQ(run_cli("validate --chain " + (dir / "neg_prob.json").string()), 3);

  EXPECT_NE(run_cli("analyze --chain " + (dir / "tb.json").string() + " --horizon 0"), 0);
  EXPECT_EQ(run_cli("analyze --chain " + (dir / "tb.json").string() + " --horizon 50 --out " +
                    (dir / "an.json").string()),
            0);
  EXPECT_NE(slurp(dir / "an.json").find("\"coefficients\""), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, SimulateCsvIsReproducible) {
  const auto dir = scratch();
  write(dir / "iid.json",
        R"({"dim":2,"kind":"iid","matrices":[[[1,0],[0,1]],[[0.5,0.5],[0.5,0.5]]],"probabilities":[0.5,0.5]})");
  const std::string base = "simulate --chain " + (dir / "iid.json").string() +
                           " --seed 5 --horizon 40 --x0 1,-1 --format csv --out ";
  ASSERT_EQ(run_cli(base + (dir / "a.csv").string()), 0);
  ASSERT_EQ(run_cli(base + (dir / "b.csv").string()), 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.csv").substr(0, 10), "k,x0,x1,V\n");
  fs::remove_all(dir);
}
