#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stochchain/stochchain.h"

namespace {

struct Options {
  std::string chain;
  std::string out;
  std::string report;
  std::string format = "json";
  std::string lyapunov = "square";
  std::string policy = "declared-first";
  std::vector<double> x0;
  std::vector<std::size_t> subset;
  bool no_timestamp = false;
  scn_config cfg = scn_config_default();
};

struct Owned {
  char* p = nullptr;
  ~Owned() { scn_string_free(p); }
};

bool write_text(const std::string& path, const char* text) {
  if (text == nullptr) return true;
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
    return true;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot write " << path << "\n";
    return false;
  }
  f << text;
  return static_cast<bool>(f);
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void add_run_options(CLI::App* sub, Options& o) {
  sub->add_option("--chain", o.chain, "chain spec JSON file")->required();
  sub->add_option("--t0", o.cfg.t0, "start index t0");
  sub->add_option("--horizon", o.cfg.horizon, "number of steps after t0")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.cfg.seed, "seed for sampled paths");
  sub->add_option("--tol", o.cfg.validate_tol, "row-sum validation tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--cluster-tol", o.cfg.cluster_tol, "row disagreement tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--slack-tol", o.cfg.slack_tol, "certificate slack tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--divergence-eps", o.cfg.divergence_epsilon, "tail-flow threshold for numeric edges")
      ->check(CLI::PositiveNumber);
  sub->add_option("--flow-policy", o.policy, "declared-first | numeric-only | structural")
      ->check(CLI::IsMember({"declared-first", "numeric-only", "structural"}));
  sub->add_option("--out", o.out, "output path (default stdout)");
  sub->add_option("--report", o.report, "JSON report path when --format csv");
  sub->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--x0", o.x0, "initial vector")->delimiter(',');
  sub->add_option("--lyapunov", o.lyapunov, "square | absolute | power:P");
  sub->add_option("--subset", o.subset, "subset S for decouple (0-based)")->delimiter(',');
  sub->add_option("--paths", o.cfg.n_paths, "sampled paths for dissipation summaries");
  sub->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp field");
}

int emit(scn_status status, const Options& o, const Owned& report, const Owned& csv) {
  if (status != SCN_OK && report.p == nullptr) {
    std::cerr << "error: " << scn_last_error() << "\n";
    return static_cast<int>(status);
  }
  bool ok = true;
  if (o.format == "csv" && csv.p != nullptr) {
    ok = write_text(o.out, csv.p);
    if (!o.report.empty()) ok = write_text(o.report, report.p) && ok;
  } else {
    ok = write_text(o.out, report.p);
  }
  if (status != SCN_OK) std::cerr << "error: " << scn_last_error() << "\n";
  if (!ok) return status == SCN_OK ? 1 : static_cast<int>(status);
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analyze chains of row-stochastic matrices and their averaging dynamics"};
  app.set_version_flag("--version", scn_version());
  app.require_subcommand(1);

  Options o;
  auto* validate = app.add_subcommand("validate", "check a chain spec file matrix by matrix");
  validate->add_option("--chain", o.chain, "chain spec JSON file")->required();
  validate->add_option("--tol", o.cfg.validate_tol, "row-sum validation tolerance")->check(CLI::PositiveNumber);
  validate->add_option("--out", o.out, "output path (default stdout)");
  validate->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp field");

  auto* analyze = app.add_subcommand("analyze", "coefficients, infinite flow graph, irreducibility");
  auto* ergodicity = app.add_subcommand("ergodicity", "absolute probabilities, certificates, clusters");
  auto* simulate = app.add_subcommand("simulate", "run x(k+1) = W(k+1) x(k) and emit the trajectory");
  auto* decouple = app.add_subcommand("decouple", "split the chain along a subset and measure the l1 gap");
  for (auto* sub : {analyze, ergodicity, simulate, decouple}) add_run_options(sub, o);

  std::string fixture;
  std::size_t fixture_dim = 0;
  bool list = false;
  auto* fixtures = app.add_subcommand("fixtures", "emit a built-in chain as a spec file");
  fixtures->add_option("name", fixture, "counterexample | two_block | two_block_leak | two_block_vanishing | doubly_stochastic");
  fixtures->add_option("--dim", fixture_dim, "dimension (0: fixture default)");
  fixtures->add_option("--seed", o.cfg.seed, "generator seed");
  fixtures->add_option("--out", o.out, "output path (default stdout)");
  fixtures->add_flag("--list", list, "list fixture names");

  CLI11_PARSE(app, argc, argv);

  o.cfg.include_timestamp = o.no_timestamp ? 0 : 1;
  o.cfg.csv = o.format == "csv" ? 1 : 0;
  o.cfg.lyapunov = o.lyapunov.c_str();
  o.cfg.chain_file = o.chain.c_str();
  o.cfg.flow_policy = o.policy == "numeric-only" ? SCN_FLOW_NUMERIC_ONLY
                      : o.policy == "structural" ? SCN_FLOW_STRUCTURAL
                                                 : SCN_FLOW_DECLARED_FIRST;
  if (!o.x0.empty()) {
    o.cfg.x0 = o.x0.data();
    o.cfg.x0_len = o.x0.size();
  }
  if (!o.subset.empty()) {
    o.cfg.subset = o.subset.data();
    o.cfg.subset_len = o.subset.size();
  }

  if (fixtures->parsed()) {
    if (list || fixture.empty()) {
      std::puts("counterexample\ntwo_block\ntwo_block_leak\ntwo_block_vanishing\ndoubly_stochastic");
      return 0;
    }
    scn_chain* chain = nullptr;
    const scn_status st = scn_chain_fixture(fixture.c_str(), fixture_dim, o.cfg.seed, &chain);
    if (st != SCN_OK) {
      std::cerr << "error: " << scn_last_error() << "\n";
      return static_cast<int>(st);
    }
    Owned text;
    scn_chain_to_json(chain, &text.p);
    scn_chain_free(chain);
    return write_text(o.out, text.p) ? 0 : 1;
  }

  if (validate->parsed()) {
    o.cfg.command = "validate";
    const auto text = read_file(o.chain);
    if (!text) {
      std::cerr << "error: cannot open " << o.chain << "\n";
      return SCN_ERR_USAGE;
    }
    Owned report, csv;
    const scn_status st = scn_run_validate(text->c_str(), &o.cfg, &report.p);
    return emit(st, o, report, csv);
  }

  scn_chain* chain = nullptr;
  scn_status st = scn_chain_from_file(o.chain.c_str(), o.cfg.validate_tol, &chain);
  if (st != SCN_OK) {
    std::cerr << "error: " << scn_last_error() << "\n";
    return static_cast<int>(st);
  }
  Owned report, csv;
  if (analyze->parsed()) {
    o.cfg.command = "analyze";
    st = scn_run_analyze(chain, &o.cfg, &report.p);
  } else if (ergodicity->parsed()) {
    o.cfg.command = "ergodicity";
    st = scn_run_ergodicity(chain, &o.cfg, &report.p, &csv.p);
  } else if (simulate->parsed()) {
    o.cfg.command = "simulate";
    st = scn_run_simulate(chain, &o.cfg, &report.p, &csv.p);
  } else {
    o.cfg.command = "decouple";
    st = scn_run_decouple(chain, &o.cfg, &report.p, &csv.p);
  }
  scn_chain_free(chain);
  return emit(st, o, report, csv);
}
