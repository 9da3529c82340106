#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/analysis.hpp"
#include "core/chain.hpp"
#include "core/errors.hpp"
#include "core/ergodicity.hpp"

namespace stochchain {

inline constexpr const char* kVersion = "0.1.0";

enum class ExitStatus : int {
  Ok = 0,
  Usage = 1,
  Parse = 2,
  Validation = 3,
  DimensionCap = 4,
  CertificateViolation = 5,
};

ExitStatus status_for(ErrorCode code);
const char* to_string(ExitStatus s);

struct RunConfig {
  std::string command;
  std::string chain_file;  // echoed only
  std::size_t t0 = 0;
  std::size_t horizon = 1000;
  std::uint64_t seed = 0;
  double validate_tol = kDefaultValidateTol;
  double cluster_tol = kDefaultClusterTol;
  double divergence_epsilon = kDefaultDivergenceEpsilon;
  double positivity_epsilon = kDefaultPositivityEpsilon;
  double slack_tol = kDefaultSlackTol;
  FlowPolicy flow_policy = FlowPolicy::DeclaredFirst;
  std::string lyapunov = "square";  // square | absolute | power:P
  std::vector<double> x0;           // empty: 0, 1, ..., m-1
  std::vector<std::size_t> subset;
  std::size_t n_paths = 16;
  std::string format = "json";
  bool timestamp = true;
};

// Throws Error(InvalidArgument) when a tolerance is not positive or horizon is 0.
void check_config(const RunConfig& cfg);
LyapunovSpec parse_lyapunov(const std::string& name);

struct CommandResult {
  ExitStatus status = ExitStatus::Ok;
  nlohmann::json report;
  std::string csv;  // simulate only

  std::string report_text() const;  // sorted keys, two-space indent, trailing newline
};

CommandResult run_validate(const std::string& spec_text, const RunConfig& cfg);
CommandResult run_analyze(const ChainSpec& chain, const RunConfig& cfg);
CommandResult run_ergodicity(const ChainSpec& chain, const RunConfig& cfg);
CommandResult run_simulate(const ChainSpec& chain, const RunConfig& cfg);
CommandResult run_decouple(const ChainSpec& chain, const RunConfig& cfg);

// Report for a failure raised before or during a command.
CommandResult error_result(const RunConfig& cfg, const Error& e);

// counterexample | two_block | two_block_leak | doubly_stochastic
ChainSpec fixture_by_name(const std::string& name, std::size_t dim, std::uint64_t seed);
std::vector<std::string> fixture_names();

}  // namespace stochchain
