#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core/chain.hpp"
#include "core/errors.hpp"
#include "core/matrix.hpp"

namespace stochchain {

inline constexpr int kChainSchemaVersion = 1;

// Chain spec as written in the file, before any stochasticity checks.
using RawMatrix = std::vector<std::vector<double>>;

struct RawStep {
  std::vector<RawMatrix> matrices;
  std::vector<double> probabilities;
};

struct RawChainSpec {
  std::size_t dim = 0;
  ChainKind kind = ChainKind::Static;
  std::vector<RawStep> steps;  // deterministic kinds: one point mass per matrix
  std::optional<TailRule> tail;
  std::size_t cycle_start = 0;
  std::vector<FlowDeclaration> flow;
  std::optional<std::uint64_t> seed;
};

// Throws Error(Parse) with index() = 1-based line for syntax errors and
// schema violations.
RawChainSpec parse_chain_spec(std::string_view text);

struct MatrixCheck {
  std::size_t index = 0;    // position among all matrices in file order
  std::size_t step = 0;     // step (or period slot) it belongs to
  std::size_t support = 0;  // position inside that step's support
  bool ok = true;
  std::optional<ErrorCode> code;
  std::string cause;
  double max_row_sum_drift = 0.0;
};

struct StepCheck {
  std::size_t step = 0;
  bool ok = true;
  std::string cause;
  double probability_sum = 0.0;
};

struct ValidationSummary {
  std::vector<MatrixCheck> matrices;
  std::vector<StepCheck> steps;
  std::optional<ErrorCode> first_error;
  bool ok() const noexcept { return !first_error.has_value(); }
};

// Checks every matrix and step distribution and records each result
// instead of stopping at the first failure.
ValidationSummary check_chain_spec(const RawChainSpec& raw, double tol = kDefaultValidateTol);

// Throws the first validation error; Error::index() is the matrix index.
ChainSpec build_chain(const RawChainSpec& raw, double tol = kDefaultValidateTol);
ChainSpec load_chain_spec(std::string_view text, double tol = kDefaultValidateTol);
ChainSpec load_chain_file(const std::string& path, double tol = kDefaultValidateTol);

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json chain_to_json(const ChainSpec& chain);
std::string emit_chain_spec(const ChainSpec& chain);

std::string read_text_file(const std::string& path);

}  // namespace stochchain
