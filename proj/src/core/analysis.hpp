#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "core/chain.hpp"
#include "core/matrix.hpp"

namespace stochchain {

using Subset = std::vector<std::size_t>;

inline constexpr std::size_t kMaxCutDim = 20;
inline constexpr double kDefaultDivergenceEpsilon = 1e-6;
inline constexpr double kDefaultPositivityEpsilon = 1e-13;

// Inclusive range of chain steps, first >= 1.
struct StepRange {
  std::size_t first = 1;
  std::size_t last = 1;
};

std::uint64_t subset_mask(std::span<const std::size_t> subset, std::size_t m);
Subset mask_subset(std::uint64_t mask, std::size_t m);

struct CutFlow {
  double outflow;  // M_{S,S^c}
  double inflow;   // M_{S^c,S}
};

CutFlow cut_flow(const StochasticMatrix& m, std::span<const std::size_t> subset);
CutFlow cut_flow(const Matrix& m, std::uint64_t mask);

struct BalancednessResult {
  double alpha = 1.0;
  bool vacuous = true;  // no cut carried inflow
  std::optional<Subset> witness_cut;
  std::optional<std::size_t> witness_step;
};

// min over steps and nontrivial cuts of outflow/inflow on E[W(k)]. Cuts with
// zero inflow impose nothing; zero outflow against positive inflow gives 0.
BalancednessResult balancedness_coefficient(const ChainSpec& chain, StepRange steps);
BalancednessResult balancedness_of_matrix(const Matrix& m);

struct PairWitness {
  std::size_t i;
  std::size_t j;
  std::size_t k;
};

struct AperiodicityResult {
  double gamma = 1.0;
  bool vacuous = true;
  std::optional<PairWitness> witness;
};

AperiodicityResult strong_aperiodicity_coefficient(const ChainSpec& chain, StepRange steps);
AperiodicityResult weak_aperiodicity_coefficient(const ChainSpec& chain, StepRange steps);

struct DiagonalBound {
  double value;
  bool capped;
};

// gamma / (1 - gamma), capped at 1.
DiagonalBound expected_diagonal_lower_bound(double gamma_strong);
// gamma / (1 + gamma): what summing the strong-aperiodicity inequality over
// j != i actually yields.
double expected_diagonal_sound_bound(double gamma_strong);

struct CoefficientReport {
  BalancednessResult balance;
  AperiodicityResult strong;
  AperiodicityResult weak;
  std::optional<double> p_star;
};

CoefficientReport coefficient_report(const ChainSpec& chain, StepRange steps);

// --- infinite flow graph ---

enum class FlowPolicy { DeclaredFirst, NumericOnly, Structural };

enum class EdgeClass {
  DeclaredDivergent,
  DeclaredSummable,
  NumericDivergent,
  NumericSummable,
  ExactDivergent,
  ExactSummable,
};

const char* to_string(EdgeClass c);
const char* to_string(FlowPolicy p);

struct FlowEdge {
  std::size_t i;
  std::size_t j;
  EdgeClass cls;
  double cumulative_flow;  // sum_{k<=horizon} E[W_ij(k) + W_ji(k)]
  double tail_mass;        // F(horizon) - F(horizon/2)
  bool heuristic;

  bool divergent() const noexcept {
    return cls == EdgeClass::DeclaredDivergent || cls == EdgeClass::NumericDivergent ||
           cls == EdgeClass::ExactDivergent;
  }
};

struct FlowGraph {
  std::size_t dim = 0;
  std::vector<FlowEdge> pairs;  // every i < j, classified
  std::vector<std::vector<std::size_t>> components;
  std::vector<std::size_t> component_of;
  std::size_t tau = 0;

  bool connected() const noexcept { return tau == 1; }
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
};

struct FlowGraphOptions {
  FlowPolicy policy = FlowPolicy::DeclaredFirst;
  double divergence_epsilon = kDefaultDivergenceEpsilon;
};

FlowGraph infinite_flow_graph(const ChainSpec& chain, std::size_t horizon, const FlowGraphOptions& opts = {});

// Connected components of an undirected edge list on [m].
std::vector<std::vector<std::size_t>> connected_components(
    std::size_t m, std::span<const std::pair<std::size_t, std::size_t>> edges);

// --- irreducibility ---

bool irreducibility_check(const StochasticMatrix& m);
bool irreducibility_via_balance(const StochasticMatrix& m);
// Period of the positive-entry graph of an irreducible matrix.
std::size_t period(const StochasticMatrix& m);

struct StationaryResult {
  StochasticVector pi;
  std::size_t iterations;
  double residual;     // ||pi^T M - pi^T||_1
  bool premise_holds;  // irreducible and aperiodic
};

// Power iteration v^T <- v^T M from the uniform vector. Throws NoConvergence.
StationaryResult stationary_vector(const StochasticMatrix& m, double tol = 1e-12, std::size_t max_iters = 1000000);

struct CutBoundReport {
  double ratio;        // pi_min / pi_max
  double worst_slack;  // min over cuts of A_{S,S^c} - ratio * A_{S^c,S}
  Subset witness_cut;
  bool holds;
};

CutBoundReport lemma51_cut_bound(const StochasticMatrix& m, const StochasticVector& pi);

double theorem52_alpha(double p_star, std::size_t m);

// --- column supports of products ---

struct ColumnSupportRecord {
  std::size_t k;
  Subset support;  // S_j(k)
  double mu;       // min_{l in S_j(k)} A_lj(k:t0)
};

struct ColumnSupportTracker {
  std::size_t column = 0;
  std::size_t t0 = 0;
  std::vector<ColumnSupportRecord> records;  // k = t0, ..., t0 + horizon
};

ColumnSupportTracker column_support_track(const ChainSpec& chain, std::size_t column, std::size_t horizon,
                                          std::size_t t0 = 0, double positivity_eps = kDefaultPositivityEpsilon);

struct ColumnSupportCheck {
  bool monotone = true;
  std::size_t mu_violations = 0;
  double worst_ratio = 0.0;  // min over k of mu / gamma^{|S|-1}
};

ColumnSupportCheck check_column_support(const ColumnSupportTracker& tracker, double gamma);

// gamma^n by repeated multiplication so the bound rounds the same way the
// products do.
double repeated_power(double gamma, std::size_t n);

struct ColumnAverageReport {
  double bound = 0.0;  // min(1/m, gamma^{m-1})
  double worst_margin = 0.0;
  std::size_t violations = 0;
  std::size_t checked = 0;
  std::size_t worst_k = 0;
  std::size_t worst_t0 = 0;
};

// (1/m) e^T A(k:t0) >= min(1/m, gamma^{m-1}) entrywise on the expected chain,
// for t0 = 0, stride, 2*stride, ... and t0 < k <= horizon.
ColumnAverageReport column_average_bound_check(const ChainSpec& chain, double gamma, std::size_t horizon,
                                               std::size_t t0_stride = 1);

}  // namespace stochchain
