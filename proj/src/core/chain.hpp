#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace stochchain {

struct WeightedMatrix {
  StochasticMatrix matrix;
  double probability;
};

// Law of a single W(k): a finite support with probabilities.
class StepDistribution {
 public:
  static StepDistribution point(StochasticMatrix m);
  explicit StepDistribution(std::vector<WeightedMatrix> support, double tol = 1e-12);

  std::size_t dim() const noexcept { return support_.front().matrix.dim(); }
  const std::vector<WeightedMatrix>& support() const noexcept { return support_; }
  bool degenerate() const noexcept { return support_.size() == 1; }
  const StochasticMatrix& expected() const noexcept { return expected_; }

  // Inverse-CDF draw for u in [0, 1).
  std::size_t sample_index(double u) const;

 private:
  std::vector<WeightedMatrix> support_;
  StochasticMatrix expected_ = StochasticMatrix::identity(1);
};

enum class ChainKind { Static, Periodic, Explicit, IndependentFiniteSupport, Iid };
enum class TailRule { Cycle, RepeatLast, Identity };
enum class FlowStatus { Diverges, Summable, Unknown };

struct FlowDeclaration {
  std::size_t i;
  std::size_t j;
  FlowStatus status;
};

const char* to_string(ChainKind kind);
const char* to_string(TailRule tail);
const char* to_string(FlowStatus status);

// A deterministic or independent random chain W(1), W(2), ...
// Immutable; copies share storage.
class ChainSpec {
 public:
  static ChainSpec static_chain(StochasticMatrix m);
  static ChainSpec periodic(std::vector<StochasticMatrix> period);
  // tail must be RepeatLast or Identity.
  static ChainSpec explicit_sequence(std::vector<StochasticMatrix> seq, TailRule tail = TailRule::Identity);
  // Step k (k >= 1) uses steps[k-1] while k <= steps.size(); afterwards the
  // tail rule applies. Cycle repeats steps[cycle_start..] forever.
  static ChainSpec independent(std::vector<StepDistribution> steps, TailRule tail = TailRule::Cycle,
                               std::size_t cycle_start = 0);
  static ChainSpec iid(StepDistribution dist);

  ChainSpec with_flow_declaration(std::vector<FlowDeclaration> decl) const;
  ChainSpec with_seed(std::uint64_t seed) const;

  std::size_t dim() const noexcept { return data_->dim; }
  ChainKind kind() const noexcept { return data_->kind; }
  TailRule tail() const noexcept { return data_->tail; }
  std::size_t cycle_start() const noexcept { return data_->cycle_start; }
  bool deterministic() const noexcept;
  std::span<const StepDistribution> steps() const noexcept {
    return {data_->dists.data(), data_->dists.size() - 1};
  }
  const std::vector<FlowDeclaration>& flow_declaration() const noexcept { return data_->flow; }
  std::optional<std::uint64_t> seed() const noexcept { return data_->seed; }

  // Index into distributions(); the identity tail maps to the last slot.
  std::size_t step_index(std::size_t k) const;
  std::span<const StepDistribution> distributions() const noexcept { return data_->dists; }
  // Indices of distributions used infinitely often.
  std::vector<std::size_t> recurring_indices() const;

  const StepDistribution& step(std::size_t k) const { return data_->dists[step_index(k)]; }
  const StochasticMatrix& matrix_at(std::size_t k) const;
  const StochasticMatrix& expected_matrix(std::size_t k) const { return step(k).expected(); }

 private:
  struct Data {
    std::size_t dim = 0;
    ChainKind kind = ChainKind::Static;
    TailRule tail = TailRule::RepeatLast;
    std::size_t cycle_start = 0;
    std::vector<StepDistribution> dists;  // user steps + identity slot
    std::vector<FlowDeclaration> flow;
    std::optional<std::uint64_t> seed;
  };
  static ChainSpec build(ChainKind kind, std::vector<StepDistribution> steps, TailRule tail,
                         std::size_t cycle_start);
  explicit ChainSpec(std::shared_ptr<const Data> d) : data_(std::move(d)) {}

  std::shared_ptr<const Data> data_;
};

inline const StochasticMatrix& matrix_at(const ChainSpec& chain, std::size_t k) { return chain.matrix_at(k); }
inline const StochasticMatrix& expected_matrix(const ChainSpec& chain, std::size_t k) {
  return chain.expected_matrix(k);
}

// Realization W(t0+1), ..., W(t0+horizon) for one seed.
class SamplePath {
 public:
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t t0() const noexcept { return t0_; }
  std::size_t horizon() const noexcept { return choices_.size(); }
  std::size_t dim() const noexcept { return chain_.dim(); }
  const ChainSpec& provenance() const noexcept { return chain_; }

  // W(t0 + 1 + i)
  const StochasticMatrix& matrix(std::size_t i) const;
  // Support index drawn at W(t0 + 1 + i).
  std::size_t choice(std::size_t i) const { return choices_[i].second; }

  friend bool operator==(const SamplePath& a, const SamplePath& b) {
    return a.seed_ == b.seed_ && a.t0_ == b.t0_ && a.choices_ == b.choices_;
  }

 private:
  friend SamplePath sample_path(const ChainSpec&, std::uint64_t, std::size_t, std::size_t);
  SamplePath(ChainSpec chain, std::uint64_t seed, std::size_t t0)
      : chain_(std::move(chain)), seed_(seed), t0_(t0) {}

  ChainSpec chain_;
  std::uint64_t seed_;
  std::size_t t0_;
  std::vector<std::pair<std::size_t, std::size_t>> choices_;  // (distribution, support)
};

// Draws at step k depend only on (seed, k), so paths with different t0
// agree on the steps they share.
SamplePath sample_path(const ChainSpec& chain, std::uint64_t seed, std::size_t t0, std::size_t horizon);

struct Trajectory {
  std::size_t t0 = 0;
  std::vector<std::vector<double>> points;  // x(t0), x(t0+1), ...
};

Trajectory simulate_dynamics(const SamplePath& path, std::span<const double> v);

// --- fixtures and generators ---

ChainSpec fixture_counterexample_4x4();

struct DoublyStochasticOptions {
  std::size_t support_size = 3;
  std::size_t permutations = 0;  // per support matrix; 0 means m
  double identity_weight = 0.0;  // minimum weight on I in every support matrix
};
ChainSpec generator_doubly_stochastic(std::size_t m, std::uint64_t seed, std::size_t steps,
                                      const DoublyStochasticOptions& opts = {});

ChainSpec generator_bounded_bidirectional(std::size_t m, double gamma, std::uint64_t seed, std::size_t steps,
                                          double edge_probability = 0.5);

enum class LeakKind { None, Divergent, Vanishing };

struct TwoBlockOptions {
  LeakKind leak = LeakKind::None;
  double leak_weight = 0.05;  // divergent: constant weight; vanishing: weight * ratio^k
  double leak_ratio = 0.5;
  std::size_t leak_steps = 60;  // vanishing leak prefix length
  std::size_t support_size = 4;
};
ChainSpec generator_two_block(std::size_t m, std::size_t split, std::uint64_t seed,
                              const TwoBlockOptions& opts = {});

struct RandomIndependentOptions {
  std::size_t support_size = 3;
  std::size_t steps = 1;
  double min_diagonal = 0.1;
  double zero_probability = 0.3;  // chance an off-diagonal entry is structurally zero
};
ChainSpec generator_random_independent(std::size_t m, std::uint64_t seed,
                                       const RandomIndependentOptions& opts = {});

// Records the realized averaging matrices of a bounded-confidence run.
ChainSpec hegselmann_krause_chain(std::vector<double> opinions, double confidence, std::size_t steps);

}  // namespace stochchain
