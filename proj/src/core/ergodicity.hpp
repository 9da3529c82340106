#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/analysis.hpp"
#include "core/chain.hpp"
#include "core/matrix.hpp"

namespace stochchain {

inline constexpr double kDefaultClusterTol = 1e-6;
inline constexpr double kDefaultSlackTol = 1e-10;

// pi(0..K) with E[pi^T(k+1) W(k+1)] = pi^T(k) up to the recorded residuals.
struct AbsoluteProbabilitySequence {
  std::size_t horizon = 0;
  std::vector<StochasticVector> vectors;  // pi(0), ..., pi(K)
  std::vector<double> residuals;          // r(k) for k = 0..K-1
  double p_star_estimate = 0.0;

  const StochasticVector& at(std::size_t k) const;
  double max_residual() const;
};

// pi^T(k) = terminal^T E[W(K)] ... E[W(k+1)], accumulated backwards from K.
AbsoluteProbabilitySequence backward_absolute_probability(const ChainSpec& chain, std::size_t horizon,
                                                          std::optional<StochasticVector> terminal = std::nullopt);
// Wraps a caller-supplied sequence pi(0..K) and attaches its residuals.
AbsoluteProbabilitySequence absolute_probability_from(const ChainSpec& chain, std::vector<StochasticVector> vectors);
// max_k ||pi^T(k+1) E[W(k+1)] - pi^T(k)||_1
double verify_absolute_probability(const ChainSpec& chain, const AbsoluteProbabilitySequence& seq);

// Convex scalar function for V_{g,pi}.
class LyapunovSpec {
 public:
  enum class Kind { Square, Absolute, Power, PiecewiseLinear };

  static LyapunovSpec square();
  static LyapunovSpec absolute();
  static LyapunovSpec power(double p);
  // g has the given slopes on (-inf, b0], [b0, b1], ..., [bn, inf) and
  // g(b0) = 0. Throws unless breakpoints increase and slopes do not decrease.
  static LyapunovSpec piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes);

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return p_; }
  const std::vector<double>& breakpoints() const noexcept { return breaks_; }
  const std::vector<double>& slopes() const noexcept { return slopes_; }
  std::string name() const;

  double operator()(double s) const;
  // sup |g| over [lo, hi].
  double sup_abs(double lo, double hi) const;

 private:
  explicit LyapunovSpec(Kind k) : kind_(k) {}
  Kind kind_;
  double p_ = 2.0;
  std::vector<double> breaks_;
  std::vector<double> slopes_;
};

// sum_i pi_i g(x_i) - g(pi^T x)
double lyapunov_value(const LyapunovSpec& g, const StochasticVector& pi, std::span<const double> x);

// H = sum_q p_q Q_q^T diag(w) Q_q over one step distribution.
Matrix expected_weighted_gram(const StepDistribution& dist, const StochasticVector& w);

struct SupermartingaleReport {
  std::vector<double> slack;  // slack for k = t0 .. t0+horizon-1
  double min_slack = 0.0;
  std::size_t worst_k = 0;
  double max_residual = 0.0;
  double tolerance = kDefaultSlackTol;
  double allowance = 0.0;
  bool compliant = true;
};

// slack(k) = V(x(k), k) - sum_q p_q V(Q_q x(k), k+1) along the path drawn
// with `seed`; the expectation over W(k+1) is exact.
SupermartingaleReport supermartingale_check(const ChainSpec& chain, const LyapunovSpec& g,
                                            const AbsoluteProbabilitySequence& pi, std::span<const double> v,
                                            std::size_t t0, std::size_t horizon, std::uint64_t seed,
                                            double tolerance = kDefaultSlackTol);

struct CertificateRecord {
  std::size_t k = 0;
  double value = 0.0;          // V_pi(x(k), k)
  double expected_next = 0.0;  // E[V_pi(x(k+1), k+1) | x(k)]
  Matrix h;                    // H(k)
  double dissipation = 0.0;    // sum_{i<j} H_ij (x_i - x_j)^2
  double slack = 0.0;          // value - dissipation - expected_next
  bool equality_branch = false;
  double weighted_average = 0.0;       // pi^T(k) x(k)
  double expected_next_average = 0.0;  // E[pi^T(k+1) x(k+1) | x(k)]
};

struct DecreaseCertificate {
  std::vector<CertificateRecord> records;
  double min_slack = 0.0;
  double max_abs_equality_slack = 0.0;
  std::size_t equality_steps = 0;
  double max_residual = 0.0;
  double tolerance = kDefaultSlackTol;
  double allowance = 0.0;
  double martingale_gap = 0.0;           // max |E[pi^T(k+1)x(k+1)|x(k)] - pi^T(k)x(k)|
  double weighted_average_drift = 0.0;   // max_k |pi^T(k)x(k) - pi^T(t0)x(t0)| on the path
  bool compliant = true;
};

DecreaseCertificate quadratic_decrease_certificate(const ChainSpec& chain, const AbsoluteProbabilitySequence& pi,
                                                   std::span<const double> v, std::size_t t0, std::size_t horizon,
                                                   std::uint64_t seed, double tolerance = kDefaultSlackTol);

struct DissipationReport {
  std::vector<double> partial_sums;  // exact E[sum_{t0<=s<=k} D(s)]
  double initial_value = 0.0;        // V_pi(x(t0), t0)
  double final_expected_value = 0.0;
  double allowance = 0.0;
  bool monotone = true;
  bool bounded = true;
  std::size_t n_paths = 0;
  double path_mean_total = 0.0;
  double path_max_total = 0.0;
};

// Expectations are propagated exactly through the second moment of x(k);
// the sampled paths feed only the reported mean/max.
DissipationReport dissipation_sum_bound(const ChainSpec& chain, const AbsoluteProbabilitySequence& pi,
                                        std::span<const double> v, std::size_t t0, std::size_t horizon,
                                        std::size_t n_paths, std::uint64_t seed, double allowance = 1e-9);

struct ErgodicityProfile {
  std::size_t t0 = 0;
  std::size_t horizon = 0;
  double tol = kDefaultClusterTol;
  std::vector<std::size_t> ks;                           // absolute k, geometric spacing
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // i < j
  std::vector<std::vector<double>> decay;                // [pair][ks index]
  std::vector<double> tail_max;                          // max_{k in tail window} d_ij(k)
  std::vector<bool> mutually_ergodic;
  std::vector<double> index_variation;  // max_{k in tail} ||W_i(k:t0) - W_i(end:t0)||
  std::vector<bool> index_convergent;
};

// The tail window is k - t0 in [horizon/2, horizon].
ErgodicityProfile mutual_ergodicity_profile(const ChainSpec& chain, std::size_t t0, std::size_t horizon,
                                            std::uint64_t seed, double tol = kDefaultClusterTol,
                                            RowNorm norm = RowNorm::MaxAbs);

struct ConsensusClusterReport {
  std::size_t t0 = 0;
  std::size_t horizon = 0;
  double tol = kDefaultClusterTol;
  std::vector<std::vector<std::size_t>> clusters;
  double max_intra_cluster_disagreement = 0.0;
  std::optional<std::size_t> tau;
  bool count_within_tau = true;
  bool matches_components = false;
  StochasticMatrix product = StochasticMatrix::identity(1);  // W(t0+horizon : t0)
};

ConsensusClusterReport consensus_clusters(const ChainSpec& chain, std::size_t t0, std::size_t horizon,
                                          std::uint64_t seed, double tol = kDefaultClusterTol,
                                          const FlowGraph* graph = nullptr);

struct DecoupledChain {
  std::vector<bool> in_subset;
  std::vector<StochasticMatrix> matrices;  // B(1..horizon)
  Matrix l1_gap;                           // sum_k |A_ij(k) - B_ij(k)|
  std::vector<double> cumulative_gap;      // running total over all entries, per k
};

// Applied to the expected chain; deterministic chains are their own.
DecoupledChain decouple(const ChainSpec& chain, std::span<const std::size_t> subset, std::size_t horizon);

}  // namespace stochchain
