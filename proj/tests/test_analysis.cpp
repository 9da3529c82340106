#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "core/analysis.hpp"
#include "core/chain.hpp"
#include "support.hpp"

using namespace stochchain;

namespace {

const Matrix kPath{{0.5, 0.5, 0.0}, {0.25, 0.5, 0.25}, {0.0, 0.5, 0.5}};
const Matrix kTwo{{0.9, 0.1}, {0.2, 0.8}};
const Matrix kJ{{0.5, 0.5}, {0.5, 0.5}};

ChainSpec static_of(const Matrix& m) { return ChainSpec::static_chain(validate(m)); }

StochasticMatrix uniform_matrix(std::size_t m) { return validate(Matrix(m, 1.0 / static_cast<double>(m))); }

}  // namespace

TEST(CutFlow, Identity) {
  const std::vector<std::size_t> s{0, 2};
  const auto f = cut_flow(StochasticMatrix::identity(4), s);
  EXPECT_EQ(f.outflow, 0.0);
  EXPECT_EQ(f.inflow, 0.0);
}

TEST(CutFlow, PathMatrixMiddleNode) {
  const std::vector<std::size_t> s{1};
  const auto f = cut_flow(validate(kPath), s);
  EXPECT_EQ(f.outflow, 0.5);
  EXPECT_EQ(f.inflow, 1.0);
}

TEST(CutFlow, UniformMatrixCounts) {
  for (std::size_t m = 2; m <= 7; ++m) {
    const auto u = uniform_matrix(m);
    for (std::size_t s = 1; s < m; ++s) {
      std::vector<std::size_t> subset;
      for (std::size_t i = 0; i < s; ++i) subset.push_back(i);
      const auto f = cut_flow(u, subset);
      const double expect = static_cast<double>(s * (m - s)) / static_cast<double>(m);
      EXPECT_NEAR(f.outflow, expect, 1e-14);
      EXPECT_NEAR(f.inflow, expect, 1e-14);
    }
  }
}

TEST(CutFlow, TrivialSubsetRejected) {
  const std::vector<std::size_t> none;
  const std::vector<std::size_t> all{0, 1};
  EXPECT_THROW(cut_flow(StochasticMatrix::identity(2), none), Error);
  try {
    cut_flow(StochasticMatrix::identity(2), all);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TrivialSubset);
  }
}

TEST(Balancedness, IdentityIsVacuous) {
  const auto r = balancedness_coefficient(ChainSpec::static_chain(StochasticMatrix::identity(3)), {1, 1});
  EXPECT_EQ(r.alpha, 1.0);
  EXPECT_TRUE(r.vacuous);
}

TEST(Balancedness, PathMatrix) {
  const auto r = balancedness_coefficient(static_of(kPath), {1, 1});
  EXPECT_EQ(r.alpha, 0.5);
  EXPECT_FALSE(r.vacuous);
  ASSERT_TRUE(r.witness_cut.has_value());
  EXPECT_EQ(*r.witness_cut, (Subset{1}));
}

TEST(Balancedness, DoublyStochasticIsOne) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto chain = generator_doubly_stochastic(3 + seed % 4, seed, 2);
    EXPECT_NEAR(balancedness_coefficient(chain, {1, 2}).alpha, 1.0, 1e-12);
  }
}

TEST(Balancedness, CutEnumerationCap) {
  const auto chain = ChainSpec::static_chain(uniform_matrix(kMaxCutDim + 1));
  try {
    balancedness_coefficient(chain, {1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionTooLargeForCutEnumeration);
  }
}

TEST(StrongAperiodicity, Examples) {
  EXPECT_DOUBLE_EQ(strong_aperiodicity_coefficient(static_of(kTwo), {1, 1}).gamma, 0.8);
  const auto iid = ChainSpec::iid(StepDistribution({{StochasticMatrix::identity(2), 0.5}, {validate(kJ), 0.5}}));
  EXPECT_DOUBLE_EQ(strong_aperiodicity_coefficient(iid, {1, 1}).gamma, 0.5);
  const auto id = strong_aperiodicity_coefficient(ChainSpec::static_chain(StochasticMatrix::identity(3)), {1, 1});
  EXPECT_EQ(id.gamma, 1.0);
  EXPECT_TRUE(id.vacuous);
}

TEST(WeakAperiodicity, Examples) {
  EXPECT_DOUBLE_EQ(weak_aperiodicity_coefficient(static_of(kJ), {1, 1}).gamma, 0.5);
  const auto id = weak_aperiodicity_coefficient(ChainSpec::static_chain(StochasticMatrix::identity(3)), {1, 1});
  EXPECT_EQ(id.gamma, 1.0);
  EXPECT_TRUE(id.vacuous);
}

TEST(DiagonalBound, Examples) {
  const auto half = expected_diagonal_lower_bound(0.5);
  EXPECT_EQ(half.value, 1.0);
  EXPECT_TRUE(half.capped);
  const auto fifth = expected_diagonal_lower_bound(0.2);
  EXPECT_DOUBLE_EQ(fifth.value, 0.25);
  EXPECT_FALSE(fifth.capped);
  EXPECT_EQ(expected_diagonal_lower_bound(0.0).value, 0.0);
}

TEST(DiagonalBound, SoundBoundHoldsOnRandomChains) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto chain = generator_random_independent(4, seed, {3, 2, 0.05 * static_cast<double>(seed % 5), 0.3});
    const auto g = strong_aperiodicity_coefficient(chain, {1, 2});
    const double bound = expected_diagonal_sound_bound(g.gamma);
    for (std::size_t k = 1; k <= 2; ++k)
      for (std::size_t i = 0; i < 4; ++i) EXPECT_GE(chain.expected_matrix(k)(i, i), bound - 1e-15);
  }
}

TEST(FlowGraph, StaticPositiveEntryDiverges) {
  const auto g = infinite_flow_graph(static_of(kTwo), 100);
  ASSERT_EQ(g.pairs.size(), 1u);
  EXPECT_TRUE(g.pairs[0].divergent());
  EXPECT_EQ(g.tau, 1u);
}

TEST(FlowGraph, GeometricEntrySummable) {
  std::vector<StochasticMatrix> seq;
  for (int k = 1; k <= 40; ++k) {
    const double a = std::ldexp(1.0, -k);
    seq.push_back(validate(Matrix{{1.0 - a, a}, {0.0, 1.0}}));
  }
  const auto chain = ChainSpec::explicit_sequence(seq, TailRule::Identity);
  for (auto policy : {FlowPolicy::DeclaredFirst, FlowPolicy::NumericOnly, FlowPolicy::Structural}) {
    const auto g = infinite_flow_graph(chain, 200, {policy, kDefaultDivergenceEpsilon});
    EXPECT_FALSE(g.pairs[0].divergent()) << to_string(policy);
    EXPECT_NEAR(g.pairs[0].cumulative_flow, 1.0 - std::ldexp(1.0, -40), 1e-15);
    EXPECT_EQ(g.tau, 2u);
  }
}

TEST(FlowGraph, TwoBlockComponents) {
  const auto chain = generator_two_block(6, 3, 4);
  const auto g = infinite_flow_graph(chain, 1000);
  EXPECT_EQ(g.tau, 2u);
  EXPECT_EQ(g.components, (std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4, 5}}));
  const auto numeric = infinite_flow_graph(chain, 1000, {FlowPolicy::NumericOnly, kDefaultDivergenceEpsilon});
  EXPECT_EQ(numeric.components, g.components);
}

TEST(FlowGraph, DeclarationOverridesNumbers) {
  const auto chain = static_of(kTwo).with_flow_declaration({{1, 0, FlowStatus::Summable}});
  EXPECT_EQ(infinite_flow_graph(chain, 10).pairs[0].cls, EdgeClass::DeclaredSummable);
  EXPECT_EQ(infinite_flow_graph(chain, 10, {FlowPolicy::NumericOnly, 1e-6}).pairs[0].cls, EdgeClass::NumericDivergent);
}

TEST(ConnectedComponents, Partition) {
  const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 3}, {3, 4}, {1, 2}};
  const auto c = connected_components(6, edges);
  EXPECT_EQ(c, (std::vector<std::vector<std::size_t>>{{0, 3, 4}, {1, 2}, {5}}));
}

TEST(Irreducibility, Examples) {
  EXPECT_FALSE(irreducibility_check(StochasticMatrix::identity(3)));
  const auto cycle = validate(Matrix{{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  EXPECT_TRUE(irreducibility_check(cycle));
  EXPECT_EQ(period(cycle), 3u);
  const auto absorbing = validate(Matrix{{0.5, 0.5}, {0.0, 1.0}});
  EXPECT_FALSE(irreducibility_check(absorbing));
  EXPECT_EQ(period(validate(kPath)), 1u);
}

TEST(IrreducibilityViaBalance, Examples) {
  EXPECT_FALSE(irreducibility_via_balance(StochasticMatrix::identity(3)));
  EXPECT_FALSE(irreducibility_via_balance(validate(Matrix{{0.5, 0.5}, {0.0, 1.0}})));
  EXPECT_TRUE(irreducibility_via_balance(validate(kPath)));
  EXPECT_TRUE(irreducibility_via_balance(StochasticMatrix::identity(1)));
}

TEST(Stationary, Examples) {
  const auto j = stationary_vector(validate(kJ));
  EXPECT_NEAR(j.pi[0], 0.5, 1e-12);
  const auto two = stationary_vector(validate(kTwo));
  EXPECT_NEAR(two.pi[0], 2.0 / 3.0, 1e-11);
  EXPECT_NEAR(two.pi[1], 1.0 / 3.0, 1e-11);
  EXPECT_TRUE(two.premise_holds);
  const auto ds = generator_doubly_stochastic(5, 3, 1, {1, 0, 0.2});
  const auto u = stationary_vector(ds.expected_matrix(1));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(u.pi[i], 0.2, 1e-11);
}

TEST(Stationary, PeriodicDoesNotConverge) {
  const auto swap = validate(Matrix{{0.0, 1.0}, {1.0, 0.0}});
  // The uniform start is already fixed, so power iteration stops at once.
  EXPECT_NO_THROW(stationary_vector(swap));
  EXPECT_FALSE(stationary_vector(swap).premise_holds);
  const auto shifted = validate(Matrix{{0, 1, 0}, {0, 0, 1}, {0.5, 0.5, 0}});
  EXPECT_NO_THROW(stationary_vector(shifted, 1e-12, 100000));
}

TEST(Lemma51, Examples) {
  const auto ds = generator_doubly_stochastic(4, 9, 1).expected_matrix(1);
  const auto rep = lemma51_cut_bound(ds, StochasticVector::uniform(4));
  EXPECT_EQ(rep.ratio, 1.0);
  EXPECT_TRUE(rep.holds);

  const std::vector<double> pi{2.0 / 3.0, 1.0 / 3.0};
  const auto two = lemma51_cut_bound(validate(kTwo), validate_vector(pi));
  EXPECT_EQ(two.ratio, 0.5);
  EXPECT_EQ(two.worst_slack, 0.0);
  EXPECT_TRUE(two.holds);

  const auto id = lemma51_cut_bound(StochasticMatrix::identity(3), StochasticVector::uniform(3));
  EXPECT_EQ(id.worst_slack, 0.0);
  EXPECT_TRUE(id.holds);
}

TEST(Lemma51, RejectsNonFixedVector) {
  try {
    lemma51_cut_bound(validate(kTwo), StochasticVector::uniform(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotAFixedVector);
  }
}

TEST(Theorem52, Examples) {
  for (std::size_t m = 2; m <= 10; ++m) EXPECT_EQ(theorem52_alpha(1.0 / static_cast<double>(m), m), 1.0);
  EXPECT_NEAR(theorem52_alpha(0.2, 3), 1.0 / 3.0, 1e-15);
  EXPECT_LT(theorem52_alpha(1e-300, 4), 1e-299);
  EXPECT_THROW(theorem52_alpha(0.0, 4), Error);
  EXPECT_THROW(theorem52_alpha(0.6, 2), Error);
}

TEST(ColumnSupport, StartsAtSingleton) {
  const auto chain = generator_bounded_bidirectional(5, 0.1, 2, 30);
  for (std::size_t j = 0; j < 5; ++j) {
    const auto t = column_support_track(chain, j, 30);
    ASSERT_EQ(t.records.size(), 31u);
    EXPECT_EQ(t.records[0].support, (Subset{j}));
    EXPECT_EQ(t.records[0].mu, 1.0);
  }
}

TEST(ColumnSupport, MonotoneWithPowerBound) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t m = 2 + seed % 5;
    const double gamma = 0.9 / static_cast<double>(m);
    const auto chain = generator_bounded_bidirectional(m, gamma, seed, 60, 0.35);
    for (std::size_t j = 0; j < m; ++j) {
      const auto check = check_column_support(column_support_track(chain, j, 60), gamma);
      EXPECT_TRUE(check.monotone);
      EXPECT_EQ(check.mu_violations, 0u);
      EXPECT_GE(check.worst_ratio, 1.0);
    }
  }
}

TEST(ColumnSupport, RequiresDeterministicChain) {
  EXPECT_THROW(column_support_track(generator_doubly_stochastic(3, 1, 1), 0, 5), Error);
}

TEST(ColumnAverage, Identity) {
  const auto rep = column_average_bound_check(ChainSpec::static_chain(StochasticMatrix::identity(4)), 1.0, 20);
  EXPECT_EQ(rep.bound, 0.25);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_EQ(rep.worst_margin, 0.0);
}

TEST(ColumnAverage, BoundedBidirectional) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const double gamma = 0.15;
    const auto chain = generator_bounded_bidirectional(5, gamma, seed, 500);
    const auto rep = column_average_bound_check(chain, gamma, 500, 25);
    EXPECT_EQ(rep.violations, 0u);
    EXPECT_GT(rep.checked, 0u);
  }
}

TEST(ColumnAverage, DoublyStochasticIsExact) {
  const auto chain = generator_doubly_stochastic(4, 3, 5);
  const auto rep = column_average_bound_check(chain, 0.1, 40, 5);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_NEAR(rep.worst_margin, 0.25 - 0.001, 1e-12);
}

TEST(Repeated, PowerMatchesLoop) {
  double p = 1.0;
  for (std::size_t n = 0; n < 10; ++n) {
    EXPECT_EQ(repeated_power(0.3, n), p);
    p *= 0.3;
  }
}

TEST(Property, AlphaMatchesBruteForceAndIsAtMostOne) {
  oracle::Gen gen(77);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t m = 2 + gen.below(6);
    const auto rows = gen.stochastic(m, 0.5, gen.chance(0.5));
    bool vacuous = false;
    const double expect = oracle::alpha_brute(rows, &vacuous);
    const auto r = balancedness_of_matrix(validate(rows).matrix());
    EXPECT_NEAR(r.alpha, expect, 1e-14);
    EXPECT_EQ(r.vacuous, vacuous);
    EXPECT_LE(r.alpha, 1.0);
    EXPECT_GE(r.alpha, 0.0);
  }
}

TEST(Property, IrreducibilityMatchesClosure) {
  oracle::Gen gen(78);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + gen.below(9);
    const auto rows = gen.stochastic(m, gen.uniform(0.3, 0.95), gen.chance(0.5));
    EXPECT_EQ(irreducibility_check(validate(rows)), oracle::irreducible(rows));
  }
}

TEST(Property, WeakDominatesStrong) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto chain = generator_random_independent(3 + seed % 4, seed, {3, 3, 0.1, 0.4});
    const double strong = strong_aperiodicity_coefficient(chain, {1, 3}).gamma;
    const double weak = weak_aperiodicity_coefficient(chain, {1, 3}).gamma;
    EXPECT_GE(weak, strong - 1e-15);
  }
}

TEST(Property, ComponentsPartitionNodes) {
  oracle::Gen gen(79);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + gen.below(10);
    const auto chain = ChainSpec::static_chain(validate(gen.stochastic(m, 0.85, true)));
    const auto g = infinite_flow_graph(chain, 50);
    std::set<std::size_t> seen;
    for (const auto& c : g.components)
      for (std::size_t i : c) EXPECT_TRUE(seen.insert(i).second);
    EXPECT_EQ(seen.size(), m);
    for (const auto& e : g.pairs)
      if (e.divergent()) EXPECT_EQ(g.component_of[e.i], g.component_of[e.j]);
  }
}
