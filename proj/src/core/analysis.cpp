#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "core/union_find.hpp"

namespace stochchain {

namespace {

void require_cut_dim(std::size_t m) {
  if (m > kMaxCutDim) {
    std::ostringstream os;
    os << "cut enumeration over 2^" << m << " subsets exceeds the m <= " << kMaxCutDim << " cap";
    throw Error(ErrorCode::DimensionTooLargeForCutEnumeration, os.str(), m);
  }
}

void require_range(StepRange r) {
  if (r.first == 0 || r.last < r.first) throw Error(ErrorCode::InvalidArgument, "step range must satisfy 1 <= first <= last");
}

// Calls f(distribution, first k using it) once per distinct distribution in the range.
template <class F>
void for_each_distinct_step(const ChainSpec& chain, StepRange r, F&& f) {
  require_range(r);
  std::vector<bool> seen(chain.distributions().size(), false);
  std::size_t remaining = seen.size();
  for (std::size_t k = r.first; k <= r.last && remaining > 0; ++k) {
    const std::size_t d = chain.step_index(k);
    if (seen[d]) continue;
    seen[d] = true;
    --remaining;
    f(chain.distributions()[d], k);
  }
}

}  // namespace

std::uint64_t subset_mask(std::span<const std::size_t> subset, std::size_t m) {
  std::uint64_t mask = 0;
  for (std::size_t i : subset) {
    if (i >= m) throw Error(ErrorCode::OutOfRange, "subset index out of range", i);
    mask |= std::uint64_t{1} << i;
  }
  return mask;
}

Subset mask_subset(std::uint64_t mask, std::size_t m) {
  Subset s;
  for (std::size_t i = 0; i < m; ++i)
    if (mask >> i & 1u) s.push_back(i);
  return s;
}

CutFlow cut_flow(const Matrix& m, std::uint64_t mask) {
  CutFlow f{0.0, 0.0};
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const bool in_s = mask >> i & 1u;
    for (std::size_t j = 0; j < m.dim(); ++j) {
      if (in_s == static_cast<bool>(mask >> j & 1u)) continue;
      (in_s ? f.outflow : f.inflow) += m(i, j);
    }
  }
  return f;
}

CutFlow cut_flow(const StochasticMatrix& m, std::span<const std::size_t> subset) {
  const std::size_t n = m.dim();
  if (n > 63) throw Error(ErrorCode::DimensionTooLarge, "cut_flow supports m <= 63");
  const std::uint64_t mask = subset_mask(subset, n);
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  if (mask == 0 || mask == full) throw Error(ErrorCode::TrivialSubset, "cut subset must be nonempty and proper");
  return cut_flow(m.matrix(), mask);
}

namespace {

// Folds one matrix into a running balancedness minimum.
void fold_balancedness(const Matrix& m, std::size_t k, BalancednessResult& acc) {
  const std::size_t n = m.dim();
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    const CutFlow f = cut_flow(m, mask);
    if (f.inflow == 0.0) continue;
    const double ratio = f.outflow / f.inflow;
    if (acc.vacuous || ratio < acc.alpha) {
      acc.alpha = ratio;
      acc.vacuous = false;
      acc.witness_cut = mask_subset(mask, n);
      acc.witness_step = k;
    }
    if (acc.alpha == 0.0) return;
  }
}

}  // namespace

BalancednessResult balancedness_coefficient(const ChainSpec& chain, StepRange steps) {
  require_cut_dim(chain.dim());
  BalancednessResult acc;
  for_each_distinct_step(chain, steps, [&](const StepDistribution& d, std::size_t k) {
    if (!acc.vacuous && acc.alpha == 0.0) return;
    fold_balancedness(d.expected().matrix(), k, acc);
  });
  if (acc.vacuous) acc.alpha = 1.0;
  return acc;
}

BalancednessResult balancedness_of_matrix(const Matrix& m) {
  require_cut_dim(m.dim());
  BalancednessResult acc;
  fold_balancedness(m, 1, acc);
  if (acc.vacuous) acc.alpha = 1.0;
  return acc;
}

AperiodicityResult strong_aperiodicity_coefficient(const ChainSpec& chain, StepRange steps) {
  AperiodicityResult acc;
  const std::size_t m = chain.dim();
  for_each_distinct_step(chain, steps, [&](const StepDistribution& d, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        double num = 0.0, den = 0.0;
        for (const auto& wm : d.support()) {
          num += wm.probability * wm.matrix(i, i) * wm.matrix(i, j);
          den += wm.probability * wm.matrix(i, j);
        }
        if (!(den > 0.0)) continue;
        const double ratio = num / den;
        if (acc.vacuous || ratio < acc.gamma) {
          acc.gamma = ratio;
          acc.vacuous = false;
          acc.witness = PairWitness{i, j, k};
        }
      }
  });
  return acc;
}

AperiodicityResult weak_aperiodicity_coefficient(const ChainSpec& chain, StepRange steps) {
  AperiodicityResult acc;
  const std::size_t m = chain.dim();
  for_each_distinct_step(chain, steps, [&](const StepDistribution& d, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        double num = 0.0, den = 0.0;
        for (const auto& wm : d.support()) {
          num += wm.probability * column_inner_product(wm.matrix, i, j);
          den += wm.probability * (wm.matrix(i, j) + wm.matrix(j, i));
        }
        if (!(den > 0.0)) continue;
        const double ratio = num / den;
        if (acc.vacuous || ratio < acc.gamma) {
          acc.gamma = ratio;
          acc.vacuous = false;
          acc.witness = PairWitness{i, j, k};
        }
      }
  });
  return acc;
}

DiagonalBound expected_diagonal_lower_bound(double gamma) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::OutOfRange, "gamma must be nonnegative");
  if (gamma >= 1.0) return {1.0, true};
  const double v = gamma / (1.0 - gamma);
  if (v >= 1.0) return {1.0, true};
  return {v, false};
}

double expected_diagonal_sound_bound(double gamma) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::OutOfRange, "gamma must be nonnegative");
  return gamma / (1.0 + gamma);
}

CoefficientReport coefficient_report(const ChainSpec& chain, StepRange steps) {
  CoefficientReport r;
  r.balance = balancedness_coefficient(chain, steps);
  r.strong = strong_aperiodicity_coefficient(chain, steps);
  r.weak = weak_aperiodicity_coefficient(chain, steps);
  return r;
}

const char* to_string(EdgeClass c) {
  switch (c) {
    case EdgeClass::DeclaredDivergent: return "declared-divergent";
    case EdgeClass::DeclaredSummable: return "declared-summable";
    case EdgeClass::NumericDivergent: return "numeric-divergent";
    case EdgeClass::NumericSummable: return "numeric-summable";
    case EdgeClass::ExactDivergent: return "exact-divergent";
    case EdgeClass::ExactSummable: return "exact-summable";
  }
  return "unknown";
}

const char* to_string(FlowPolicy p) {
  switch (p) {
    case FlowPolicy::DeclaredFirst: return "declared-first";
    case FlowPolicy::NumericOnly: return "numeric-only";
    case FlowPolicy::Structural: return "structural";
  }
  return "unknown";
}

std::vector<std::pair<std::size_t, std::size_t>> FlowGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : pairs)
    if (e.divergent()) out.emplace_back(e.i, e.j);
  return out;
}

std::vector<std::vector<std::size_t>> connected_components(
    std::size_t m, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  UnionFind uf(m);
  for (const auto& [i, j] : edges) uf.unite(i, j);
  return uf.groups();
}

FlowGraph infinite_flow_graph(const ChainSpec& chain, std::size_t horizon, const FlowGraphOptions& opts) {
  if (horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (!(opts.divergence_epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "divergence_epsilon must be positive");
  const std::size_t m = chain.dim();
  const std::size_t half = horizon / 2;

  // Cumulative two-way expected flow at half and full horizon.
  Matrix f_half(m), f_full(m);
  for (std::size_t k = 1; k <= horizon; ++k) {
    const auto& e = chain.expected_matrix(k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) f_full(i, j) += e(i, j) + e(j, i);
    if (k == half) f_half = f_full;
  }

  std::vector<std::vector<const FlowDeclaration*>> declared(m, std::vector<const FlowDeclaration*>(m, nullptr));
  for (const auto& d : chain.flow_declaration())
    if (d.status != FlowStatus::Unknown) declared[d.i][d.j] = &d;

  const auto recurring = chain.recurring_indices();

  FlowGraph g;
  g.dim = m;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      FlowEdge edge{i, j, EdgeClass::NumericSummable, f_full(i, j), f_full(i, j) - f_half(i, j), true};
      const FlowDeclaration* d = opts.policy == FlowPolicy::NumericOnly ? nullptr : declared[i][j];
      if (d != nullptr) {
        edge.cls = d->status == FlowStatus::Diverges ? EdgeClass::DeclaredDivergent : EdgeClass::DeclaredSummable;
        edge.heuristic = false;
      } else if (opts.policy == FlowPolicy::Structural) {
        bool positive = false;
        for (std::size_t r : recurring) {
          const auto& e = chain.distributions()[r].expected();
          positive = positive || e(i, j) + e(j, i) > 0.0;
        }
        edge.cls = positive ? EdgeClass::ExactDivergent : EdgeClass::ExactSummable;
        edge.heuristic = false;
      } else {
        edge.cls = edge.tail_mass > opts.divergence_epsilon ? EdgeClass::NumericDivergent : EdgeClass::NumericSummable;
      }
      g.pairs.push_back(edge);
    }

  const auto e = g.edges();
  g.components = connected_components(m, e);
  g.tau = g.components.size();
  g.component_of.assign(m, 0);
  for (std::size_t c = 0; c < g.components.size(); ++c)
    for (std::size_t i : g.components[c]) g.component_of[i] = c;
  return g;
}

namespace {

std::vector<bool> reachable(const StochasticMatrix& m, bool reverse) {
  const std::size_t n = m.dim();
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  seen[0] = true;
  q.push(0);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v = 0; v < n; ++v) {
      const double w = reverse ? m(v, u) : m(u, v);
      if (w > 0.0 && !seen[v]) {
        seen[v] = true;
        q.push(v);
      }
    }
  }
  return seen;
}

}  // namespace

bool irreducibility_check(const StochasticMatrix& m) {
  const auto fwd = reachable(m, false);
  const auto bwd = reachable(m, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

bool irreducibility_via_balance(const StochasticMatrix& m) {
  require_cut_dim(m.dim());
  const auto balance = balancedness_of_matrix(m.matrix());
  if (!(balance.alpha > 0.0)) return false;
  const auto g = infinite_flow_graph(ChainSpec::static_chain(m), 1, {FlowPolicy::Structural, kDefaultDivergenceEpsilon});
  return g.connected();
}

std::size_t period(const StochasticMatrix& m) {
  if (!irreducibility_check(m)) return 0;
  const std::size_t n = m.dim();
  std::vector<std::size_t> level(n, std::numeric_limits<std::size_t>::max());
  std::queue<std::size_t> q;
  level[0] = 0;
  q.push(0);
  std::size_t g = 0;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (!(m(u, v) > 0.0)) continue;
      if (level[v] == std::numeric_limits<std::size_t>::max()) {
        level[v] = level[u] + 1;
        q.push(v);
      } else {
        const auto a = static_cast<long long>(level[u]) + 1 - static_cast<long long>(level[v]);
        g = std::gcd(g, static_cast<std::size_t>(a < 0 ? -a : a));
      }
    }
  }
  return g;
}

StationaryResult stationary_vector(const StochasticMatrix& m, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  const bool premise = period(m) == 1;
  const std::size_t n = m.dim();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 0; it <= max_iters; ++it) {
    auto w = left_multiply(v, m.matrix());
    const double r = l1_distance(w, v);
    if (r <= tol) return {StochasticVector::trusted(std::move(v)), it, r, premise};
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= s;
    v = std::move(w);
  }
  std::ostringstream os;
  os << "NoConvergence(" << max_iters << ")" << (premise ? "" : ": matrix is periodic or reducible");
  throw Error(ErrorCode::NoConvergence, os.str(), max_iters);
}

CutBoundReport lemma51_cut_bound(const StochasticMatrix& m, const StochasticVector& pi) {
  const std::size_t n = m.dim();
  require_cut_dim(n);
  if (pi.dim() != n) throw Error(ErrorCode::DimensionMismatch, "pi has wrong dimension");
  const auto image = left_multiply(pi.values(), m.matrix());
  const double r = l1_distance(image, pi.values());
  if (r > 1e-10) {
    std::ostringstream os;
    os << "NotAFixedVector: ||pi^T A - pi^T||_1 = " << r;
    throw Error(ErrorCode::NotAFixedVector, os.str(), 0, 0, r);
  }
  if (!(pi.min() > 0.0)) throw Error(ErrorCode::InvalidArgument, "pi must be strictly positive");
  CutBoundReport rep{pi.min() / pi.max(), std::numeric_limits<double>::infinity(), {}, true};
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  std::uint64_t worst = 0;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    const CutFlow f = cut_flow(m.matrix(), mask);
    const double slack = f.outflow - rep.ratio * f.inflow;
    if (slack < rep.worst_slack) {
      rep.worst_slack = slack;
      worst = mask;
    }
  }
  if (n == 1) rep.worst_slack = 0.0;
  rep.witness_cut = mask_subset(worst, n);
  rep.holds = rep.worst_slack >= -1e-12;
  return rep;
}

double theorem52_alpha(double p_star, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::OutOfRange, "m must be >= 1");
  const double md = static_cast<double>(m);
  if (!(p_star > 0.0) || p_star * md > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "OutOfRange: p* = " << p_star << " must lie in (0, 1/m]";
    throw Error(ErrorCode::OutOfRange, os.str(), m, 0, p_star);
  }
  if (std::abs(p_star * md - 1.0) <= 1e-12) return 1.0;
  return std::min(1.0, p_star / (1.0 - (md - 1.0) * p_star));
}

ColumnSupportTracker column_support_track(const ChainSpec& chain, std::size_t column, std::size_t horizon,
                                          std::size_t t0, double positivity_eps) {
  if (!chain.deterministic()) throw Error(ErrorCode::NotDeterministic, "column support tracking needs a deterministic chain");
  const std::size_t m = chain.dim();
  if (column >= m) throw Error(ErrorCode::OutOfRange, "column out of range", column);
  ColumnSupportTracker t;
  t.column = column;
  t.t0 = t0;
  ProductAccumulator acc(m, t0);
  auto record = [&] {
    ColumnSupportRecord rec{acc.k(), {}, 1.0};
    double mu = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < m; ++l) {
      const double v = acc.product()(l, column);
      if (v > positivity_eps) {
        rec.support.push_back(l);
        mu = std::min(mu, v);
      }
    }
    rec.mu = rec.support.empty() ? 0.0 : mu;
    t.records.push_back(std::move(rec));
  };
  record();
  for (std::size_t k = t0 + 1; k <= t0 + horizon; ++k) {
    acc.absorb(chain.matrix_at(k));
    record();
  }
  return t;
}

double repeated_power(double gamma, std::size_t n) {
  double v = 1.0;
  for (std::size_t i = 0; i < n; ++i) v *= gamma;
  return v;
}

ColumnSupportCheck check_column_support(const ColumnSupportTracker& tracker, double gamma) {
  ColumnSupportCheck c;
  c.worst_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < tracker.records.size(); ++r) {
    const auto& rec = tracker.records[r];
    if (r > 0) {
      const auto& prev = tracker.records[r - 1].support;
      if (!std::includes(rec.support.begin(), rec.support.end(), prev.begin(), prev.end())) c.monotone = false;
    }
    if (rec.support.empty()) {
      ++c.mu_violations;
      c.worst_ratio = 0.0;
      continue;
    }
    const double bound = repeated_power(gamma, rec.support.size() - 1);
    if (rec.mu < bound) ++c.mu_violations;
    c.worst_ratio = std::min(c.worst_ratio, rec.mu / bound);
  }
  return c;
}

ColumnAverageReport column_average_bound_check(const ChainSpec& chain, double gamma, std::size_t horizon,
                                               std::size_t t0_stride) {
  if (!(gamma > 0.0) || gamma > 1.0) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
  if (t0_stride == 0) throw Error(ErrorCode::InvalidArgument, "t0_stride must be >= 1");
  const std::size_t m = chain.dim();
  const double inv_m = 1.0 / static_cast<double>(m);
  ColumnAverageReport rep;
  rep.bound = std::min(inv_m, repeated_power(gamma, m - 1));
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const double threshold = rep.bound * (1.0 - 1e-12);
  for (std::size_t t0 = 0; t0 < horizon; t0 += t0_stride) {
    ProductAccumulator acc(m, t0);
    for (std::size_t k = t0 + 1; k <= horizon; ++k) {
      acc.absorb(chain.expected_matrix(k));
      for (std::size_t j = 0; j < m; ++j) {
        double col = 0.0;
        for (std::size_t l = 0; l < m; ++l) col += acc.product()(l, j);
        const double avg = col * inv_m;
        ++rep.checked;
        const double margin = avg - rep.bound;
        if (margin < rep.worst_margin) {
          rep.worst_margin = margin;
          rep.worst_k = k;
          rep.worst_t0 = t0;
        }
        if (avg < threshold) ++rep.violations;
      }
    }
  }
  return rep;
}

}  // namespace stochchain
