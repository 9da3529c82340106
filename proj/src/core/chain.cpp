#include "core/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "core/rng.hpp"

namespace stochchain {

namespace {

// Platform-independent uniform draws on top of mt19937_64.
class Uniform01 {
 public:
  explicit Uniform01(std::uint64_t seed) : gen_(seed) {}
  double operator()() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double in(double lo, double hi) { return lo + (hi - lo) * (*this)(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>((*this)() * static_cast<double>(n)); }
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[index(i)]);
    return p;
  }
  // Flat Dirichlet weights.
  std::vector<double> simplex(std::size_t n) {
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& x : w) {
      x = -std::log(1.0 - (*this)());
      s += x;
    }
    for (auto& x : w) x /= s;
    return w;
  }

 private:
  std::mt19937_64 gen_;
};

Matrix permutation_matrix(const std::vector<std::size_t>& p) {
  Matrix m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(i, p[i]) = 1.0;
  return m;
}

}  // namespace

StepDistribution StepDistribution::point(StochasticMatrix m) {
  return StepDistribution({WeightedMatrix{std::move(m), 1.0}});
}

StepDistribution::StepDistribution(std::vector<WeightedMatrix> support, double tol)
    : support_(std::move(support)) {
  if (support_.empty()) throw Error(ErrorCode::InvalidArgument, "step distribution has empty support");
  const std::size_t m = support_.front().matrix.dim();
  double total = 0.0;
  for (std::size_t q = 0; q < support_.size(); ++q) {
    const auto& wm = support_[q];
    if (wm.matrix.dim() != m)
      throw Error(ErrorCode::DimensionMismatch, "support matrices differ in dimension", q);
    if (!(wm.probability >= 0.0) || !std::isfinite(wm.probability))
      throw Error(ErrorCode::Validation, "negative probability in step distribution", q, 0, wm.probability);
    total += wm.probability;
  }
  if (std::abs(total - 1.0) > tol)
    throw Error(ErrorCode::Validation, "step probabilities do not sum to 1", 0, 0, total);
  if (support_.size() == 1) {
    expected_ = support_.front().matrix;
    return;
  }
  Matrix e(m);
  for (const auto& wm : support_) e = e + wm.probability * wm.matrix.matrix();
  expected_ = StochasticMatrix::trusted(std::move(e));
}

std::size_t StepDistribution::sample_index(double u) const {
  double acc = 0.0;
  for (std::size_t q = 0; q + 1 < support_.size(); ++q) {
    acc += support_[q].probability;
    if (u < acc) return q;
  }
  // Skip trailing zero-probability entries.
  std::size_t q = support_.size() - 1;
  while (q > 0 && support_[q].probability == 0.0) --q;
  return q;
}

const char* to_string(ChainKind kind) {
  switch (kind) {
    case ChainKind::Static: return "static";
    case ChainKind::Periodic: return "periodic";
    case ChainKind::Explicit: return "explicit";
    case ChainKind::IndependentFiniteSupport: return "independent";
    case ChainKind::Iid: return "iid";
  }
  return "unknown";
}

const char* to_string(TailRule tail) {
  switch (tail) {
    case TailRule::Cycle: return "cycle";
    case TailRule::RepeatLast: return "repeat-last";
    case TailRule::Identity: return "identity";
  }
  return "unknown";
}

const char* to_string(FlowStatus status) {
  switch (status) {
    case FlowStatus::Diverges: return "diverges";
    case FlowStatus::Summable: return "summable";
    case FlowStatus::Unknown: return "unknown";
  }
  return "unknown";
}

ChainSpec ChainSpec::build(ChainKind kind, std::vector<StepDistribution> steps, TailRule tail,
                           std::size_t cycle_start) {
  if (steps.empty()) throw Error(ErrorCode::InvalidArgument, "chain needs at least one step");
  const std::size_t m = steps.front().dim();
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (steps[i].dim() != m) throw Error(ErrorCode::DimensionMismatch, "chain matrices differ in dimension", i);
  if (tail == TailRule::Cycle && cycle_start >= steps.size())
    throw Error(ErrorCode::InvalidArgument, "cycle_start must index into the step list");
  auto d = std::make_shared<Data>();
  d->dim = m;
  d->kind = kind;
  d->tail = tail;
  d->cycle_start = tail == TailRule::Cycle ? cycle_start : 0;
  d->dists = std::move(steps);
  d->dists.push_back(StepDistribution::point(StochasticMatrix::identity(m)));
  return ChainSpec(std::move(d));
}

namespace {
std::vector<StepDistribution> points(std::vector<StochasticMatrix> ms) {
  std::vector<StepDistribution> out;
  out.reserve(ms.size());
  for (auto& m : ms) out.push_back(StepDistribution::point(std::move(m)));
  return out;
}
}  // namespace

ChainSpec ChainSpec::static_chain(StochasticMatrix m) {
  std::vector<StochasticMatrix> v;
  v.push_back(std::move(m));
  return build(ChainKind::Static, points(std::move(v)), TailRule::RepeatLast, 0);
}

ChainSpec ChainSpec::periodic(std::vector<StochasticMatrix> period) {
  return build(ChainKind::Periodic, points(std::move(period)), TailRule::Cycle, 0);
}

ChainSpec ChainSpec::explicit_sequence(std::vector<StochasticMatrix> seq, TailRule tail) {
  if (tail == TailRule::Cycle)
    throw Error(ErrorCode::InvalidArgument, "explicit sequences take a repeat-last or identity tail");
  return build(ChainKind::Explicit, points(std::move(seq)), tail, 0);
}

ChainSpec ChainSpec::independent(std::vector<StepDistribution> steps, TailRule tail, std::size_t cycle_start) {
  return build(ChainKind::IndependentFiniteSupport, std::move(steps), tail, cycle_start);
}

ChainSpec ChainSpec::iid(StepDistribution dist) {
  std::vector<StepDistribution> v;
  v.push_back(std::move(dist));
  return build(ChainKind::Iid, std::move(v), TailRule::RepeatLast, 0);
}

ChainSpec ChainSpec::with_flow_declaration(std::vector<FlowDeclaration> decl) const {
  for (auto& e : decl) {
    if (e.i >= dim() || e.j >= dim() || e.i == e.j)
      throw Error(ErrorCode::InvalidArgument, "flow declaration names an invalid pair", e.i, e.j);
    if (e.i > e.j) std::swap(e.i, e.j);
  }
  auto d = std::make_shared<Data>(*data_);
  d->flow = std::move(decl);
  return ChainSpec(std::move(d));
}

ChainSpec ChainSpec::with_seed(std::uint64_t seed) const {
  auto d = std::make_shared<Data>(*data_);
  d->seed = seed;
  return ChainSpec(std::move(d));
}

bool ChainSpec::deterministic() const noexcept {
  return kind() == ChainKind::Static || kind() == ChainKind::Periodic || kind() == ChainKind::Explicit;
}

std::size_t ChainSpec::step_index(std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::OutOfRange, "chain steps are indexed from k = 1");
  const std::size_t n = data_->dists.size() - 1;
  if (k <= n) return k - 1;
  switch (data_->tail) {
    case TailRule::Cycle: {
      const std::size_t c = data_->cycle_start;
      return c + (k - 1 - c) % (n - c);
    }
    case TailRule::RepeatLast: return n - 1;
    case TailRule::Identity: return n;
  }
  return n;
}

std::vector<std::size_t> ChainSpec::recurring_indices() const {
  const std::size_t n = data_->dists.size() - 1;
  std::vector<std::size_t> out;
  switch (data_->tail) {
    case TailRule::Cycle:
      for (std::size_t i = data_->cycle_start; i < n; ++i) out.push_back(i);
      break;
    case TailRule::RepeatLast: out.push_back(n - 1); break;
    case TailRule::Identity: out.push_back(n); break;
  }
  return out;
}

const StochasticMatrix& ChainSpec::matrix_at(std::size_t k) const {
  if (!deterministic())
    throw Error(ErrorCode::NotDeterministic, std::string("matrix_at on a random chain of kind ") + to_string(kind()));
  return step(k).support().front().matrix;
}

const StochasticMatrix& SamplePath::matrix(std::size_t i) const {
  const auto [d, q] = choices_.at(i);
  return chain_.distributions()[d].support()[q].matrix;
}

SamplePath sample_path(const ChainSpec& chain, std::uint64_t seed, std::size_t t0, std::size_t horizon) {
  if (horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  SamplePath path(chain, seed, t0);
  path.choices_.reserve(horizon);
  for (std::size_t k = t0 + 1; k <= t0 + horizon; ++k) {
    const std::size_t d = chain.step_index(k);
    const auto& dist = chain.distributions()[d];
    const std::size_t q = dist.degenerate() ? 0 : dist.sample_index(counter_uniform(seed, k, 0));
    path.choices_.emplace_back(d, q);
  }
  return path;
}

Trajectory simulate_dynamics(const SamplePath& path, std::span<const double> v) {
  if (v.size() != path.dim()) throw Error(ErrorCode::DimensionMismatch, "initial vector has wrong dimension");
  Trajectory t;
  t.t0 = path.t0();
  t.points.reserve(path.horizon() + 1);
  t.points.emplace_back(v.begin(), v.end());
  for (std::size_t i = 0; i < path.horizon(); ++i) t.points.push_back(path.matrix(i).matrix() * t.points.back());
  return t;
}

ChainSpec fixture_counterexample_4x4() {
  const Matrix odd{{1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 0, 1}, {0, 0, 0, 1}};
  const Matrix even{{1, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}};
  return ChainSpec::periodic({validate(odd), validate(even)});
}

ChainSpec generator_doubly_stochastic(std::size_t m, std::uint64_t seed, std::size_t steps,
                                      const DoublyStochasticOptions& opts) {
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "doubly stochastic generator needs m >= 2");
  if (steps == 0 || opts.support_size == 0) throw Error(ErrorCode::InvalidArgument, "steps and support must be >= 1");
  if (opts.identity_weight < 0.0 || opts.identity_weight > 1.0)
    throw Error(ErrorCode::InvalidArgument, "identity_weight must lie in [0, 1]");
  Uniform01 rng(seed);
  const std::size_t nperm = opts.permutations == 0 ? m : opts.permutations;
  std::vector<StepDistribution> dists;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<WeightedMatrix> support;
    const auto probs = rng.simplex(opts.support_size);
    for (std::size_t q = 0; q < opts.support_size; ++q) {
      const auto w = rng.simplex(nperm);
      Matrix acc = opts.identity_weight * Matrix::identity(m);
      for (std::size_t r = 0; r < nperm; ++r)
        acc = acc + ((1.0 - opts.identity_weight) * w[r]) * permutation_matrix(rng.permutation(m));
      support.push_back({StochasticMatrix::trusted(std::move(acc)), probs[q]});
    }
    dists.emplace_back(std::move(support));
  }
  return ChainSpec::independent(std::move(dists));
}

ChainSpec generator_bounded_bidirectional(std::size_t m, double gamma, std::uint64_t seed, std::size_t steps,
                                          double edge_probability) {
  if (m == 0 || steps == 0) throw Error(ErrorCode::InvalidArgument, "m and steps must be >= 1");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  if (gamma * static_cast<double>(m) > 1.0 + 1e-15) {
    std::ostringstream os;
    os << "InfeasibleBound: gamma*m = " << gamma * static_cast<double>(m) << " > 1";
    throw Error(ErrorCode::InfeasibleBound, os.str(), 0, 0, gamma);
  }
  Uniform01 rng(seed);
  std::vector<StochasticMatrix> seq;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (rng() < edge_probability) adj[i][j] = adj[j][i] = true;
    Matrix a(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<std::size_t> nb{i};
      for (std::size_t j = 0; j < m; ++j)
        if (adj[i][j]) nb.push_back(j);
      // Every support entry gets gamma, the remainder is split at random.
      const double spare = std::max(0.0, 1.0 - gamma * static_cast<double>(nb.size()));
      const auto w = rng.simplex(nb.size());
      for (std::size_t t = 0; t < nb.size(); ++t) a(i, nb[t]) = gamma + spare * w[t];
    }
    seq.push_back(validate(a));
  }
  return ChainSpec::explicit_sequence(std::move(seq), TailRule::Identity);
}

namespace {

// Symmetric doubly stochastic block with diagonal >= 0.3 and a connected
// support (contains a cyclic shift).
Matrix random_block(std::size_t s, Uniform01& rng) {
  if (s == 1) return Matrix::identity(1);
  const double w0 = rng.in(0.3, 0.6);
  const double w1 = rng.in(0.1, 1.0 - w0);
  const double w2 = 1.0 - w0 - w1;
  std::vector<std::size_t> cyc(s);
  for (std::size_t i = 0; i < s; ++i) cyc[i] = (i + 1) % s;
  const Matrix c = permutation_matrix(cyc);
  const Matrix p = permutation_matrix(rng.permutation(s));
  return w0 * Matrix::identity(s) + (0.5 * w1) * (c + c.transpose()) + (0.5 * w2) * (p + p.transpose());
}

Matrix embed_blocks(const Matrix& b1, const Matrix& b2) {
  const std::size_t s = b1.dim();
  Matrix out(s + b2.dim());
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) out(i, j) = b1(i, j);
  for (std::size_t i = 0; i < b2.dim(); ++i)
    for (std::size_t j = 0; j < b2.dim(); ++j) out(s + i, s + j) = b2(i, j);
  return out;
}

Matrix with_leak(const Matrix& block, double eps) {
  const std::size_t m = block.dim();
  return (1.0 - eps) * block + (eps / static_cast<double>(m)) * Matrix(m, 1.0);
}

}  // namespace

ChainSpec generator_two_block(std::size_t m, std::size_t split, std::uint64_t seed, const TwoBlockOptions& opts) {
  if (split < 1 || split >= m) throw Error(ErrorCode::InvalidArgument, "two_block needs 1 <= split < m");
  if (opts.support_size == 0) throw Error(ErrorCode::InvalidArgument, "support_size must be >= 1");
  Uniform01 rng(seed);
  std::vector<Matrix> blocks;
  for (std::size_t q = 0; q < opts.support_size; ++q)
    blocks.push_back(embed_blocks(random_block(split, rng), random_block(m - split, rng)));
  const auto probs = rng.simplex(opts.support_size);

  auto make_dist = [&](double eps) {
    std::vector<WeightedMatrix> support;
    for (std::size_t q = 0; q < blocks.size(); ++q)
      support.push_back({StochasticMatrix::trusted(eps > 0.0 ? with_leak(blocks[q], eps) : blocks[q]), probs[q]});
    return StepDistribution(std::move(support));
  };

  std::vector<StepDistribution> dists;
  std::size_t cycle_start = 0;
  switch (opts.leak) {
    case LeakKind::None: dists.push_back(make_dist(0.0)); break;
    case LeakKind::Divergent: dists.push_back(make_dist(opts.leak_weight)); break;
    case LeakKind::Vanishing:
      for (std::size_t k = 1; k <= opts.leak_steps; ++k)
        dists.push_back(make_dist(opts.leak_weight * std::pow(opts.leak_ratio, static_cast<double>(k))));
      dists.push_back(make_dist(0.0));
      cycle_start = opts.leak_steps;
      break;
  }
  ChainSpec chain = ChainSpec::independent(std::move(dists), TailRule::Cycle, cycle_start);

  std::vector<FlowDeclaration> decl;
  const auto recurring = chain.recurring_indices();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const bool cross = (i < split) != (j < split);
      FlowStatus st;
      if (cross) {
        st = opts.leak == LeakKind::Divergent ? FlowStatus::Diverges : FlowStatus::Summable;
      } else {
        bool positive = false;
        for (std::size_t d : recurring) {
          const auto& e = chain.distributions()[d].expected();
          positive = positive || e(i, j) + e(j, i) > 0.0;
        }
        st = positive ? FlowStatus::Diverges : FlowStatus::Summable;
      }
      decl.push_back({i, j, st});
    }
  return chain.with_flow_declaration(std::move(decl));
}

ChainSpec generator_random_independent(std::size_t m, std::uint64_t seed, const RandomIndependentOptions& opts) {
  if (m == 0 || opts.steps == 0 || opts.support_size == 0)
    throw Error(ErrorCode::InvalidArgument, "m, steps and support_size must be >= 1");
  if (opts.min_diagonal < 0.0 || opts.min_diagonal > 1.0)
    throw Error(ErrorCode::InvalidArgument, "min_diagonal must lie in [0, 1]");
  Uniform01 rng(seed);
  std::vector<StepDistribution> dists;
  for (std::size_t s = 0; s < opts.steps; ++s) {
    const auto probs = rng.simplex(opts.support_size);
    std::vector<WeightedMatrix> support;
    for (std::size_t q = 0; q < opts.support_size; ++q) {
      Matrix a(m);
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> raw(m);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          raw[j] = (j != i && rng() < opts.zero_probability) ? 0.0 : rng();
          total += raw[j];
        }
        if (total == 0.0) {
          raw[i] = 1.0;
          total = 1.0;
        }
        for (std::size_t j = 0; j < m; ++j)
          a(i, j) = (1.0 - opts.min_diagonal) * raw[j] / total + (i == j ? opts.min_diagonal : 0.0);
      }
      support.push_back({validate(a, 1e-12, true), probs[q]});
    }
    dists.emplace_back(std::move(support));
  }
  return ChainSpec::independent(std::move(dists));
}

ChainSpec hegselmann_krause_chain(std::vector<double> opinions, double confidence, std::size_t steps) {
  const std::size_t m = opinions.size();
  if (m == 0 || steps == 0) throw Error(ErrorCode::InvalidArgument, "need opinions and steps");
  if (!(confidence >= 0.0)) throw Error(ErrorCode::InvalidArgument, "confidence must be nonnegative");
  std::vector<StochasticMatrix> seq;
  for (std::size_t s = 0; s < steps; ++s) {
    Matrix a(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t count = 0;
      for (std::size_t j = 0; j < m; ++j)
        if (std::abs(opinions[i] - opinions[j]) <= confidence) ++count;
      for (std::size_t j = 0; j < m; ++j)
        if (std::abs(opinions[i] - opinions[j]) <= confidence) a(i, j) = 1.0 / static_cast<double>(count);
    }
    auto am = validate(a);
    opinions = am.matrix() * opinions;
    seq.push_back(std::move(am));
  }
  return ChainSpec::explicit_sequence(std::move(seq), TailRule::Identity);
}

}  // namespace stochchain
