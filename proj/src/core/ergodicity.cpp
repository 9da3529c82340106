#include "core/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/union_find.hpp"

namespace stochchain {

const StochasticVector& AbsoluteProbabilitySequence::at(std::size_t k) const {
  if (k >= vectors.size()) {
    std::ostringstream os;
    os << "absolute probability sequence covers k <= " << horizon << ", asked for " << k;
    throw Error(ErrorCode::OutOfRange, os.str(), k);
  }
  return vectors[k];
}

double AbsoluteProbabilitySequence::max_residual() const {
  double r = 0.0;
  for (double x : residuals) r = std::max(r, x);
  return r;
}

namespace {

std::vector<double> residuals_of(const ChainSpec& chain, const std::vector<StochasticVector>& vectors) {
  std::vector<double> r;
  for (std::size_t k = 0; k + 1 < vectors.size(); ++k) {
    const auto image = left_multiply(vectors[k + 1].values(), chain.expected_matrix(k + 1).matrix());
    r.push_back(l1_distance(image, vectors[k].values()));
  }
  return r;
}

double min_entry(const std::vector<StochasticVector>& vectors) {
  double p = std::numeric_limits<double>::infinity();
  for (const auto& v : vectors) p = std::min(p, v.min());
  return p;
}

double max_residual_in(const AbsoluteProbabilitySequence& pi, std::size_t from, std::size_t to) {
  double r = 0.0;
  for (std::size_t k = from; k < to && k < pi.residuals.size(); ++k) r = std::max(r, pi.residuals[k]);
  return r;
}

void require_cover(const AbsoluteProbabilitySequence& pi, std::size_t last) {
  if (pi.vectors.size() <= last) {
    std::ostringstream os;
    os << "absolute probability sequence ends at k = " << pi.horizon << " but k = " << last << " is needed";
    throw Error(ErrorCode::OutOfRange, os.str(), last);
  }
}

std::pair<double, double> range_of(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

double pairwise_dissipation(const Matrix& h, std::span<const double> x) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double diff = x[i] - x[j];
      d += h(i, j) * diff * diff;
    }
  return d;
}

}  // namespace

AbsoluteProbabilitySequence backward_absolute_probability(const ChainSpec& chain, std::size_t horizon,
                                                          std::optional<StochasticVector> terminal) {
  if (horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  const std::size_t m = chain.dim();
  StochasticVector last = terminal ? std::move(*terminal) : StochasticVector::uniform(m);
  if (last.dim() != m) throw Error(ErrorCode::DimensionMismatch, "terminal vector has wrong dimension");

  AbsoluteProbabilitySequence seq;
  seq.horizon = horizon;
  seq.vectors.assign(horizon + 1, last);
  for (std::size_t k = horizon; k-- > 0;)
    seq.vectors[k] = StochasticVector::trusted(left_multiply(seq.vectors[k + 1].values(), chain.expected_matrix(k + 1).matrix()));
  seq.residuals = residuals_of(chain, seq.vectors);
  seq.p_star_estimate = min_entry(seq.vectors);
  return seq;
}

AbsoluteProbabilitySequence absolute_probability_from(const ChainSpec& chain, std::vector<StochasticVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::InvalidArgument, "empty absolute probability sequence");
  for (const auto& v : vectors)
    if (v.dim() != chain.dim()) throw Error(ErrorCode::DimensionMismatch, "sequence vector has wrong dimension");
  AbsoluteProbabilitySequence seq;
  seq.horizon = vectors.size() - 1;
  seq.vectors = std::move(vectors);
  seq.residuals = residuals_of(chain, seq.vectors);
  seq.p_star_estimate = min_entry(seq.vectors);
  return seq;
}

double verify_absolute_probability(const ChainSpec& chain, const AbsoluteProbabilitySequence& seq) {
  for (const auto& v : seq.vectors)
    if (v.dim() != chain.dim()) throw Error(ErrorCode::DimensionMismatch, "sequence vector has wrong dimension");
  double r = 0.0;
  for (double x : residuals_of(chain, seq.vectors)) r = std::max(r, x);
  return r;
}

LyapunovSpec LyapunovSpec::square() { return LyapunovSpec(Kind::Square); }
LyapunovSpec LyapunovSpec::absolute() { return LyapunovSpec(Kind::Absolute); }

LyapunovSpec LyapunovSpec::power(double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "power g needs p >= 1 for convexity");
  LyapunovSpec g(Kind::Power);
  g.p_ = p;
  return g;
}

LyapunovSpec LyapunovSpec::piecewise_linear(std::vector<double> breakpoints, std::vector<double> slopes) {
  if (slopes.size() != breakpoints.size() + 1)
    throw Error(ErrorCode::InvalidArgument, "piecewise-linear g needs one more slope than breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i] > breakpoints[i - 1])) throw Error(ErrorCode::InvalidArgument, "breakpoints must increase");
  for (std::size_t i = 1; i < slopes.size(); ++i)
    if (slopes[i] < slopes[i - 1]) throw Error(ErrorCode::InvalidArgument, "slopes must be nondecreasing (convexity)");
  LyapunovSpec g(Kind::PiecewiseLinear);
  g.breaks_ = std::move(breakpoints);
  g.slopes_ = std::move(slopes);
  return g;
}

std::string LyapunovSpec::name() const {
  switch (kind_) {
    case Kind::Square: return "square";
    case Kind::Absolute: return "absolute";
    case Kind::Power: {
      std::ostringstream os;
      os << "power:" << p_;
      return os.str();
    }
    case Kind::PiecewiseLinear: return "piecewise-linear";
  }
  return "unknown";
}

double LyapunovSpec::operator()(double s) const {
  switch (kind_) {
    case Kind::Square: return s * s;
    case Kind::Absolute: return std::abs(s);
    case Kind::Power: return std::pow(std::abs(s), p_);
    case Kind::PiecewiseLinear: {
      if (breaks_.empty()) return slopes_[0] * s;
      if (s <= breaks_[0]) return slopes_[0] * (s - breaks_[0]);
      double v = 0.0;
      for (std::size_t t = 0; t < breaks_.size(); ++t) {
        const double end = t + 1 < breaks_.size() ? breaks_[t + 1] : std::numeric_limits<double>::infinity();
        if (s <= end) return v + slopes_[t + 1] * (s - breaks_[t]);
        v += slopes_[t + 1] * (end - breaks_[t]);
      }
      return v;
    }
  }
  return 0.0;
}

double LyapunovSpec::sup_abs(double lo, double hi) const {
  double s = std::max(std::abs((*this)(lo)), std::abs((*this)(hi)));
  if (lo <= 0.0 && 0.0 <= hi) s = std::max(s, std::abs((*this)(0.0)));
  for (double b : breaks_)
    if (lo < b && b < hi) s = std::max(s, std::abs((*this)(b)));
  return s;
}

double lyapunov_value(const LyapunovSpec& g, const StochasticVector& pi, std::span<const double> x) {
  if (x.size() != pi.dim()) throw Error(ErrorCode::DimensionMismatch, "x and pi differ in dimension");
  double weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) weighted += pi[i] * g(x[i]);
  return weighted - g(dot(pi.values(), x));
}

Matrix expected_weighted_gram(const StepDistribution& dist, const StochasticVector& w) {
  const std::size_t m = dist.dim();
  Matrix h(m);
  for (const auto& wm : dist.support()) {
    for (std::size_t l = 0; l < m; ++l) {
      const double c = wm.probability * w[l];
      if (c == 0.0) continue;
      const auto row = wm.matrix.row(l);
      for (std::size_t i = 0; i < m; ++i) {
        if (row[i] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) h(i, j) += c * row[i] * row[j];
      }
    }
  }
  return h;
}

SupermartingaleReport supermartingale_check(const ChainSpec& chain, const LyapunovSpec& g,
                                            const AbsoluteProbabilitySequence& pi, std::span<const double> v,
                                            std::size_t t0, std::size_t horizon, std::uint64_t seed,
                                            double tolerance) {
  if (v.size() != chain.dim()) throw Error(ErrorCode::DimensionMismatch, "start vector has wrong dimension");
  require_cover(pi, t0 + horizon);
  const SamplePath path = sample_path(chain, seed, t0, horizon);

  SupermartingaleReport rep;
  rep.tolerance = tolerance;
  rep.min_slack = std::numeric_limits<double>::infinity();
  std::vector<double> x(v.begin(), v.end());
  for (std::size_t s = 0; s < horizon; ++s) {
    const std::size_t k = t0 + s;
    const double now = lyapunov_value(g, pi.at(k), x);
    double next = 0.0;
    for (const auto& wm : chain.step(k + 1).support())
      next += wm.probability * lyapunov_value(g, pi.at(k + 1), wm.matrix.matrix() * x);
    const double slack = now - next;
    rep.slack.push_back(slack);
    if (slack < rep.min_slack) {
      rep.min_slack = slack;
      rep.worst_k = k;
    }
    x = path.matrix(s).matrix() * x;
  }
  const auto [lo, hi] = range_of(v);
  rep.max_residual = max_residual_in(pi, t0, t0 + horizon);
  rep.allowance = static_cast<double>(horizon) * rep.max_residual * (1.0 + g.sup_abs(lo, hi));
  rep.compliant = rep.min_slack >= -(tolerance + rep.allowance);
  return rep;
}

DecreaseCertificate quadratic_decrease_certificate(const ChainSpec& chain, const AbsoluteProbabilitySequence& pi,
                                                   std::span<const double> v, std::size_t t0, std::size_t horizon,
                                                   std::uint64_t seed, double tolerance) {
  if (v.size() != chain.dim()) throw Error(ErrorCode::DimensionMismatch, "start vector has wrong dimension");
  require_cover(pi, t0 + horizon);
  const SamplePath path = sample_path(chain, seed, t0, horizon);
  const auto g = LyapunovSpec::square();

  DecreaseCertificate cert;
  cert.tolerance = tolerance;
  cert.min_slack = std::numeric_limits<double>::infinity();
  std::vector<double> x(v.begin(), v.end());
  const double start_average = dot(pi.at(t0).values(), x);
  for (std::size_t s = 0; s < horizon; ++s) {
    const std::size_t k = t0 + s;
    const auto& dist = chain.step(k + 1);
    const auto& pi_now = pi.at(k);
    const auto& pi_next = pi.at(k + 1);

    CertificateRecord rec;
    rec.k = k;
    rec.value = lyapunov_value(g, pi_now, x);
    rec.h = expected_weighted_gram(dist, pi_next);
    rec.dissipation = pairwise_dissipation(rec.h, x);
    rec.weighted_average = dot(pi_now.values(), x);
    rec.equality_branch = true;
    for (const auto& wm : dist.support()) {
      const auto y = wm.matrix.matrix() * x;
      rec.expected_next += wm.probability * lyapunov_value(g, pi_next, y);
      rec.expected_next_average += wm.probability * dot(pi_next.values(), y);
      const auto image = left_multiply(pi_next.values(), wm.matrix.matrix());
      if (wm.probability > 0.0 && l1_distance(image, pi_now.values()) > 1e-12) rec.equality_branch = false;
    }
    rec.slack = rec.value - rec.dissipation - rec.expected_next;

    cert.min_slack = std::min(cert.min_slack, rec.slack);
    if (rec.equality_branch) {
      ++cert.equality_steps;
      cert.max_abs_equality_slack = std::max(cert.max_abs_equality_slack, std::abs(rec.slack));
    }
    cert.martingale_gap = std::max(cert.martingale_gap, std::abs(rec.expected_next_average - rec.weighted_average));
    cert.weighted_average_drift = std::max(cert.weighted_average_drift, std::abs(rec.weighted_average - start_average));
    cert.records.push_back(std::move(rec));
    x = path.matrix(s).matrix() * x;
  }
  cert.weighted_average_drift =
      std::max(cert.weighted_average_drift, std::abs(dot(pi.at(t0 + horizon).values(), x) - start_average));

  const auto [lo, hi] = range_of(v);
  cert.max_residual = max_residual_in(pi, t0, t0 + horizon);
  cert.allowance = static_cast<double>(horizon) * cert.max_residual * (1.0 + g.sup_abs(lo, hi));
  const double floor = tolerance + cert.allowance;
  cert.compliant = cert.min_slack >= -floor && cert.max_abs_equality_slack <= floor;
  return cert;
}

DissipationReport dissipation_sum_bound(const ChainSpec& chain, const AbsoluteProbabilitySequence& pi,
                                        std::span<const double> v, std::size_t t0, std::size_t horizon,
                                        std::size_t n_paths, std::uint64_t seed, double allowance) {
  const std::size_t m = chain.dim();
  if (v.size() != m) throw Error(ErrorCode::DimensionMismatch, "start vector has wrong dimension");
  require_cover(pi, t0 + horizon);

  DissipationReport rep;
  rep.n_paths = n_paths;
  rep.initial_value = lyapunov_value(LyapunovSpec::square(), pi.at(t0), v);

  std::vector<Matrix> grams;
  grams.reserve(horizon);
  for (std::size_t s = 0; s < horizon; ++s) grams.push_back(expected_weighted_gram(chain.step(t0 + s + 1), pi.at(t0 + s + 1)));

  // Second moment E[x x^T].
  Matrix second(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) second(i, j) = v[i] * v[j];
  double total = 0.0;
  for (std::size_t s = 0; s < horizon; ++s) {
    const Matrix& h = grams[s];
    double ed = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) ed += h(i, j) * (second(i, i) + second(j, j) - 2.0 * second(i, j));
    const double prev = total;
    total += ed;
    if (total < prev - 1e-15) rep.monotone = false;
    rep.partial_sums.push_back(total);

    Matrix next(m);
    for (const auto& wm : chain.step(t0 + s + 1).support()) {
      const Matrix& q = wm.matrix.matrix();
      next = next + wm.probability * (q * second * q.transpose());
    }
    second = std::move(next);
  }
  const auto& pi_end = pi.at(t0 + horizon);
  double ev = 0.0;
  for (std::size_t i = 0; i < m; ++i) ev += pi_end[i] * second(i, i);
  const auto s_pi = second * pi_end.values();
  rep.final_expected_value = ev - dot(pi_end.values(), s_pi);

  const auto [lo, hi] = range_of(v);
  const double res = max_residual_in(pi, t0, t0 + horizon);
  rep.allowance = allowance + static_cast<double>(horizon) * res * (1.0 + std::max(lo * lo, hi * hi));
  rep.bounded = rep.partial_sums.empty() || rep.partial_sums.back() <= rep.initial_value + rep.allowance;

  double sum_totals = 0.0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    const SamplePath path = sample_path(chain, seed + p, t0, horizon);
    std::vector<double> x(v.begin(), v.end());
    double path_total = 0.0;
    for (std::size_t s = 0; s < horizon; ++s) {
      path_total += pairwise_dissipation(grams[s], x);
      x = path.matrix(s).matrix() * x;
    }
    sum_totals += path_total;
    rep.path_max_total = std::max(rep.path_max_total, path_total);
  }
  rep.path_mean_total = n_paths > 0 ? sum_totals / static_cast<double>(n_paths) : 0.0;
  return rep;
}

ErgodicityProfile mutual_ergodicity_profile(const ChainSpec& chain, std::size_t t0, std::size_t horizon,
                                            std::uint64_t seed, double tol, RowNorm norm) {
  const std::size_t m = chain.dim();
  const SamplePath path = sample_path(chain, seed, t0, horizon);
  ErgodicityProfile prof;
  prof.t0 = t0;
  prof.horizon = horizon;
  prof.tol = tol;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) prof.pairs.emplace_back(i, j);
  prof.decay.assign(prof.pairs.size(), {});
  prof.tail_max.assign(prof.pairs.size(), 0.0);

  std::vector<std::size_t> offsets;
  for (std::size_t s = 1; s < horizon; s *= 2) offsets.push_back(s);
  offsets.push_back(horizon);
  for (std::size_t s : offsets) prof.ks.push_back(t0 + s);

  const std::size_t tail_from = std::max<std::size_t>(1, horizon / 2);
  ProductAccumulator acc(m, t0);
  std::size_t next_offset = 0;
  for (std::size_t s = 1; s <= horizon; ++s) {
    acc.absorb(path.matrix(s - 1));
    const bool sample = next_offset < offsets.size() && offsets[next_offset] == s;
    if (!sample && s < tail_from) continue;
    for (std::size_t p = 0; p < prof.pairs.size(); ++p) {
      const auto [i, j] = prof.pairs[p];
      const double d = row_disagreement(acc.product(), i, j, norm);
      if (sample) prof.decay[p].push_back(d);
      if (s >= tail_from) prof.tail_max[p] = std::max(prof.tail_max[p], d);
    }
    if (sample) ++next_offset;
  }
  const StochasticMatrix final_product = acc.product();

  prof.index_variation.assign(m, 0.0);
  ProductAccumulator again(m, t0);
  for (std::size_t s = 1; s <= horizon; ++s) {
    again.absorb(path.matrix(s - 1));
    if (s < tail_from) continue;
    for (std::size_t i = 0; i < m; ++i)
      prof.index_variation[i] =
          std::max(prof.index_variation[i], row_distance(again.product().row(i), final_product.row(i), norm));
  }
  for (double t : prof.tail_max) prof.mutually_ergodic.push_back(t <= tol);
  for (double t : prof.index_variation) prof.index_convergent.push_back(t <= tol);
  return prof;
}

ConsensusClusterReport consensus_clusters(const ChainSpec& chain, std::size_t t0, std::size_t horizon,
                                          std::uint64_t seed, double tol, const FlowGraph* graph) {
  const std::size_t m = chain.dim();
  const SamplePath path = sample_path(chain, seed, t0, horizon);
  ProductAccumulator acc(m, t0);
  for (std::size_t s = 0; s < horizon; ++s) acc.absorb(path.matrix(s));

  ConsensusClusterReport rep;
  rep.t0 = t0;
  rep.horizon = horizon;
  rep.tol = tol;
  rep.product = acc.product();
  UnionFind uf(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (row_disagreement(rep.product, i, j) <= tol) uf.unite(i, j);
  rep.clusters = uf.groups();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (uf.same(i, j))
        rep.max_intra_cluster_disagreement =
            std::max(rep.max_intra_cluster_disagreement, row_disagreement(rep.product, i, j));
  if (graph != nullptr) {
    rep.tau = graph->tau;
    rep.count_within_tau = rep.clusters.size() <= graph->tau;
    rep.matches_components = rep.clusters == graph->components;
  }
  return rep;
}

DecoupledChain decouple(const ChainSpec& chain, std::span<const std::size_t> subset, std::size_t horizon) {
  const std::size_t m = chain.dim();
  DecoupledChain out;
  out.in_subset.assign(m, false);
  for (std::size_t i : subset) {
    if (i >= m) throw Error(ErrorCode::OutOfRange, "subset index out of range", i);
    out.in_subset[i] = true;
  }
  const auto members = static_cast<std::size_t>(std::count(out.in_subset.begin(), out.in_subset.end(), true));
  if (members == 0 || members == m) throw Error(ErrorCode::TrivialSubset, "decouple needs a nonempty proper subset");

  out.l1_gap = Matrix(m);
  double running = 0.0;
  for (std::size_t k = 1; k <= horizon; ++k) {
    const auto& a = chain.expected_matrix(k);
    Matrix b(m);
    for (std::size_t i = 0; i < m; ++i) {
      double diag = a(i, i);
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        if (out.in_subset[i] == out.in_subset[j])
          b(i, j) = a(i, j);
        else
          diag += a(i, j);
      }
      b(i, i) = diag;
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double gap = std::abs(a(i, j) - b(i, j));
        out.l1_gap(i, j) += gap;
        running += gap;
      }
    out.cumulative_gap.push_back(running);
    out.matrices.push_back(StochasticMatrix::trusted(std::move(b)));
  }
  return out;
}

}  // namespace stochchain
