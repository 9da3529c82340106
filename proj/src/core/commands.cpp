#include "core/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>
#include <sstream>

#include "core/chain_io.hpp"

namespace stochchain {

using nlohmann::json;

ExitStatus status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return ExitStatus::Parse;
    case ErrorCode::NegativeEntry:
    case ErrorCode::RowSumOutOfTolerance:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::Validation: return ExitStatus::Validation;
    case ErrorCode::DimensionTooLarge:
    case ErrorCode::DimensionTooLargeForCutEnumeration: return ExitStatus::DimensionCap;
    default: return ExitStatus::Usage;
  }
}

const char* to_string(ExitStatus s) {
  switch (s) {
    case ExitStatus::Ok: return "ok";
    case ExitStatus::Usage: return "usage-error";
    case ExitStatus::Parse: return "parse-error";
    case ExitStatus::Validation: return "validation-error";
    case ExitStatus::DimensionCap: return "dimension-cap";
    case ExitStatus::CertificateViolation: return "certificate-violation";
  }
  return "unknown";
}

void check_config(const RunConfig& cfg) {
  const std::pair<const char*, double> tols[] = {{"validate_tol", cfg.validate_tol},
                                                 {"cluster_tol", cfg.cluster_tol},
                                                 {"divergence_epsilon", cfg.divergence_epsilon},
                                                 {"positivity_epsilon", cfg.positivity_epsilon},
                                                 {"slack_tol", cfg.slack_tol}};
  for (const auto& [name, v] : tols)
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
  if (cfg.horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (cfg.format != "json" && cfg.format != "csv") throw Error(ErrorCode::InvalidArgument, "format must be json or csv");
}

LyapunovSpec parse_lyapunov(const std::string& name) {
  if (name == "square") return LyapunovSpec::square();
  if (name == "absolute") return LyapunovSpec::absolute();
  if (name.rfind("power:", 0) == 0) {
    const std::string arg = name.substr(6);
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), p);
    if (ec != std::errc() || ptr != arg.data() + arg.size())
      throw Error(ErrorCode::InvalidArgument, "bad exponent in " + name);
    return LyapunovSpec::power(p);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown Lyapunov function " + name + " (square, absolute, power:P)");
}

std::string CommandResult::report_text() const { return report.dump(2) + "\n"; }

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_echo(const RunConfig& cfg) {
  return {{"command", cfg.command},
          {"chain_file", cfg.chain_file},
          {"t0", cfg.t0},
          {"horizon", cfg.horizon},
          {"seed", cfg.seed},
          {"validate_tol", cfg.validate_tol},
          {"cluster_tol", cfg.cluster_tol},
          {"divergence_epsilon", cfg.divergence_epsilon},
          {"positivity_epsilon", cfg.positivity_epsilon},
          {"slack_tol", cfg.slack_tol},
          {"flow_policy", to_string(cfg.flow_policy)},
          {"lyapunov", cfg.lyapunov},
          {"x0", cfg.x0},
          {"subset", cfg.subset},
          {"n_paths", cfg.n_paths},
          {"format", cfg.format}};
}

CommandResult start(const RunConfig& cfg) {
  CommandResult r;
  r.report["version"] = kVersion;
  r.report["config"] = config_echo(cfg);
  if (cfg.timestamp) r.report["timestamp"] = utc_timestamp();
  return r;
}

void finish(CommandResult& r) {
  r.report["status"] = to_string(r.status);
  r.report["exit_code"] = static_cast<int>(r.status);
}

void escalate(CommandResult& r, ExitStatus s) {
  if (r.status == ExitStatus::Ok) r.status = s;
}

json error_json(const Error& e) {
  return {{"code", to_string(e.code())}, {"message", e.what()}, {"index", e.index()}};
}

std::string number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::vector<double> start_vector(const ChainSpec& chain, const RunConfig& cfg) {
  if (cfg.x0.empty()) {
    std::vector<double> v(chain.dim());
    std::iota(v.begin(), v.end(), 0.0);
    return v;
  }
  if (cfg.x0.size() != chain.dim()) {
    std::ostringstream os;
    os << "x0 has " << cfg.x0.size() << " entries but the chain has dimension " << chain.dim();
    throw Error(ErrorCode::DimensionMismatch, os.str(), cfg.x0.size());
  }
  return cfg.x0;
}

json witness_json(const std::optional<PairWitness>& w) {
  if (!w) return nullptr;
  return {{"i", w->i}, {"j", w->j}, {"k", w->k}};
}

json flow_graph_json(const FlowGraph& g) {
  json edges = json::array();
  json pairs = json::array();
  for (const auto& e : g.pairs) {
    pairs.push_back({{"i", e.i},
                     {"j", e.j},
                     {"class", to_string(e.cls)},
                     {"divergent", e.divergent()},
                     {"cumulative_flow", e.cumulative_flow},
                     {"tail_mass", e.tail_mass},
                     {"heuristic", e.heuristic}});
    if (e.divergent()) edges.push_back({e.i, e.j});
  }
  return {{"tau", g.tau}, {"connected", g.connected()}, {"components", g.components}, {"edges", edges},
          {"pairs", pairs}};
}

FlowGraph flow_graph_for(const ChainSpec& chain, const RunConfig& cfg) {
  return infinite_flow_graph(chain, cfg.t0 + cfg.horizon, {cfg.flow_policy, cfg.divergence_epsilon});
}

double min_expected_diagonal(const ChainSpec& chain, StepRange range) {
  double d = 1.0;
  std::vector<bool> seen(chain.distributions().size(), false);
  for (std::size_t k = range.first; k <= range.last; ++k) {
    const std::size_t idx = chain.step_index(k);
    if (seen[idx]) continue;
    seen[idx] = true;
    const auto& e = chain.distributions()[idx].expected();
    for (std::size_t i = 0; i < chain.dim(); ++i) d = std::min(d, e(i, i));
  }
  return d;
}

}  // namespace

CommandResult error_result(const RunConfig& cfg, const Error& e) {
  CommandResult r = start(cfg);
  r.status = status_for(e.code());
  r.report["error"] = error_json(e);
  finish(r);
  return r;
}

CommandResult run_validate(const std::string& spec_text, const RunConfig& cfg) {
  CommandResult r = start(cfg);
  try {
    check_config(cfg);
    const RawChainSpec raw = parse_chain_spec(spec_text);
    const ValidationSummary summary = check_chain_spec(raw, cfg.validate_tol);
    json matrices = json::array();
    for (const auto& mc : summary.matrices) {
      json m = {{"index", mc.index}, {"step", mc.step}, {"support", mc.support}, {"ok", mc.ok},
                {"max_row_sum_drift", mc.max_row_sum_drift}};
      if (!mc.ok) {
        m["code"] = to_string(*mc.code);
        m["cause"] = mc.cause;
      }
      matrices.push_back(std::move(m));
    }
    json steps = json::array();
    for (const auto& sc : summary.steps) {
      json s = {{"step", sc.step}, {"ok", sc.ok}, {"probability_sum", sc.probability_sum}};
      if (!sc.ok) s["cause"] = sc.cause;
      steps.push_back(std::move(s));
    }
    r.report["dim"] = raw.dim;
    r.report["kind"] = to_string(raw.kind);
    r.report["matrices"] = std::move(matrices);
    r.report["steps"] = std::move(steps);
    r.report["valid"] = summary.ok();
    if (!summary.ok()) {
      r.status = status_for(*summary.first_error);
      for (const auto& mc : summary.matrices)
        if (!mc.ok) {
          r.report["error"] = {{"code", to_string(*mc.code)}, {"message", "ValidationError(matrix " +
                                                                                std::to_string(mc.index) + "): " +
                                                                                mc.cause},
                               {"index", mc.index}};
          break;
        }
      if (!r.report.contains("error"))
        for (const auto& sc : summary.steps)
          if (!sc.ok) {
            r.report["error"] = {{"code", to_string(ErrorCode::Validation)},
                                 {"message", "ValidationError(step " + std::to_string(sc.step) + "): " + sc.cause},
                                 {"index", sc.step}};
            break;
          }
    }
  } catch (const Error& e) {
    r.status = status_for(e.code());
    r.report["error"] = error_json(e);
  }
  finish(r);
  return r;
}

CommandResult run_analyze(const ChainSpec& chain, const RunConfig& cfg) {
  CommandResult r = start(cfg);
  try {
    check_config(cfg);
    const StepRange range{cfg.t0 + 1, cfg.t0 + cfg.horizon};
    r.report["dim"] = chain.dim();
    r.report["kind"] = to_string(chain.kind());

    json coeff;
    try {
      const auto bal = balancedness_coefficient(chain, range);
      coeff["alpha"] = bal.alpha;
      coeff["alpha_vacuous"] = bal.vacuous;
      coeff["alpha_witness_cut"] = bal.witness_cut ? json(*bal.witness_cut) : json(nullptr);
      coeff["alpha_witness_step"] = bal.witness_step ? json(*bal.witness_step) : json(nullptr);
    } catch (const Error& e) {
      coeff["alpha"] = nullptr;
      coeff["alpha_error"] = error_json(e);
      escalate(r, status_for(e.code()));
    }
    const auto strong = strong_aperiodicity_coefficient(chain, range);
    const auto weak = weak_aperiodicity_coefficient(chain, range);
    const auto diag = expected_diagonal_lower_bound(strong.gamma);
    coeff["gamma_strong"] = strong.gamma;
    coeff["gamma_strong_vacuous"] = strong.vacuous;
    coeff["gamma_strong_witness"] = witness_json(strong.witness);
    coeff["gamma_weak"] = weak.gamma;
    coeff["gamma_weak_vacuous"] = weak.vacuous;
    coeff["gamma_weak_witness"] = witness_json(weak.witness);
    coeff["diagonal_bound"] = {{"value", diag.value}, {"capped", diag.capped}};
    coeff["diagonal_sound_bound"] = expected_diagonal_sound_bound(strong.gamma);
    coeff["min_expected_diagonal"] = min_expected_diagonal(chain, range);
    const auto pi = backward_absolute_probability(chain, cfg.t0 + cfg.horizon);
    coeff["p_star_estimate"] = pi.p_star_estimate;
    r.report["coefficients"] = std::move(coeff);

    r.report["flow_graph"] = flow_graph_json(flow_graph_for(chain, cfg));

    json irr = json::array();
    for (std::size_t idx : chain.recurring_indices()) {
      const auto& m = chain.distributions()[idx].expected();
      json entry = {{"distribution", idx}};
      const bool by_graph = irreducibility_check(m);
      entry["by_graph"] = by_graph;
      entry["period"] = period(m);
      try {
        const bool by_balance = irreducibility_via_balance(m);
        entry["by_balance"] = by_balance;
        entry["agree"] = by_graph == by_balance;
      } catch (const Error& e) {
        entry["by_balance"] = nullptr;
        entry["agree"] = nullptr;
        entry["error"] = error_json(e);
        escalate(r, status_for(e.code()));
      }
      irr.push_back(std::move(entry));
    }
    r.report["irreducibility"] = std::move(irr);
  } catch (const Error& e) {
    r.status = status_for(e.code());
    r.report["error"] = error_json(e);
  }
  finish(r);
  return r;
}

CommandResult run_ergodicity(const ChainSpec& chain, const RunConfig& cfg) {
  CommandResult r = start(cfg);
  try {
    check_config(cfg);
    const std::size_t m = chain.dim();
    const std::size_t last = cfg.t0 + cfg.horizon;
    const auto g = parse_lyapunov(cfg.lyapunov);
    const auto v = start_vector(chain, cfg);
    r.report["dim"] = m;
    r.report["kind"] = to_string(chain.kind());

    const auto pi = backward_absolute_probability(chain, last);
    r.report["absolute_probability"] = {{"horizon", pi.horizon},
                                        {"p_star_estimate", pi.p_star_estimate},
                                        {"max_residual", pi.max_residual()},
                                        {"pi_t0", pi.at(cfg.t0).values()}};

    const auto sm = supermartingale_check(chain, g, pi, v, cfg.t0, cfg.horizon, cfg.seed, cfg.slack_tol);
    const auto cert = quadratic_decrease_certificate(chain, pi, v, cfg.t0, cfg.horizon, cfg.seed, cfg.slack_tol);
    const auto diss = dissipation_sum_bound(chain, pi, v, cfg.t0, cfg.horizon, cfg.n_paths, cfg.seed);
    r.report["certificates"] = {
        {"supermartingale",
         {{"lyapunov", g.name()},
          {"min_slack", sm.min_slack},
          {"worst_k", sm.worst_k},
          {"max_residual", sm.max_residual},
          {"allowance", sm.allowance},
          {"tolerance", sm.tolerance},
          {"compliant", sm.compliant}}},
        {"quadratic",
         {{"min_slack", cert.min_slack},
          {"equality_steps", cert.equality_steps},
          {"max_abs_equality_slack", cert.max_abs_equality_slack},
          {"martingale_gap", cert.martingale_gap},
          {"weighted_average_drift", cert.weighted_average_drift},
          {"max_residual", cert.max_residual},
          {"allowance", cert.allowance},
          {"compliant", cert.compliant}}},
        {"dissipation",
         {{"initial_value", diss.initial_value},
          {"total", diss.partial_sums.empty() ? 0.0 : diss.partial_sums.back()},
          {"final_expected_value", diss.final_expected_value},
          {"allowance", diss.allowance},
          {"monotone", diss.monotone},
          {"bounded", diss.bounded},
          {"n_paths", diss.n_paths},
          {"path_mean_total", diss.path_mean_total},
          {"path_max_total", diss.path_max_total}}}};
    if (!sm.compliant || !cert.compliant || !diss.bounded || !diss.monotone)
      escalate(r, ExitStatus::CertificateViolation);

    const auto prof = mutual_ergodicity_profile(chain, cfg.t0, cfg.horizon, cfg.seed, cfg.cluster_tol);
    json mutual = json::array();
    json not_mutual = json::array();
    for (std::size_t p = 0; p < prof.pairs.size(); ++p)
      (prof.mutually_ergodic[p] ? mutual : not_mutual).push_back({prof.pairs[p].first, prof.pairs[p].second});
    json convergent = json::array();
    json non_convergent = json::array();
    for (std::size_t i = 0; i < m; ++i) (prof.index_convergent[i] ? convergent : non_convergent).push_back(i);
    r.report["profile"] = {{"mutually_ergodic_pairs", mutual},
                           {"non_ergodic_pairs", not_mutual},
                           {"convergent_indices", convergent},
                           {"non_convergent_indices", non_convergent},
                           {"index_variation", prof.index_variation},
                           {"tail_max", prof.tail_max},
                           {"ks", prof.ks}};

    const auto graph = flow_graph_for(chain, cfg);
    const auto clusters = consensus_clusters(chain, cfg.t0, cfg.horizon, cfg.seed, cfg.cluster_tol, &graph);
    r.report["flow_graph"] = flow_graph_json(graph);
    r.report["clusters"] = {{"clusters", clusters.clusters},
                            {"count", clusters.clusters.size()},
                            {"max_intra_cluster_disagreement", clusters.max_intra_cluster_disagreement},
                            {"tau", graph.tau},
                            {"count_within_tau", clusters.count_within_tau},
                            {"matches_components", clusters.matches_components},
                            {"product", clusters.product.matrix().to_rows()}};

    if (chain.kind() == ChainKind::Static) {
      json st;
      try {
        const auto s = stationary_vector(chain.steps().front().expected());
        double worst = 0.0;
        for (std::size_t i = 0; i < m; ++i)
          worst = std::max(worst, row_distance(clusters.product.row(i), s.pi.values(), RowNorm::MaxAbs));
        st = {{"pi", s.pi.values()},
              {"iterations", s.iterations},
              {"residual", s.residual},
              {"premise_holds", s.premise_holds},
              {"max_row_distance", worst},
              {"limit_rows_match", worst <= 1e-6}};
      } catch (const Error& e) {
        st = {{"error", error_json(e)}};
      }
      r.report["stationary"] = std::move(st);
    }

    if (cfg.format == "csv") {
      std::ostringstream os;
      os << "k";
      for (const auto& [i, j] : prof.pairs) os << ",d_" << i << "_" << j;
      os << "\n";
      for (std::size_t s = 0; s < prof.ks.size(); ++s) {
        os << prof.ks[s];
        for (std::size_t p = 0; p < prof.pairs.size(); ++p) os << "," << number(prof.decay[p][s]);
        os << "\n";
      }
      r.csv = os.str();
    }
  } catch (const Error& e) {
    r.status = status_for(e.code());
    r.report["error"] = error_json(e);
  }
  finish(r);
  return r;
}

CommandResult run_simulate(const ChainSpec& chain, const RunConfig& cfg) {
  CommandResult r = start(cfg);
  try {
    check_config(cfg);
    const std::size_t m = chain.dim();
    const auto g = parse_lyapunov(cfg.lyapunov);
    const auto v = start_vector(chain, cfg);
    const auto path = sample_path(chain, cfg.seed, cfg.t0, cfg.horizon);
    const auto traj = simulate_dynamics(path, v);
    const auto pi = backward_absolute_probability(chain, cfg.t0 + cfg.horizon);

    std::ostringstream os;
    os << "k";
    for (std::size_t i = 0; i < m; ++i) os << ",x" << i;
    os << ",V\n";
    std::vector<double> values;
    for (std::size_t s = 0; s < traj.points.size(); ++s) {
      const std::size_t k = cfg.t0 + s;
      const auto& x = traj.points[s];
      const double val = lyapunov_value(g, pi.at(k), x);
      values.push_back(val);
      os << k;
      for (double xi : x) os << "," << number(xi);
      os << "," << number(val) << "\n";
    }
    r.csv = os.str();

    const auto& x_end = traj.points.back();
    r.report["dim"] = m;
    r.report["lyapunov"] = g.name();
    r.report["steps"] = cfg.horizon;
    r.report["initial"] = v;
    r.report["final"] = x_end;
    r.report["initial_value"] = values.front();
    r.report["final_value"] = values.back();
    r.report["weighted_average_initial"] = dot(pi.at(cfg.t0).values(), v);
    r.report["weighted_average_final"] = dot(pi.at(cfg.t0 + cfg.horizon).values(), x_end);
    const auto [lo, hi] = std::minmax_element(x_end.begin(), x_end.end());
    r.report["final_spread"] = *hi - *lo;
    if (cfg.format == "json") r.report["trajectory"] = traj.points;
  } catch (const Error& e) {
    r.status = status_for(e.code());
    r.report["error"] = error_json(e);
  }
  finish(r);
  return r;
}

CommandResult run_decouple(const ChainSpec& chain, const RunConfig& cfg) {
  CommandResult r = start(cfg);
  try {
    check_config(cfg);
    std::vector<std::size_t> subset = cfg.subset;
    if (subset.empty())  // first half of the indices
      for (std::size_t i = 0; i < std::max<std::size_t>(1, chain.dim() / 2); ++i) subset.push_back(i);
    const auto d = decouple(chain, subset, cfg.horizon);
    const std::size_t h = d.cumulative_gap.size();
    const double total = d.cumulative_gap.back();
    const double half = h >= 2 ? d.cumulative_gap[h / 2 - 1] : 0.0;
    r.report["dim"] = chain.dim();
    r.report["subset"] = subset;
    r.report["l1_gap"] = d.l1_gap.to_rows();
    r.report["total_gap"] = total;
    r.report["tail_gap"] = total - half;
    r.report["chain"] = chain_to_json(ChainSpec::explicit_sequence(d.matrices, TailRule::Identity));
    if (cfg.format == "csv") {
      std::ostringstream os;
      os << "k,cumulative_gap\n";
      for (std::size_t k = 0; k < h; ++k) os << k + 1 << "," << number(d.cumulative_gap[k]) << "\n";
      r.csv = os.str();
    }
  } catch (const Error& e) {
    r.status = status_for(e.code());
    r.report["error"] = error_json(e);
  }
  finish(r);
  return r;
}

std::vector<std::string> fixture_names() {
  return {"counterexample", "two_block", "two_block_leak", "two_block_vanishing", "doubly_stochastic"};
}

ChainSpec fixture_by_name(const std::string& name, std::size_t dim, std::uint64_t seed) {
  if (name == "counterexample") {
    if (dim != 0 && dim != 4) throw Error(ErrorCode::InvalidArgument, "the counterexample fixture is 4x4");
    return fixture_counterexample_4x4();
  }
  const std::size_t m = dim == 0 ? (name == "doubly_stochastic" ? 4 : 6) : dim;
  if (name == "two_block" || name == "two_block_leak" || name == "two_block_vanishing") {
    if (m < 2) throw Error(ErrorCode::InvalidArgument, "two_block needs dim >= 2");
    TwoBlockOptions opts;
    if (name == "two_block_leak") opts.leak = LeakKind::Divergent;
    if (name == "two_block_vanishing") opts.leak = LeakKind::Vanishing;
    return generator_two_block(m, m / 2, seed, opts);
  }
  if (name == "doubly_stochastic") return generator_doubly_stochastic(m, seed, 1);
  throw Error(ErrorCode::InvalidArgument, "unknown fixture " + name);
}

}  // namespace stochchain
