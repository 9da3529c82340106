#include "core/chain_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace stochchain {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorCode::Parse, "schema: " + what, 0);
}

const json& required(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(std::string("missing field \"") + key + "\"");
  return *it;
}

std::size_t as_index(const json& v, const std::string& what) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    schema_error(what + " must be a nonnegative integer");
  return v.get<std::size_t>();
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) schema_error(what + " must be a number");
  return v.get<double>();
}

RawMatrix parse_matrix(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) schema_error(what + " must be a nonempty array of rows");
  RawMatrix rows;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& row = v[i];
    if (!row.is_array()) schema_error(what + " row " + std::to_string(i) + " must be an array");
    std::vector<double> r;
    for (std::size_t j = 0; j < row.size(); ++j)
      r.push_back(as_number(row[j], what + "[" + std::to_string(i) + "][" + std::to_string(j) + "]"));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RawMatrix> parse_matrices(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) schema_error(what + " must be a nonempty array of matrices");
  std::vector<RawMatrix> out;
  for (std::size_t q = 0; q < v.size(); ++q) out.push_back(parse_matrix(v[q], what + "[" + std::to_string(q) + "]"));
  return out;
}

std::vector<double> parse_probabilities(const json& v, const std::string& what) {
  if (!v.is_array()) schema_error(what + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t q = 0; q < v.size(); ++q) out.push_back(as_number(v[q], what + "[" + std::to_string(q) + "]"));
  return out;
}

ChainKind parse_kind(const std::string& s) {
  if (s == "static") return ChainKind::Static;
  if (s == "periodic") return ChainKind::Periodic;
  if (s == "explicit") return ChainKind::Explicit;
  if (s == "independent") return ChainKind::IndependentFiniteSupport;
  if (s == "iid") return ChainKind::Iid;
  schema_error("unknown kind \"" + s + "\"");
}

TailRule parse_tail(const std::string& s) {
  if (s == "cycle") return TailRule::Cycle;
  if (s == "repeat-last") return TailRule::RepeatLast;
  if (s == "identity") return TailRule::Identity;
  schema_error("unknown tail \"" + s + "\"");
}

FlowStatus parse_status(const std::string& s) {
  if (s == "diverges") return FlowStatus::Diverges;
  if (s == "summable") return FlowStatus::Summable;
  if (s == "unknown") return FlowStatus::Unknown;
  schema_error("unknown flow status \"" + s + "\"");
}

std::string as_string(const json& v, const std::string& what) {
  if (!v.is_string()) schema_error(what + " must be a string");
  return v.get<std::string>();
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

const std::set<std::string> kKnownKeys = {"schema", "dim", "kind", "matrix", "matrices", "probabilities", "steps",
                                          "tail", "cycle_start", "flow_declaration", "seed", "description"};

}  // namespace

RawChainSpec parse_chain_spec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << "ParseError(line " << line << "): " << e.what();
    throw Error(ErrorCode::Parse, os.str(), line);
  }
  if (!doc.is_object()) schema_error("top level must be an object");
  for (const auto& [key, _] : doc.items())
    if (!kKnownKeys.count(key)) schema_error("unknown field \"" + key + "\"");

  if (const auto it = doc.find("schema"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<int>() != kChainSchemaVersion)
      schema_error("unsupported schema version (expected " + std::to_string(kChainSchemaVersion) + ")");
  }

  RawChainSpec raw;
  raw.dim = as_index(required(doc, "dim"), "dim");
  if (raw.dim == 0) schema_error("dim must be >= 1");
  raw.kind = parse_kind(as_string(required(doc, "kind"), "kind"));

  switch (raw.kind) {
    case ChainKind::Static: {
      const bool has_matrix = doc.contains("matrix");
      if (has_matrix == doc.contains("matrices")) schema_error("static chain needs exactly one of \"matrix\" or \"matrices\"");
      std::vector<RawMatrix> ms;
      if (has_matrix)
        ms.push_back(parse_matrix(doc["matrix"], "matrix"));
      else
        ms = parse_matrices(doc["matrices"], "matrices");
      if (ms.size() != 1) schema_error("static chain has exactly one matrix");
      raw.steps.push_back({std::move(ms), {1.0}});
      break;
    }
    case ChainKind::Periodic:
    case ChainKind::Explicit:
      for (auto& m : parse_matrices(required(doc, "matrices"), "matrices")) raw.steps.push_back({{std::move(m)}, {1.0}});
      break;
    case ChainKind::Iid: {
      RawStep s{parse_matrices(required(doc, "matrices"), "matrices"),
                parse_probabilities(required(doc, "probabilities"), "probabilities")};
      if (s.probabilities.size() != s.matrices.size()) schema_error("probabilities and matrices differ in length");
      raw.steps.push_back(std::move(s));
      break;
    }
    case ChainKind::IndependentFiniteSupport: {
      const auto& steps = required(doc, "steps");
      if (!steps.is_array() || steps.empty()) schema_error("steps must be a nonempty array");
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const std::string where = "steps[" + std::to_string(k) + "]";
        if (!steps[k].is_object()) schema_error(where + " must be an object");
        RawStep s{parse_matrices(required(steps[k], "matrices"), where + ".matrices"),
                  parse_probabilities(required(steps[k], "probabilities"), where + ".probabilities")};
        if (s.probabilities.size() != s.matrices.size())
          schema_error(where + ": probabilities and matrices differ in length");
        raw.steps.push_back(std::move(s));
      }
      break;
    }
  }
  if (raw.kind != ChainKind::Iid && doc.contains("probabilities"))
    schema_error("probabilities only apply to iid chains");

  if (const auto it = doc.find("tail"); it != doc.end()) {
    if (raw.kind != ChainKind::Explicit && raw.kind != ChainKind::IndependentFiniteSupport)
      schema_error("tail applies only to explicit and independent chains");
    raw.tail = parse_tail(as_string(*it, "tail"));
    if (raw.kind == ChainKind::Explicit && *raw.tail == TailRule::Cycle)
      schema_error("explicit chains take tail identity or repeat-last; use kind periodic to cycle");
  }
  if (const auto it = doc.find("cycle_start"); it != doc.end()) {
    if (raw.kind != ChainKind::IndependentFiniteSupport) schema_error("cycle_start applies only to independent chains");
    raw.cycle_start = as_index(*it, "cycle_start");
    if (raw.cycle_start >= raw.steps.size()) schema_error("cycle_start must index into steps");
  }
  if (const auto it = doc.find("flow_declaration"); it != doc.end()) {
    if (!it->is_array()) schema_error("flow_declaration must be an array");
    for (std::size_t e = 0; e < it->size(); ++e) {
      const auto& d = (*it)[e];
      const std::string where = "flow_declaration[" + std::to_string(e) + "]";
      if (!d.is_object()) schema_error(where + " must be an object");
      FlowDeclaration f{as_index(required(d, "i"), where + ".i"), as_index(required(d, "j"), where + ".j"),
                        parse_status(as_string(required(d, "status"), where + ".status"))};
      if (f.i >= raw.dim || f.j >= raw.dim || f.i == f.j) schema_error(where + " needs distinct indices below dim");
      raw.flow.push_back(f);
    }
  }
  if (const auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) schema_error("seed must be a nonnegative integer");
    raw.seed = it->get<std::uint64_t>();
  }
  return raw;
}

ValidationSummary check_chain_spec(const RawChainSpec& raw, double tol) {
  ValidationSummary out;
  auto note = [&](ErrorCode c) {
    if (!out.first_error) out.first_error = c;
  };
  std::size_t index = 0;
  for (std::size_t k = 0; k < raw.steps.size(); ++k) {
    const auto& step = raw.steps[k];
    std::vector<WeightedMatrix> support;
    bool matrices_ok = true;
    for (std::size_t q = 0; q < step.matrices.size(); ++q, ++index) {
      MatrixCheck mc;
      mc.index = index;
      mc.step = k;
      mc.support = q;
      const auto& rows = step.matrices[q];
      try {
        if (rows.size() > kMaxDim) {
          std::ostringstream os;
          os << "dimension " << rows.size() << " exceeds cap " << kMaxDim;
          throw Error(ErrorCode::DimensionTooLarge, os.str(), rows.size());
        }
        if (rows.size() != raw.dim) {
          std::ostringstream os;
          os << "matrix has " << rows.size() << " rows but dim is " << raw.dim;
          throw Error(ErrorCode::DimensionMismatch, os.str(), rows.size());
        }
        const Matrix m = Matrix::from_rows(rows);
        mc.max_row_sum_drift = max_row_sum_drift(m);
        support.push_back({validate(m, tol), step.probabilities[q]});
      } catch (const Error& e) {
        mc.ok = false;
        mc.code = e.code();
        mc.cause = e.what();
        matrices_ok = false;
        note(e.code());
      }
      out.matrices.push_back(std::move(mc));
    }
    StepCheck sc;
    sc.step = k;
    for (double p : step.probabilities) sc.probability_sum += p;
    for (std::size_t q = 0; q < step.probabilities.size() && sc.ok; ++q) {
      if (!(step.probabilities[q] >= 0.0) || !std::isfinite(step.probabilities[q])) {
        sc.ok = false;
        std::ostringstream os;
        os << "negative probability " << step.probabilities[q] << " at support position " << q;
        sc.cause = os.str();
      }
    }
    if (sc.ok && std::abs(sc.probability_sum - 1.0) > tol) {
      sc.ok = false;
      std::ostringstream os;
      os.precision(17);
      os << "probabilities sum to " << sc.probability_sum;
      sc.cause = os.str();
    }
    if (sc.ok && matrices_ok) {
      try {
        StepDistribution d(std::move(support), tol);
      } catch (const Error& e) {
        sc.ok = false;
        sc.cause = e.what();
      }
    }
    if (!sc.ok) note(ErrorCode::Validation);
    out.steps.push_back(std::move(sc));
  }
  return out;
}

ChainSpec build_chain(const RawChainSpec& raw, double tol) {
  const ValidationSummary summary = check_chain_spec(raw, tol);
  for (const auto& mc : summary.matrices)
    if (!mc.ok) {
      std::ostringstream os;
      os << "ValidationError(matrix " << mc.index << "): " << mc.cause;
      throw Error(*mc.code, os.str(), mc.index);
    }
  for (const auto& sc : summary.steps)
    if (!sc.ok) {
      std::ostringstream os;
      os << "ValidationError(step " << sc.step << "): " << sc.cause;
      throw Error(ErrorCode::Validation, os.str(), sc.step);
    }

  std::vector<StepDistribution> dists;
  std::vector<StochasticMatrix> points;
  for (const auto& step : raw.steps) {
    std::vector<WeightedMatrix> support;
    for (std::size_t q = 0; q < step.matrices.size(); ++q)
      support.push_back({validate(Matrix::from_rows(step.matrices[q]), tol), step.probabilities[q]});
    if (support.size() == 1) points.push_back(support.front().matrix);
    dists.emplace_back(std::move(support), tol);
  }

  ChainSpec chain = [&] {
    switch (raw.kind) {
      case ChainKind::Static: return ChainSpec::static_chain(points.front());
      case ChainKind::Periodic: return ChainSpec::periodic(std::move(points));
      case ChainKind::Explicit: return ChainSpec::explicit_sequence(std::move(points), raw.tail.value_or(TailRule::Identity));
      case ChainKind::Iid: return ChainSpec::iid(std::move(dists.front()));
      case ChainKind::IndependentFiniteSupport:
        return ChainSpec::independent(std::move(dists), raw.tail.value_or(TailRule::Cycle), raw.cycle_start);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown chain kind");
  }();
  if (!raw.flow.empty()) chain = chain.with_flow_declaration(raw.flow);
  if (raw.seed) chain = chain.with_seed(*raw.seed);
  return chain;
}

ChainSpec load_chain_spec(std::string_view text, double tol) { return build_chain(parse_chain_spec(text), tol); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChainSpec load_chain_file(const std::string& path, double tol) { return load_chain_spec(read_text_file(path), tol); }

json matrix_to_json(const Matrix& m) { return m.to_rows(); }

json chain_to_json(const ChainSpec& chain) {
  json j;
  j["schema"] = kChainSchemaVersion;
  j["dim"] = chain.dim();
  j["kind"] = to_string(chain.kind());
  const auto steps = chain.steps();
  auto matrices_of = [](const StepDistribution& d) {
    json ms = json::array();
    for (const auto& wm : d.support()) ms.push_back(matrix_to_json(wm.matrix.matrix()));
    return ms;
  };
  auto probabilities_of = [](const StepDistribution& d) {
    json ps = json::array();
    for (const auto& wm : d.support()) ps.push_back(wm.probability);
    return ps;
  };
  switch (chain.kind()) {
    case ChainKind::Static:
      j["matrix"] = matrix_to_json(steps.front().expected().matrix());
      break;
    case ChainKind::Periodic:
    case ChainKind::Explicit: {
      json ms = json::array();
      for (const auto& d : steps) ms.push_back(matrix_to_json(d.expected().matrix()));
      j["matrices"] = std::move(ms);
      if (chain.kind() == ChainKind::Explicit) j["tail"] = to_string(chain.tail());
      break;
    }
    case ChainKind::Iid:
      j["matrices"] = matrices_of(steps.front());
      j["probabilities"] = probabilities_of(steps.front());
      break;
    case ChainKind::IndependentFiniteSupport: {
      json ss = json::array();
      for (const auto& d : steps) ss.push_back({{"matrices", matrices_of(d)}, {"probabilities", probabilities_of(d)}});
      j["steps"] = std::move(ss);
      j["tail"] = to_string(chain.tail());
      if (chain.tail() == TailRule::Cycle) j["cycle_start"] = chain.cycle_start();
      break;
    }
  }
  if (!chain.flow_declaration().empty()) {
    json fl = json::array();
    for (const auto& f : chain.flow_declaration()) fl.push_back({{"i", f.i}, {"j", f.j}, {"status", to_string(f.status)}});
    j["flow_declaration"] = std::move(fl);
  }
  if (chain.seed()) j["seed"] = *chain.seed();
  return j;
}

std::string emit_chain_spec(const ChainSpec& chain) { return chain_to_json(chain).dump(2) + "\n"; }

}  // namespace stochchain
