#include "stochchain/stochchain.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/chain_io.hpp"
#include "core/commands.hpp"

struct scn_chain {
  stochchain::ChainSpec spec;
};

namespace {

thread_local std::string g_last_error;

scn_status fail(scn_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

scn_status from_exit(stochchain::ExitStatus s) { return static_cast<scn_status>(static_cast<int>(s)); }

scn_status from_error(const stochchain::Error& e) { return fail(from_exit(stochchain::status_for(e.code())), e.what()); }

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

stochchain::RunConfig to_run_config(const scn_config* c, const char* command) {
  stochchain::RunConfig cfg;
  const scn_config d = c != nullptr ? *c : scn_config_default();
  cfg.command = d.command != nullptr ? d.command : command;
  cfg.chain_file = d.chain_file != nullptr ? d.chain_file : "";
  cfg.t0 = d.t0;
  cfg.horizon = d.horizon;
  cfg.seed = d.seed;
  cfg.validate_tol = d.validate_tol;
  cfg.cluster_tol = d.cluster_tol;
  cfg.divergence_epsilon = d.divergence_epsilon;
  cfg.positivity_epsilon = d.positivity_epsilon;
  cfg.slack_tol = d.slack_tol;
  switch (d.flow_policy) {
    case SCN_FLOW_NUMERIC_ONLY: cfg.flow_policy = stochchain::FlowPolicy::NumericOnly; break;
    case SCN_FLOW_STRUCTURAL: cfg.flow_policy = stochchain::FlowPolicy::Structural; break;
    default: cfg.flow_policy = stochchain::FlowPolicy::DeclaredFirst; break;
  }
  cfg.lyapunov = d.lyapunov != nullptr ? d.lyapunov : "square";
  if (d.x0 != nullptr) cfg.x0.assign(d.x0, d.x0 + d.x0_len);
  if (d.subset != nullptr) cfg.subset.assign(d.subset, d.subset + d.subset_len);
  cfg.n_paths = d.n_paths;
  cfg.format = d.csv != 0 ? "csv" : "json";
  cfg.timestamp = d.include_timestamp != 0;
  return cfg;
}

template <class Run>
scn_status run_command(const char* command, const scn_config* c, char** report_out, char** csv_out, Run run) {
  if (report_out == nullptr) return fail(SCN_ERR_USAGE, "report_out must not be NULL");
  *report_out = nullptr;
  if (csv_out != nullptr) *csv_out = nullptr;
  try {
    const auto cfg = to_run_config(c, command);
    const stochchain::CommandResult r = run(cfg);
    *report_out = copy_string(r.report_text());
    if (csv_out != nullptr && !r.csv.empty()) *csv_out = copy_string(r.csv);
    if (r.status != stochchain::ExitStatus::Ok) {
      const auto& err = r.report.find("error");
      g_last_error = err != r.report.end() ? (*err)["message"].get<std::string>() : to_string(r.status);
    }
    return from_exit(r.status);
  } catch (const stochchain::Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return fail(SCN_ERR_USAGE, e.what());
  }
}

}  // namespace

extern "C" {

scn_config scn_config_default(void) {
  const stochchain::RunConfig d;
  scn_config c{};
  c.command = nullptr;
  c.chain_file = nullptr;
  c.t0 = d.t0;
  c.horizon = d.horizon;
  c.seed = d.seed;
  c.validate_tol = d.validate_tol;
  c.cluster_tol = d.cluster_tol;
  c.divergence_epsilon = d.divergence_epsilon;
  c.positivity_epsilon = d.positivity_epsilon;
  c.slack_tol = d.slack_tol;
  c.flow_policy = SCN_FLOW_DECLARED_FIRST;
  c.lyapunov = nullptr;
  c.x0 = nullptr;
  c.x0_len = 0;
  c.subset = nullptr;
  c.subset_len = 0;
  c.n_paths = d.n_paths;
  c.csv = 0;
  c.include_timestamp = 1;
  return c;
}

const char* scn_version(void) { return stochchain::kVersion; }

const char* scn_last_error(void) { return g_last_error.c_str(); }

scn_status scn_chain_from_json(const char* text, double validate_tol, scn_chain** out) {
  if (out == nullptr || text == nullptr) return fail(SCN_ERR_USAGE, "NULL argument");
  *out = nullptr;
  try {
    *out = new scn_chain{stochchain::load_chain_spec(text, validate_tol)};
    return SCN_OK;
  } catch (const stochchain::Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return fail(SCN_ERR_USAGE, e.what());
  }
}

scn_status scn_chain_from_file(const char* path, double validate_tol, scn_chain** out) {
  if (out == nullptr || path == nullptr) return fail(SCN_ERR_USAGE, "NULL argument");
  *out = nullptr;
  try {
    *out = new scn_chain{stochchain::load_chain_file(path, validate_tol)};
    return SCN_OK;
  } catch (const stochchain::Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return fail(SCN_ERR_USAGE, e.what());
  }
}

scn_status scn_chain_fixture(const char* name, size_t dim, uint64_t seed, scn_chain** out) {
  if (out == nullptr || name == nullptr) return fail(SCN_ERR_USAGE, "NULL argument");
  *out = nullptr;
  try {
    *out = new scn_chain{stochchain::fixture_by_name(name, dim, seed)};
    return SCN_OK;
  } catch (const stochchain::Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return fail(SCN_ERR_USAGE, e.what());
  }
}

void scn_chain_free(scn_chain* chain) { delete chain; }

size_t scn_chain_dim(const scn_chain* chain) { return chain != nullptr ? chain->spec.dim() : 0; }

scn_status scn_chain_expected_matrix(const scn_chain* chain, size_t k, double* out) {
  if (chain == nullptr || out == nullptr) return fail(SCN_ERR_USAGE, "NULL argument");
  if (k == 0) return fail(SCN_ERR_USAGE, "steps are numbered from k = 1");
  try {
    const auto data = chain->spec.expected_matrix(k).matrix().data();
    std::memcpy(out, data.data(), data.size() * sizeof(double));
    return SCN_OK;
  } catch (const stochchain::Error& e) {
    return from_error(e);
  }
}

scn_status scn_chain_to_json(const scn_chain* chain, char** out) {
  if (chain == nullptr || out == nullptr) return fail(SCN_ERR_USAGE, "NULL argument");
  *out = copy_string(stochchain::emit_chain_spec(chain->spec));
  return SCN_OK;
}

scn_status scn_run_validate(const char* spec_text, const scn_config* cfg, char** report_out) {
  if (spec_text == nullptr) return fail(SCN_ERR_USAGE, "NULL spec text");
  return run_command("validate", cfg, report_out, nullptr,
                     [&](const stochchain::RunConfig& c) { return stochchain::run_validate(spec_text, c); });
}

scn_status scn_run_analyze(const scn_chain* chain, const scn_config* cfg, char** report_out) {
  if (chain == nullptr) return fail(SCN_ERR_USAGE, "NULL chain");
  return run_command("analyze", cfg, report_out, nullptr,
                     [&](const stochchain::RunConfig& c) { return stochchain::run_analyze(chain->spec, c); });
}

scn_status scn_run_ergodicity(const scn_chain* chain, const scn_config* cfg, char** report_out, char** csv_out) {
  if (chain == nullptr) return fail(SCN_ERR_USAGE, "NULL chain");
  return run_command("ergodicity", cfg, report_out, csv_out,
                     [&](const stochchain::RunConfig& c) { return stochchain::run_ergodicity(chain->spec, c); });
}

scn_status scn_run_simulate(const scn_chain* chain, const scn_config* cfg, char** report_out, char** csv_out) {
  if (chain == nullptr) return fail(SCN_ERR_USAGE, "NULL chain");
  return run_command("simulate", cfg, report_out, csv_out,
                     [&](const stochchain::RunConfig& c) { return stochchain::run_simulate(chain->spec, c); });
}

scn_status scn_run_decouple(const scn_chain* chain, const scn_config* cfg, char** report_out, char** csv_out) {
  if (chain == nullptr) return fail(SCN_ERR_USAGE, "NULL chain");
  return run_command("decouple", cfg, report_out, csv_out,
                     [&](const stochchain::RunConfig& c) { return stochchain::run_decouple(chain->spec, c); });
}

void scn_string_free(char* s) { std::free(s); }

}  // extern "C"
