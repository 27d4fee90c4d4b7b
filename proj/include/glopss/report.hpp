#pragma once

// CSV tables for experiment results, one row per (trial, configuration).
// Wall-clock columns live only in the runtime and scaling tables so every
// other table is reproducible byte for byte.

#include "glopss/experiment.hpp"
#include "glopss/io.hpp"

#include <ostream>

namespace glopss {

inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "sweep,level,method,trial,alpha,beta,gamma,f_score,precision,recall,true_edges,estimated_edges,iterations,"
         "status\n";
  for (const auto& row : r.rows) {
    const auto& rep = row.outcome.report;
    out << row.sweep << ',' << format_double(row.level) << ',' << row.method << ',' << row.trial << ','
        << format_double(row.reg.alpha) << ',' << format_double(row.reg.beta) << ','
        << format_double(row.reg.gamma21 + row.reg.gammastar) << ',' << format_double(rep.f_score) << ','
        << format_double(rep.precision) << ',' << format_double(rep.recall) << ',' << rep.true_edges << ','
        << rep.estimated_edges << ',' << row.outcome.iterations << ',' << to_string(row.outcome.status) << '\n';
  }
}

inline void write_sweep_summary_csv(std::ostream& out, const SweepResult& r) {
  out << "sweep,level,method,alpha,beta,gamma,median_f_score,diverged\n";
  for (const auto& s : r.summary)
    out << s.sweep << ',' << format_double(s.level) << ',' << s.method << ',' << format_double(s.reg.alpha) << ','
        << format_double(s.reg.beta) << ',' << format_double(s.reg.gamma21 + s.reg.gammastar) << ','
        << format_double(s.median_f) << ',' << s.failures << '\n';
}

inline void write_convergence_csv(std::ostream& out, const ConvergenceStudy& s) {
  out << "method,trial,rho,iterations_to_tol,iterations,status,final_kkt,final_constraint\n";
  for (const auto& r : s.rows)
    out << r.method << ',' << r.trial << ',' << format_double(r.rho) << ',' << r.iterations_to_tol << ','
        << r.iterations << ',' << to_string(r.status) << ',' << format_double(r.final_kkt) << ','
        << format_double(r.final_constraint) << '\n';
}

inline void write_runtime_csv(std::ostream& out, const ConvergenceStudy& s) {
  out << "method,trial,rho,iterations,wall_ms\n";
  for (const auto& r : s.rows)
    out << r.method << ',' << r.trial << ',' << format_double(r.rho) << ',' << r.iterations << ','
        << format_double(r.wall_ms) << '\n';
}

inline void write_recovery_csv(std::ostream& out, const std::vector<RecoveryRow>& rows) {
  out << "hidden,samples,trial,error,raw_error,scale,xi,delta_hat,xi_delta,s_o,f_score\n";
  for (const auto& r : rows)
    out << r.hidden << ',' << r.samples << ',' << r.trial << ',' << format_double(r.diag.frobenius_error) << ','
        << format_double(r.diag.raw_frobenius_error) << ',' << format_double(r.diag.scale) << ','
        << format_double(r.diag.xi) << ',' << format_double(r.diag.delta_hat) << ','
        << format_double(r.diag.xi_delta) << ',' << r.diag.s_o << ',' << format_double(r.f_score) << '\n';
}

struct ScalingRow {
  std::string method;
  Index o = 0;
  double per_iteration_ms = 0.0;
};

inline void write_scaling_csv(std::ostream& out, const std::vector<ScalingRow>& rows) {
  out << "method,o,per_iteration_ms\n";
  for (const auto& r : rows) out << r.method << ',' << r.o << ',' << format_double(r.per_iteration_ms) << '\n';
}

inline nlohmann::ordered_json reg_to_json(const RegParams& r) {
  nlohmann::ordered_json j;
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["gamma21"] = r.gamma21;
  j["gammastar"] = r.gammastar;
  return j;
}

inline nlohmann::ordered_json gen_to_json(const GenSpec& g) {
  nlohmann::ordered_json j;
  j["graph"] = to_string(g.kind);
  j["nodes"] = g.nodes;
  j["kernel_width"] = g.kernel_width;
  j["weight_threshold"] = g.weight_threshold;
  j["edge_prob"] = g.edge_prob;
  j["attach_edges"] = g.attach_edges;
  j["seed"] = g.seed;
  return j;
}

}  // namespace glopss
