#pragma once

// Synthetic-experiment harness: seeded instances, a bounded worker pool,
// regularization grid search and the sweeps behind the bench subcommand
// (hidden-node count, noise level, iterations to tolerance, runtime,
// per-iteration cost scaling, recovery error).

#include "glopss/datagen.hpp"
#include "glopss/metrics.hpp"
#include "glopss/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

namespace glopss {

inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("loglog_slope needs two or more matching points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Runs fn(0..count-1) on at most `threads` workers; results keep task order
/// so aggregation is identical for serial and parallel runs.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t count, unsigned threads, Fn fn) {
  std::vector<Result> results(count);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(count));
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          results[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
  return results;
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Everything needed to reproduce one synthetic trial.
struct InstanceSpec {
  GenSpec gen;
  SignalSpec sig;
  Index hidden = 1;
  std::uint64_t signal_seed = 1;
  std::uint64_t mask_seed = 1;
  bool normalize = true;  // scale signals by 1/sqrt(n) (sample covariance)
};

struct Instance {
  Graph graph;
  std::uint64_t graph_seed = 0;
  SignalMatrix signals;
  HiddenNodeSample sample;
  ProblemData problem;
};

inline Instance make_instance(const InstanceSpec& spec) {
  Instance inst;
  GeneratedGraph gg = generate_connected_graph(spec.gen);
  inst.graph = std::move(gg.graph);
  inst.graph_seed = gg.seed_used;
  inst.signals = generate_signals(inst.graph, spec.sig, spec.signal_seed);
  inst.sample = hide_nodes(inst.graph, inst.signals, spec.hidden, spec.mask_seed);
  const Matrix& xo = inst.sample.x_obs.data();
  inst.problem = build_problem(spec.normalize ? SignalMatrix(xo / std::sqrt(static_cast<double>(xo.cols())))
                                              : inst.sample.x_obs);
  return inst;
}

/// Per-trial seed: trial t of an experiment with base seed s.
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t trial) {
  return splitmix64(base ^ splitmix64(0x7472696cULL + trial));
}

/// Instance spec for trial t where graph, signals and mask all vary.
inline InstanceSpec trial_instance(const GenSpec& gen, const SignalSpec& sig, Index hidden, std::uint64_t base,
                                   std::size_t trial, bool normalize = true) {
  const std::uint64_t s = trial_seed(base, trial);
  InstanceSpec spec{gen, sig, hidden, s, s, normalize};
  spec.gen.seed = s;
  return spec;
}

struct Method {
  std::string name;
  SolverConfig config;
  std::vector<RegParams> grid;  // empty: config.reg only
};

inline std::vector<RegParams> candidates(const Method& m) {
  return m.grid.empty() ? std::vector<RegParams>{m.config.reg} : m.grid;
}

/// Standard F-score grid. The k-weight column only matters for GLOPSS/GraSS
/// variants; the ablation collapses it to a single value.
inline std::vector<RegParams> regularization_grid(Variant variant, const std::vector<double>& betas,
                                                  const std::vector<double>& gammas, double alpha = 1.0) {
  std::vector<RegParams> out;
  for (double b : betas) {
    if (variant == Variant::ablation_no_hidden) {
      out.push_back({alpha, b, 0.0, 0.0});
      continue;
    }
    for (double g : gammas) {
      RegParams r{alpha, b, 0.0, 0.0};
      (is_low_rank(variant) ? r.gammastar : r.gamma21) = g;
      out.push_back(r);
    }
  }
  return out;
}

struct TrialOutcome {
  EdgeRecoveryReport report;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
  double final_kkt = 0.0;
};

inline TrialOutcome run_recovery(const Instance& inst, SolverConfig cfg, const RegParams& reg) {
  cfg.reg = reg;
  cfg.diagnostics = false;
  const SolveOutput out = solve(inst.problem, cfg);
  return {f_score(inst.sample.w_obs_true, out.result.adjacency), out.result.iterations, out.result.status,
          out.result.final_kkt};
}

struct SweepRow {
  std::string sweep;     // "hidden" or "noise"
  double level = 0.0;    // h or sigma
  std::string method;
  std::size_t trial = 0;
  RegParams reg;
  TrialOutcome outcome;
};

struct SweepSummary {
  std::string sweep;
  double level = 0.0;
  std::string method;
  RegParams reg;
  double median_f = 0.0;
  std::size_t failures = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;

  double median_f(double level, const std::string& method) const {
    for (const auto& s : summary)
      if (s.level == level && s.method == method) return s.median_f;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

/// Grid-searched F-score sweep: at every level each method uses the grid
/// point with the best median F-score across trials (ties: first point).
/// `instance_at(level, trial)` builds the trial instance.
inline SweepResult f_score_sweep(const std::string& sweep, const std::vector<double>& levels,
                                 const std::vector<Method>& methods, std::size_t trials,
                                 const std::function<InstanceSpec(double, std::size_t)>& instance_at,
                                 unsigned threads = default_threads()) {
  SweepResult result;
  for (double level : levels) {
    const auto instances = parallel_map<Instance>(trials, threads, [&](std::size_t t) {
      return make_instance(instance_at(level, t));
    });
    for (const Method& method : methods) {
      const auto grid = candidates(method);
      struct Task {
        std::size_t cand, trial;
      };
      std::vector<Task> tasks;
      for (std::size_t c = 0; c < grid.size(); ++c)
        for (std::size_t t = 0; t < trials; ++t) tasks.push_back({c, t});
      const auto outcomes = parallel_map<TrialOutcome>(tasks.size(), threads, [&](std::size_t i) {
        return run_recovery(instances[tasks[i].trial], method.config, grid[tasks[i].cand]);
      });
      std::size_t best = 0;
      double best_f = -1.0;
      for (std::size_t c = 0; c < grid.size(); ++c) {
        std::vector<double> fs;
        for (std::size_t t = 0; t < trials; ++t) fs.push_back(outcomes[c * trials + t].report.f_score);
        const double med = median(fs);
        if (med > best_f) {
          best_f = med;
          best = c;
        }
      }
      SweepSummary summary{sweep, level, method.name, grid[best], best_f, 0};
      for (std::size_t t = 0; t < trials; ++t) {
        const TrialOutcome& oc = outcomes[best * trials + t];
        if (oc.status == SolveStatus::diverged) ++summary.failures;
        result.rows.push_back({sweep, level, method.name, t, grid[best], oc});
      }
      result.summary.push_back(summary);
    }
  }
  return result;
}

/// Long, tight-tolerance run used as the optimum w*, y*.
inline SolveOutput reference_solve(const ProblemData& pd, SolverConfig cfg, int max_iter = 50000) {
  cfg.eps_primal = cfg.eps_dual = 1e-13;
  cfg.max_iter = max_iter;
  cfg.diagnostics = false;
  cfg.adaptive.enabled = false;
  return solve(pd, cfg);
}

/// First iteration whose ||w - w*|| is at most tol; -1 when never reached.
inline int iterations_to(const ConvergenceHistory& history, double tol) {
  for (const auto& r : history)
    if (r.w_gap <= tol) return r.iter;
  return -1;
}

struct ConvergenceRow {
  std::string method;
  std::size_t trial = 0;
  double rho = 0.0;
  int iterations_to_tol = -1;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
  double final_kkt = 0.0;
  double final_constraint = 0.0;
  double wall_ms = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  std::vector<std::pair<std::string, double>> chosen_rho;  // per method
};

/// Iterations for each method to bring ||w_i - w*|| below `tol`, with w*
/// from a long reference run of `reference_variant`. Each method's rho is
/// chosen from rho_grid by smallest median iteration count (unreached counts
/// as max_iter + 1).
inline ConvergenceStudy convergence_study(const std::vector<InstanceSpec>& specs, const std::vector<Method>& methods,
                                          const std::vector<double>& rho_grid, double tol, int max_iter,
                                          double eps, Variant reference_variant,
                                          unsigned threads = default_threads()) {
  const std::size_t trials = specs.size();
  struct Prepared {
    Instance inst;
    IterateState ref;
  };
  const auto prepared = parallel_map<Prepared>(trials, threads, [&](std::size_t t) {
    Prepared p{make_instance(specs[t]), {}};
    SolverConfig cfg = methods.front().config;
    cfg.variant = reference_variant;
    cfg.rho = rho_grid.front();
    p.ref = reference_solve(p.inst.problem, cfg).result.state;
    return p;
  });
  ConvergenceStudy study;
  for (const Method& method : methods) {
    std::vector<ConvergenceRow> best_rows;
    double best_med = std::numeric_limits<double>::infinity();
    for (double rho : rho_grid) {
      auto rows = parallel_map<ConvergenceRow>(trials, threads, [&](std::size_t t) {
        SolverConfig cfg = method.config;
        cfg.rho = rho;
        cfg.max_iter = max_iter;
        cfg.eps_primal = cfg.eps_dual = eps;
        cfg.diagnostics = false;
        const SolveOutput out = solve(prepared[t].inst.problem, cfg, {}, &prepared[t].ref);
        return ConvergenceRow{method.name,
                              t,
                              rho,
                              iterations_to(out.history, tol),
                              out.result.iterations,
                              out.result.status,
                              out.result.final_kkt,
                              out.result.final_constraint,
                              out.result.wall_ms};
      });
      std::vector<double> counts;
      for (const auto& r : rows) counts.push_back(r.iterations_to_tol < 0 ? max_iter + 1.0 : r.iterations_to_tol);
      const double med = median(counts);
      if (med < best_med) {
        best_med = med;
        best_rows = std::move(rows);
      }
    }
    study.chosen_rho.emplace_back(method.name, best_rows.empty() ? 0.0 : best_rows.front().rho);
    study.rows.insert(study.rows.end(), best_rows.begin(), best_rows.end());
  }
  return study;
}

inline std::vector<double> column(const std::vector<ConvergenceRow>& rows, const std::string& method,
                                  const std::function<double(const ConvergenceRow&)>& get) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.method == method) out.push_back(get(r));
  return out;
}

/// Median wall time per iteration of a fixed-length run, excluding
/// diagnostics. Timing is inherently machine dependent.
inline double per_iteration_ms(const ProblemData& pd, SolverConfig cfg, int iterations) {
  cfg.max_iter = iterations;
  cfg.eps_primal = cfg.eps_dual = 0.0;
  cfg.diagnostics = false;
  const SolveOutput out = solve(pd, cfg);
  std::vector<double> times;
  for (const auto& r : out.history) times.push_back(r.time_ms);
  return median(times);
}

struct RecoveryRow {
  Index hidden = 0;
  Index samples = 0;
  std::size_t trial = 0;
  RecoveryDiagnostics diag;
  double f_score = 0.0;
};

/// Recovery error against the effective Laplacian on one fixed graph while
/// the number of samples and hidden nodes vary. The mask is fixed per h;
/// signals are redrawn per trial.
inline std::vector<RecoveryRow> recovery_study(const GenSpec& gen, double noise_sigma,
                                               const std::vector<Index>& hidden_counts,
                                               const std::vector<Index>& sample_counts, std::size_t trials,
                                               const SolverConfig& cfg, std::uint64_t base_seed,
                                               unsigned threads = default_threads()) {
  const GeneratedGraph gg = generate_connected_graph(gen);
  const Matrix l_full = laplacian(gg.graph);
  struct Task {
    Index h, n;
    std::size_t trial;
  };
  std::vector<Task> tasks;
  for (Index h : hidden_counts)
    for (Index n : sample_counts)
      for (std::size_t t = 0; t < trials; ++t) tasks.push_back({h, n, t});
  return parallel_map<RecoveryRow>(tasks.size(), threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    const SignalMatrix X =
        generate_signals(gg.graph, {task.n, noise_sigma}, trial_seed(base_seed, task.trial));
    const HiddenNodeSample hs = hide_nodes(gg.graph, X, task.h, base_seed);
    const Matrix& xo = hs.x_obs.data();
    const ProblemData pd = build_problem(SignalMatrix(xo / std::sqrt(static_cast<double>(task.n))));
    SolverConfig c = cfg;
    c.diagnostics = false;
    const SolveOutput out = solve(pd, c);
    RecoveryRow row{task.h, task.n, task.trial, {}, 0.0};
    row.diag = recovery_error(laplacian(out.result.adjacency), l_full, hs.mask, xo);
    row.f_score = f_score(hs.w_obs_true, out.result.adjacency).f_score;
    return row;
  });
}

}  // namespace glopss
