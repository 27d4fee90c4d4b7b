// glopss: generate synthetic problems, solve them, evaluate estimates and
// run the benchmark sweeps.
//
//   glopss [--seed S] [--out DIR] [--config FILE] <generate|solve|eval|bench> [options]
//
// A config file holds flat "key = value" lines whose keys are long option
// names without dashes (e.g. "beta = 0.1"); command-line flags win.
// Exit codes: 0 success, 2 bad input, 3 solver divergence, 4 I/O failure.

#include "glopss/datagen.hpp"
#include "glopss/experiment.hpp"
#include "glopss/io.hpp"
#include "glopss/metrics.hpp"
#include "glopss/report.hpp"
#include "glopss/solver.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace glopss;
using nlohmann::ordered_json;

namespace {

constexpr int exit_bad_input = 2;
constexpr int exit_diverged = 3;
constexpr int exit_io = 4;

struct Global {
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string config;
};

struct GenerateOpts {
  std::string graph = "gaussian";
  Index nodes = 21;
  double kernel_width = 0.5;
  double weight_threshold = 0.75;
  double edge_prob = 0.2;
  Index attach_edges = 1;
  Index samples = 100;
  double noise = 0.5;
  Index hidden = 1;
  bool allow_disconnected = false;
};

struct SolveOpts {
  std::string signals;
  std::string mask;
  std::string truth;
  std::string variant = "glopss_cs";
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 1.0;
  double rho = 0.01;
  std::string tau = "auto";
  double safety = 0.9;
  double eps_primal = 1e-6;
  double eps_dual = 1e-6;
  int max_iter = 10000;
  std::string group_mode = "per_column";
  bool adaptive = false;
  bool raw_signals = false;
  bool analytic_m1 = false;
  double edge_threshold = default_edge_threshold;
  bool no_timing = false;
};

struct EvalOpts {
  std::string truth;
  std::string estimate;
  std::string mask;
  std::string signals;
  double edge_threshold = default_edge_threshold;
};

struct BenchOpts {
  std::string experiment = "all";
  std::size_t trials = 10;
  unsigned threads = 0;
  bool no_tune = false;
  double rho = 0.01;
  int max_iter = 20000;
  double eps = 1e-7;
};

GenSpec gen_spec(const GenerateOpts& g, std::uint64_t seed) {
  GenSpec s;
  s.kind = parse_graph_kind(g.graph);
  s.nodes = g.nodes;
  s.kernel_width = g.kernel_width;
  s.weight_threshold = g.weight_threshold;
  s.edge_prob = g.edge_prob;
  s.attach_edges = g.attach_edges;
  s.seed = seed;
  return s;
}

StepSizes parse_steps(const std::string& text) {
  std::stringstream ss(text);
  std::string cell;
  std::vector<double> v;
  while (std::getline(ss, cell, ',')) v.push_back(parse_double(cell, "--tau"));
  if (v.size() != 4) throw ParseError("--tau expects 'auto' or four comma-separated values");
  return {v[0], v[1], v[2], v[3]};
}

SolverConfig solver_config(const SolveOpts& s) {
  SolverConfig cfg;
  cfg.variant = parse_variant(s.variant);
  cfg.reg.alpha = s.alpha;
  cfg.reg.beta = s.beta;
  if (cfg.variant != Variant::ablation_no_hidden) (is_low_rank(cfg.variant) ? cfg.reg.gammastar : cfg.reg.gamma21) = s.gamma;
  cfg.rho = s.rho;
  if (s.tau != "auto") cfg.tau = parse_steps(s.tau);
  cfg.safety = s.safety;
  cfg.analytic_m1_bound = s.analytic_m1;
  cfg.eps_primal = s.eps_primal;
  cfg.eps_dual = s.eps_dual;
  cfg.max_iter = s.max_iter;
  cfg.group_mode = parse_group_mode(s.group_mode);
  cfg.adaptive.enabled = s.adaptive;
  cfg.validate();
  return cfg;
}

ordered_json steps_json(const StepSizes& t) {
  return ordered_json{{"tau1", t.tau1}, {"tau2", t.tau2}, {"tau3", t.tau3}, {"tau4", t.tau4}};
}

int run_generate(const Global& g, const GenerateOpts& o) {
  const GenSpec spec = gen_spec(o, g.seed);
  Graph graph;
  std::uint64_t used = g.seed;
  int attempts = 1;
  if (o.allow_disconnected) {
    graph = generate_graph(spec);
  } else {
    GeneratedGraph gg = generate_connected_graph(spec);
    graph = std::move(gg.graph);
    used = gg.seed_used;
    attempts = gg.attempts;
  }
  const SignalSpec sig{o.samples, o.noise};
  const SignalMatrix X = generate_signals(graph, sig, g.seed);
  const HiddenNodeSample hs = hide_nodes(graph, X, o.hidden, g.seed);

  const fs::path out(g.out);
  write_edge_list(out / "graph.edges", graph.weights());
  write_matrix_csv(out / "signals.csv", X.data());
  write_json(out / "mask.json", mask_to_json(hs.mask, g.seed));

  ordered_json m;
  m["command"] = "generate";
  m["seed"] = g.seed;
  m["graph"] = gen_to_json(spec);
  m["graph_seed_used"] = used;
  m["graph_attempts"] = attempts;
  m["connected"] = graph.connected();
  m["edges"] = graph.edge_count();
  m["samples"] = sig.samples;
  m["noise_sigma"] = sig.noise_sigma;
  m["hidden"] = o.hidden;
  m["files"] = {"graph.edges", "signals.csv", "mask.json"};
  write_json(out / "manifest.json", m);
  std::cout << "wrote " << out.string() << ": " << graph.nodes() << " nodes, " << graph.edge_count() << " edges, "
            << o.hidden << " hidden\n";
  return 0;
}

int run_solve(const Global& g, const SolveOpts& s) {
  const SolverConfig cfg = solver_config(s);
  const Matrix X = read_matrix_csv(s.signals);
  const ObservationMask mask = s.mask.empty() ? ObservationMask::all_observed(X.rows())
                                              : mask_from_json(read_json(s.mask));
  if (mask.nodes() != X.rows()) throw ParseError("mask node count does not match signal rows");
  Matrix xo = SignalMatrix(X).rows(mask.observed()).data();
  if (!s.raw_signals) xo /= std::sqrt(static_cast<double>(xo.cols()));
  const ProblemData pd = build_problem(SignalMatrix(xo));

  const SolveOutput out = solve(pd, cfg);
  const SolveResult& r = out.result;
  const fs::path dir(g.out);
  write_edge_list(dir / "adjacency.edges", r.adjacency);
  write_matrix_csv(dir / "k_matrix.csv", r.k_matrix);
  {
    auto f = open_write(dir / "r.txt");
    f << format_double(r.r) << '\n';
  }
  write_history_csv(dir / "history.csv", out.history, !s.no_timing);

  ordered_json j;
  j["command"] = "solve";
  j["variant"] = to_string(cfg.variant);
  j["observed_nodes"] = pd.o;
  j["samples"] = pd.samples;
  j["normalized_signals"] = !s.raw_signals;
  j["regularization"] = reg_to_json(cfg.reg);
  j["group_mode"] = to_string(cfg.group_mode);
  j["rho"] = cfg.rho;
  j["rho_final"] = r.rho_final;
  j["tau_mode"] = s.tau == "auto" ? "auto" : "manual";
  j["tau"] = steps_json(r.steps);
  j["spectral_norms"] = {pd.norms.m1, pd.norms.m2, pd.norms.m3, pd.norms.m4};
  j["descent_constant"] = r.descent_c;
  j["status"] = to_string(r.status);
  j["message"] = r.message;
  j["iterations"] = r.iterations;
  j["final_primal_residual"] = out.history.empty() ? 0.0 : out.history.back().r_primal;
  j["final_dual_residual"] = out.history.empty() ? 0.0 : out.history.back().r_dual;
  j["final_constraint_residual"] = r.final_constraint;
  j["final_kkt_residual"] = r.final_kkt;
  j["r"] = r.r;
  j["wall_ms"] = s.no_timing ? 0.0 : r.wall_ms;
  if (!s.truth.empty()) {
    const Graph truth = read_edge_list(s.truth, mask.nodes());
    const EdgeRecoveryReport rep = f_score(partition(truth, mask).observed, r.adjacency, s.edge_threshold);
    j["f_score"] = rep.f_score;
    j["precision"] = rep.precision;
    j["recall"] = rep.recall;
  }
  write_json(dir / "summary.json", j);
  std::cout << to_string(r.status) << " after " << r.iterations << " iterations, kkt "
            << format_double(r.final_kkt) << "\n";
  if (r.status == SolveStatus::diverged) {
    std::cerr << "error: " << r.message << '\n';
    return exit_diverged;
  }
  return 0;
}

int run_eval(const Global& g, const EvalOpts& e) {
  const Graph est = read_edge_list(e.estimate);
  Index m = est.nodes();
  std::optional<ObservationMask> mask;
  if (!e.mask.empty()) {
    mask = mask_from_json(read_json(e.mask));
    m = mask->nodes();
  }
  const Graph truth = read_edge_list(e.truth, m);
  if (!mask) mask = ObservationMask::all_observed(truth.nodes());
  if (mask->observed_count() != est.nodes()) throw ParseError("estimate size does not match observed node count");
  const EdgeRecoveryReport rep = f_score(partition(truth, *mask).observed, est.weights(), e.edge_threshold);

  ordered_json j;
  j["command"] = "eval";
  j["f_score"] = rep.f_score;
  j["precision"] = rep.precision;
  j["recall"] = rep.recall;
  j["true_edges"] = rep.true_edges;
  j["estimated_edges"] = rep.estimated_edges;
  j["edge_threshold"] = rep.edge_threshold;
  std::optional<Matrix> xo;
  if (!e.signals.empty()) {
    const Matrix X = read_matrix_csv(e.signals);
    if (X.rows() != mask->nodes()) throw ParseError("signal rows do not match mask");
    xo = SignalMatrix(X).rows(mask->observed()).data();
  }
  const RecoveryDiagnostics d = recovery_error(laplacian(est), laplacian(truth), *mask, xo, e.edge_threshold);
  j["laplacian_error"] = d.frobenius_error;
  j["laplacian_error_raw"] = d.raw_frobenius_error;
  j["scale"] = d.scale;
  j["xi"] = d.xi;
  j["delta_hat"] = d.delta_hat;
  j["xi_delta"] = d.xi_delta;
  j["s_o"] = d.s_o;
  write_json(fs::path(g.out) / "eval.json", j);
  std::cout << "f_score " << format_double(rep.f_score) << " precision " << format_double(rep.precision)
            << " recall " << format_double(rep.recall) << '\n';
  return 0;
}

template <class Fn>
void write_table(const fs::path& path, Fn fn) {
  auto f = open_write(path);
  fn(f);
}

std::vector<Method> fscore_methods(bool tune, const std::vector<double>& betas, double rho, int max_iter,
                                   double eps) {
  std::vector<Method> methods;
  for (Variant v : {Variant::glopss_cs, Variant::glopss_lr, Variant::ablation_no_hidden}) {
    Method m{to_string(v), {}, {}};
    m.config.variant = v;
    m.config.rho = rho;
    m.config.max_iter = max_iter;
    m.config.eps_primal = m.config.eps_dual = eps;
    m.config.reg = {1.0, 0.03, 0.0, 0.0};
    if (v != Variant::ablation_no_hidden) (is_low_rank(v) ? m.config.reg.gammastar : m.config.reg.gamma21) = 1.0;
    if (tune) m.grid = regularization_grid(v, betas, {0.5, 1.0, 2.0});
    methods.push_back(std::move(m));
  }
  return methods;
}

ordered_json summary_json(const SweepResult& r) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : r.summary)
    arr.push_back({{"level", s.level}, {"method", s.method}, {"chosen", reg_to_json(s.reg)}, {"median_f", s.median_f}});
  return arr;
}

int run_bench(const Global& g, const BenchOpts& b) {
  const fs::path dir(g.out);
  const unsigned threads = b.threads ? b.threads : default_threads();
  const bool all = b.experiment == "all";
  const std::vector<std::string> known{"all", "hidden", "noise", "convergence", "scaling", "recovery"};
  if (std::find(known.begin(), known.end(), b.experiment) == known.end())
    throw InvalidInput("unknown experiment: " + b.experiment);
  const std::vector<double> betas{0.01, 0.03, 0.1, 0.3};

  ordered_json manifest;
  manifest["command"] = "bench";
  manifest["seed"] = g.seed;
  manifest["trials"] = b.trials;
  manifest["tuned"] = !b.no_tune;
  manifest["rho"] = b.rho;
  manifest["max_iter"] = b.max_iter;
  manifest["eps"] = b.eps;
  manifest["beta_grid"] = betas;
  manifest["gamma_grid"] = {0.5, 1.0, 2.0};
  manifest["signal_normalization"] = "1/sqrt(n)";

  const auto methods = fscore_methods(!b.no_tune, betas, b.rho, b.max_iter, b.eps);

  if (all || b.experiment == "hidden") {
    GenSpec gen;
    gen.kind = GraphKind::gaussian;
    gen.nodes = 25;
    const SweepResult r = f_score_sweep(
        "hidden", {1, 2, 3, 4, 5}, methods, b.trials,
        [&](double h, std::size_t t) {
          return trial_instance(gen, {100, 0.5}, static_cast<Index>(h), g.seed, t);
        },
        threads);
    write_table(dir / "hidden_sweep.csv", [&](auto& f) { write_sweep_csv(f, r); });
    write_table(dir / "hidden_summary.csv", [&](auto& f) { write_sweep_summary_csv(f, r); });
    manifest["hidden"] = {{"graph", gen_to_json(gen)}, {"samples", 100}, {"noise_sigma", 0.5},
                          {"levels", {1, 2, 3, 4, 5}}, {"chosen", summary_json(r)}};
    std::cout << "hidden sweep done\n";
  }
  if (all || b.experiment == "noise") {
    GenSpec gen;
    gen.kind = GraphKind::erdos_renyi;
    gen.nodes = 25;
    gen.edge_prob = 0.2;
    const SweepResult r = f_score_sweep(
        "noise", {0.1, 0.5, 1.0}, methods, b.trials,
        [&](double sigma, std::size_t t) { return trial_instance(gen, {100, sigma}, 1, g.seed, t); }, threads);
    write_table(dir / "noise_sweep.csv", [&](auto& f) { write_sweep_csv(f, r); });
    write_table(dir / "noise_summary.csv", [&](auto& f) { write_sweep_summary_csv(f, r); });
    manifest["noise"] = {{"graph", gen_to_json(gen)}, {"samples", 100}, {"hidden", 1},
                         {"levels", {0.1, 0.5, 1.0}}, {"chosen", summary_json(r)}};
    std::cout << "noise sweep done\n";
  }
  if (all || b.experiment == "convergence") {
    GenSpec gen;
    gen.kind = GraphKind::erdos_renyi;
    gen.nodes = 21;
    std::vector<InstanceSpec> specs;
    for (std::size_t t = 0; t < b.trials; ++t) specs.push_back(trial_instance(gen, {100, 0.5}, 1, g.seed, t));
    std::vector<Method> cm;
    for (Variant v : {Variant::glopss_lr, Variant::grass_lr, Variant::glopss_cs}) {
      Method m{to_string(v), {}, {}};
      m.config.variant = v;
      m.config.reg = {1.0, 0.5, 0.0, 0.0};
      (is_low_rank(v) ? m.config.reg.gammastar : m.config.reg.gamma21) = 1.0;
      cm.push_back(m);
    }
    const std::vector<double> rho_grid{0.001, 0.003, 0.01, 0.03, 0.1};
    const ConvergenceStudy s = convergence_study(specs, cm, rho_grid, 1e-6, 5000, 1e-9, Variant::glopss_lr, threads);
    write_table(dir / "convergence.csv", [&](auto& f) { write_convergence_csv(f, s); });
    write_table(dir / "runtime.csv", [&](auto& f) { write_runtime_csv(f, s); });
    ordered_json chosen;
    for (const auto& [name, rho] : s.chosen_rho) chosen[name] = rho;
    manifest["convergence"] = {{"graph", gen_to_json(gen)}, {"tolerance", 1e-6}, {"rho_grid", rho_grid},
                               {"chosen_rho", chosen}};
    std::cout << "convergence study done\n";
  }
  if (all || b.experiment == "scaling") {
    std::vector<ScalingRow> rows;
    for (Index o : {20, 40, 80}) {
      GenSpec gen;
      gen.kind = GraphKind::erdos_renyi;
      gen.nodes = o + 1;
      const Instance inst = make_instance(trial_instance(gen, {100, 0.5}, 1, g.seed, 0));
      for (Variant v : {Variant::glopss_cs, Variant::glopss_lr}) {
        SolverConfig cfg;
        cfg.variant = v;
        cfg.rho = b.rho;
        (is_low_rank(v) ? cfg.reg.gammastar : cfg.reg.gamma21) = 1.0;
        rows.push_back({to_string(v), o, per_iteration_ms(inst.problem, cfg, 200)});
      }
    }
    write_table(dir / "scaling.csv", [&](auto& f) { write_scaling_csv(f, rows); });
    std::cout << "scaling study done\n";
  }
  if (all || b.experiment == "recovery") {
    GenSpec gen;
    gen.kind = GraphKind::gaussian;
    gen.nodes = 30;
    gen.seed = g.seed;
    SolverConfig cfg;
    cfg.variant = Variant::glopss_cs;
    cfg.rho = b.rho;
    cfg.max_iter = b.max_iter;
    cfg.eps_primal = cfg.eps_dual = b.eps;
    cfg.reg = {1.0, 0.03, 1.0, 0.0};
    const auto rows = recovery_study(gen, 0.5, {2, 6}, {100, 400, 1600}, b.trials, cfg, g.seed, threads);
    write_table(dir / "recovery.csv", [&](auto& f) { write_recovery_csv(f, rows); });
    manifest["recovery"] = {{"graph", gen_to_json(gen)}, {"regularization", reg_to_json(cfg.reg)}};
    std::cout << "recovery study done\n";
  }
  write_json(dir / "manifest.json", manifest);
  return 0;
}

// Fills options not given on the command line from the config file.
void apply_config(CLI::App& app, CLI::App* sub, const KeyValues& kv) {
  for (const auto& [raw_key, value] : kv) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = nullptr;
    for (CLI::App* scope : {sub, &app}) {
      if (!scope) continue;
      try {
        opt = scope->get_option("--" + key);
        break;
      } catch (const CLI::OptionNotFound&) {
      }
    }
    if (!opt) {
      bool elsewhere = false;
      for (CLI::App* other : app.get_subcommands({})) {
        try {
          other->get_option("--" + key);
          elsewhere = true;
        } catch (const CLI::OptionNotFound&) {
        }
      }
      if (!elsewhere) throw ParseError("unknown config key: " + key);
      continue;
    }
    if (opt->count() > 0 || key == "config") continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph topology inference under partial observability"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Base random seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--config", g.config, "Flat key = value config file");

  GenerateOpts gen;
  auto* cg = app.add_subcommand("generate", "Synthetic graph, signals and hidden-node mask");
  cg->add_option("--graph", gen.graph, "gaussian | erdos_renyi | pref_attach");
  cg->add_option("--nodes", gen.nodes, "Total node count m");
  cg->add_option("--kernel-width", gen.kernel_width);
  cg->add_option("--weight-threshold", gen.weight_threshold);
  cg->add_option("--edge-prob", gen.edge_prob);
  cg->add_option("--attach-edges", gen.attach_edges);
  cg->add_option("--samples", gen.samples);
  cg->add_option("--noise", gen.noise);
  cg->add_option("--hidden", gen.hidden);
  cg->add_flag("--allow-disconnected", gen.allow_disconnected, "Keep a disconnected draw instead of resampling");

  SolveOpts so;
  auto* cs = app.add_subcommand("solve", "Estimate the observed-node graph");
  cs->add_option("--signals", so.signals, "Signals CSV (node x sample)");
  cs->add_option("--mask", so.mask, "Mask JSON; default all nodes observed");
  cs->add_option("--truth", so.truth, "Ground-truth edge list for an F-score in the summary");
  cs->add_option("--variant", so.variant, "glopss_cs | glopss_lr | grass_cs | grass_lr | ablation_no_hidden");
  cs->add_option("--alpha", so.alpha);
  cs->add_option("--beta", so.beta);
  cs->add_option("--gamma", so.gamma, "Weight of the K penalty (group or nuclear per variant)");
  cs->add_option("--rho", so.rho);
  cs->add_option("--tau", so.tau, "auto or tau1,tau2,tau3,tau4");
  cs->add_option("--safety", so.safety);
  cs->add_option("--eps-primal", so.eps_primal);
  cs->add_option("--eps-dual", so.eps_dual);
  cs->add_option("--max-iter", so.max_iter);
  cs->add_option("--group-mode", so.group_mode, "per_column | global");
  cs->add_flag("--adaptive", so.adaptive, "Residual-balancing rho updates");
  cs->add_flag("--raw-signals", so.raw_signals, "Skip the 1/sqrt(n) signal scaling");
  cs->add_flag("--analytic-m1", so.analytic_m1, "Step size from the analytic ||M1|| bound");
  cs->add_option("--edge-threshold", so.edge_threshold);
  cs->add_flag("--no-timing", so.no_timing, "Zero wall-clock fields for reproducible output");

  EvalOpts ev;
  auto* ce = app.add_subcommand("eval", "Score an estimated edge list against the truth");
  ce->add_option("--truth", ev.truth, "Full ground-truth edge list");
  ce->add_option("--estimate", ev.estimate, "Estimated observed-node edge list");
  ce->add_option("--mask", ev.mask);
  ce->add_option("--signals", ev.signals, "Signals CSV for the delta-hat diagnostic");
  ce->add_option("--edge-threshold", ev.edge_threshold);

  BenchOpts bo;
  auto* cb = app.add_subcommand("bench", "Run the synthetic sweeps");
  cb->add_option("--experiment", bo.experiment, "all | hidden | noise | convergence | scaling | recovery");
  cb->add_option("--trials", bo.trials);
  cb->add_option("--threads", bo.threads, "Worker threads; 0 = hardware concurrency");
  cb->add_flag("--no-tune", bo.no_tune, "Skip the regularization grid search");
  cb->add_option("--rho", bo.rho);
  cb->add_option("--max-iter", bo.max_iter);
  cb->add_option("--eps", bo.eps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_bad_input;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!g.config.empty()) apply_config(app, sub, read_key_values(g.config));
    const auto need = [](const std::string& v, const char* flag) {
      if (v.empty()) throw InvalidInput(std::string(flag) + " is required");
    };
    if (sub == cg) return run_generate(g, gen);
    if (sub == cs) {
      need(so.signals, "--signals");
      return run_solve(g, so);
    }
    if (sub == ce) {
      need(ev.truth, "--truth");
      need(ev.estimate, "--estimate");
      return run_eval(g, ev);
    }
    return run_bench(g, bo);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_bad_input;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_bad_input;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
