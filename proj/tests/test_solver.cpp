#include "glopss/datagen.hpp"
#include "glopss/solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace glopss;

namespace {

ProblemData er_problem(Index m, std::uint64_t seed, Index samples = 100) {
  GenSpec spec;
  spec.kind = GraphKind::erdos_renyi;
  spec.nodes = m;
  spec.seed = seed;
  const Graph g = generate_connected_graph(spec).graph;
  const SignalMatrix X = generate_signals(g, {samples, 0.5}, seed);
  const HiddenNodeSample hs = hide_nodes(g, X, 1, seed);
  return build_problem(SignalMatrix(hs.x_obs.data() / std::sqrt(static_cast<double>(samples))));
}

IterateState random_state(const ProblemData& pd, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  IterateState y = IterateState::zeros(pd.o);
  for (Index i = 0; i < y.w.size(); ++i) y.w(i) = std::abs(d(gen));
  for (Index i = 0; i < y.u.size(); ++i) y.u(i) = 0.5 + std::abs(d(gen));
  for (Index i = 0; i < y.k.size(); ++i) y.k(i) = d(gen);
  y.v << std::abs(d(gen)), std::abs(d(gen));
  for (Index i = 0; i < y.lambda.size(); ++i) y.lambda(i) = d(gen);
  return y;
}

double state_distance(const IterateState& a, const IterateState& b) { return std::sqrt(difference(a, b).squared_norm()); }

SolverConfig config(Variant v, double gamma = 1.0) {
  SolverConfig cfg;
  cfg.variant = v;
  cfg.rho = 0.05;
  cfg.reg = {1.0, 0.3, 0.0, 0.0};
  if (v != Variant::ablation_no_hidden) (is_low_rank(v) ? cfg.reg.gammastar : cfg.reg.gamma21) = gamma;
  return cfg;
}

}  // namespace

TEST(Variant, ParseAndTraits) {
  EXPECT_EQ(parse_variant("glopss_lr"), Variant::glopss_lr);
  EXPECT_EQ(parse_variant("ablation"), Variant::ablation_no_hidden);
  EXPECT_THROW(parse_variant("admm"), InvalidInput);
  EXPECT_TRUE(is_low_rank(Variant::grass_lr));
  EXPECT_FALSE(is_low_rank(Variant::glopss_cs));
  EXPECT_TRUE(is_grass(Variant::grass_cs));
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rho = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg.rho = 1.0;
  cfg.safety = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg.safety = 0.9;
  cfg.tau = StepSizes{1.0, 0.0, 1.0, 1.0};
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg.tau.reset();
  cfg.max_iter = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(StepSizes, AutoResolvesToSafetyOverSquaredNorms) {
  const ProblemData pd = er_problem(15, 2);
  const StepSizes t = resolve_step_sizes(pd, config(Variant::glopss_cs));
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(t[j], 0.9 / (pd.norms[j] * pd.norms[j]), 1e-15);
  SolverConfig manual = config(Variant::glopss_cs);
  manual.tau = StepSizes{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(resolve_step_sizes(pd, manual).tau3, 0.3);
  SolverConfig analytic = config(Variant::glopss_cs);
  analytic.analytic_m1_bound = true;
  EXPECT_LE(resolve_step_sizes(pd, analytic).tau1, t.tau1);
}

TEST(StepSizes, GrassBlocksUseJointNorms) {
  const ProblemData pd = er_problem(10, 3);
  const oracle::DenseBlocks b = oracle::dense_blocks(pd.z, pd.o);
  Matrix first(pd.o + 1, b.M1.cols() + 2), second(pd.o + 1, b.M3.cols() + pd.o);
  first << b.M1, b.M4;
  second << b.M3, b.M2;
  const auto [n1, n2] = grass_block_norms(pd);
  EXPECT_NEAR(n1, oracle::spectral(first), 1e-9 * n1);
  EXPECT_NEAR(n2, oracle::spectral(second), 1e-9 * n2);
  const StepSizes t = resolve_step_sizes(pd, config(Variant::grass_lr));
  EXPECT_NEAR(t.tau1, 0.9 / (n1 * n1), 1e-15);
  EXPECT_EQ(t.tau1, t.tau4);
  EXPECT_EQ(t.tau2, t.tau3);
}

TEST(Step, MatchesDenseStraightLineImplementation) {
  const ProblemData pd = er_problem(9, 4, 30);
  for (Variant v : {Variant::glopss_cs, Variant::glopss_lr}) {
    for (GroupMode mode : {GroupMode::per_column, GroupMode::global}) {
      SolverConfig cfg = config(v, 0.7);
      cfg.group_mode = mode;
      const StepSizes tau = resolve_step_sizes(pd, cfg);
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const IterateState y = random_state(pd, seed);
        const IterateState fast = step_glopss(pd, cfg, tau, cfg.rho, y);
        const IterateState dense = oracle::dense_step(pd, cfg.reg, tau, cfg.rho, y, is_low_rank(v), mode);
        EXPECT_LT(state_distance(fast, dense), 1e-10 * (1.0 + std::sqrt(y.squared_norm())));
      }
    }
  }
}

TEST(Step, GrassMatchesDenseTwoBlockSweep) {
  const ProblemData pd = er_problem(8, 5, 30);
  const SolverConfig cfg = config(Variant::grass_lr, 0.5);
  const StepSizes tau = resolve_step_sizes(pd, cfg);
  const oracle::DenseBlocks b = oracle::dense_blocks(pd.z, pd.o);
  const IterateState y = random_state(pd, 9);
  IterateState x = y;
  const auto res = [&] { return Vector(b.A() * stack_primal(x) - y.lambda / cfg.rho); };
  const Vector r1 = res();
  x.w = prox_f1(y.w - tau.tau1 * b.M1.transpose() * r1, pd.z, cfg.reg.beta, tau.tau1 / cfg.rho);
  x.v = prox_f4(y.v - tau.tau4 * b.M4.transpose() * r1, tau.tau4 / cfg.rho);
  const Vector r2 = res();
  x.k = prox_f3_lowrank(y.k - tau.tau3 * b.M3.transpose() * r2, pd.b_indices, cfg.reg.gammastar, tau.tau3 / cfg.rho);
  x.u = prox_f2(y.u - tau.tau2 * b.M2.transpose() * r2, cfg.reg.alpha, tau.tau2 / cfg.rho);
  x.lambda = y.lambda - cfg.rho * (b.A() * stack_primal(x));
  EXPECT_LT(state_distance(step_grass(pd, cfg, tau, cfg.rho, y), x), 1e-10 * (1.0 + std::sqrt(y.squared_norm())));
}

TEST(Solve, IterateInvariantsHold) {
  const ProblemData pd = er_problem(16, 6);
  for (Variant v : {Variant::glopss_cs, Variant::glopss_lr, Variant::grass_cs, Variant::grass_lr,
                    Variant::ablation_no_hidden}) {
    SolverConfig cfg = config(v);
    cfg.max_iter = 300;
    cfg.diagnostics = false;
    int checked = 0;
    solve(pd, cfg, {}, nullptr, [&](int, const IterateState& y) {
      ASSERT_GT(y.u.minCoeff(), 0.0);
      ASSERT_GE(y.w.minCoeff(), 0.0);
      ASSERT_GE(y.v.minCoeff(), 0.0);
      if (v == Variant::ablation_no_hidden) {
        ASSERT_EQ(y.k.norm(), 0.0);
        ASSERT_EQ(y.v.norm(), 0.0);
      }
      ++checked;
    });
    EXPECT_GT(checked, 1) << to_string(v);
  }
}

TEST(Solve, ConvergesToAKktPointThatIsAFixedPoint) {
  const ProblemData pd = er_problem(21, 7);
  for (Variant v : {Variant::glopss_cs, Variant::glopss_lr}) {
    SolverConfig cfg = config(v);
    cfg.rho = 0.01;
    cfg.eps_primal = cfg.eps_dual = 1e-11;
    cfg.max_iter = 50000;
    const SolveOutput out = solve(pd, cfg);
    ASSERT_EQ(out.result.status, SolveStatus::converged) << to_string(v);
    EXPECT_LT(out.result.final_kkt, 1e-6);
    const IterateState again = step_glopss(pd, cfg, out.result.steps, cfg.rho, out.result.state);
    EXPECT_LT(state_distance(again, out.result.state), 1e-6);
    EXPECT_EQ(out.result.adjacency, unvec_upper(out.result.state.w, pd.o));
    EXPECT_EQ(static_cast<int>(out.history.size()), out.result.iterations);
  }
}

TEST(Solve, LowRankAndGroupVariantsCoincideWithoutKPenalty) {
  const ProblemData pd = er_problem(12, 8);
  SolverConfig cs = config(Variant::glopss_cs, 0.0), lr = config(Variant::glopss_lr, 0.0);
  cs.max_iter = lr.max_iter = 200;
  const SolveOutput a = solve(pd, cs), b = solve(pd, lr);
  EXPECT_LT(state_distance(a.result.state, b.result.state), 1e-10);
}

TEST(Solve, ObjectiveAndKktAreLoggedWhenRequested) {
  const ProblemData pd = er_problem(10, 9);
  SolverConfig cfg = config(Variant::glopss_cs);
  cfg.max_iter = 50;
  cfg.eps_primal = cfg.eps_dual = 0.0;
  const SolveOutput out = solve(pd, cfg);
  ASSERT_EQ(out.history.size(), 50u);
  for (const auto& r : out.history) {
    EXPECT_TRUE(std::isfinite(r.objective));
    EXPECT_TRUE(std::isfinite(r.kkt));
    EXPECT_GE(r.m_step, 0.0);
    EXPECT_NEAR(r.r_primal, std::hypot(r.r_scalar, r.r_degree), 1e-12);
  }
  cfg.diagnostics = false;
  EXPECT_TRUE(std::isnan(solve(pd, cfg).history.back().kkt));
}

TEST(Solve, ReportsDivergence) {
  const ProblemData pd = er_problem(10, 10);
  SolverConfig cfg = config(Variant::glopss_cs);
  cfg.tau = StepSizes{50.0, 50.0, 50.0, 50.0};
  cfg.rho = 10.0;
  cfg.max_iter = 5000;
  const SolveOutput out = solve(pd, cfg);
  EXPECT_EQ(out.result.status, SolveStatus::diverged);
  EXPECT_FALSE(out.result.message.empty());
}

TEST(Solve, DeterministicAcrossRuns) {
  const ProblemData pd = er_problem(14, 11);
  SolverConfig cfg = config(Variant::glopss_lr);
  cfg.max_iter = 150;
  const SolveOutput a = solve(pd, cfg), b = solve(pd, cfg);
  EXPECT_EQ(a.result.state.w, b.result.state.w);
  EXPECT_EQ(a.result.state.lambda, b.result.state.lambda);
}

TEST(Diagnostics, DescentConstantFormula) {
  SpectralNorms n{3.0, 1.0, 4.0, std::sqrt(2.0)};
  const StepSizes t{0.9 / 9.0, 0.9, 0.9 / 16.0, 0.45};
  const double rho = 0.1;
  const double mu = (0.5 + 0.45 * 2.0 / 2.0) / rho;
  double expected = 1.0 / rho - mu;
  for (int j = 0; j < 4; ++j) expected = std::min(expected, rho / t[j] - rho * n[j] * n[j]);
  EXPECT_DOUBLE_EQ(descent_constant(n, t, rho), expected);
  EXPECT_GT(expected, 0.0);
}

TEST(Diagnostics, MNormMatchesDenseQuadraticForm) {
  const ProblemData pd = er_problem(7, 12, 20);
  const StepSizes t = default_step_sizes(pd);
  const double rho = 0.3;
  const oracle::DenseBlocks b = oracle::dense_blocks(pd.z, pd.o);
  const IterateState d = random_state(pd, 13);
  double expected = 0.0;
  const Matrix* blocks[3] = {&b.M1, &b.M2, &b.M3};
  const Vector* parts[3] = {&d.w, &d.u, &d.k};
  for (int j = 0; j < 3; ++j) {
    const Index n = blocks[j]->cols();
    const Matrix M = rho / t[j] * Matrix::Identity(n, n) - rho * blocks[j]->transpose() * *blocks[j];
    expected += parts[j]->dot(M * *parts[j]);
  }
  expected += rho / t.tau4 * d.v.squaredNorm() + d.lambda.squaredNorm() / rho;
  EXPECT_NEAR(m_norm_squared(pd, t, rho, d), expected, 1e-9 * std::abs(expected));
}

TEST(Diagnostics, KktResidualVanishesOnlyAtSolutions) {
  const ProblemData pd = er_problem(9, 14);
  const SolverConfig cfg = config(Variant::glopss_cs);
  EXPECT_GT(kkt_residual(pd, cfg, initial_state(pd)), 1e-3);
}

TEST(Diagnostics, AdaptiveRhoBalancesResiduals) {
  AdaptivePenalty ap;
  ap.enabled = true;
  EXPECT_DOUBLE_EQ(adaptive_rho(100.0, 1.0, 1.0, ap), 2.0);
  EXPECT_DOUBLE_EQ(adaptive_rho(1.0, 100.0, 1.0, ap), 0.5);
  EXPECT_DOUBLE_EQ(adaptive_rho(1.0, 2.0, 1.0, ap), 1.0);
  ap.rho_max = 1.5;
  EXPECT_DOUBLE_EQ(adaptive_rho(100.0, 1.0, 1.0, ap), 1.5);
}
