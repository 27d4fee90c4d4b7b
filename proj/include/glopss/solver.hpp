#pragma once

// Linearized multi-block ADMM for
//
//   min f1(w) + f2(u) + f3(k) + f4(v)   s.t.  A [w; u; k; v] = 0
//
// with augmented Lagrangian f(x) - lambda^T A x + rho/2 ||A x||^2.
//
// Every block update is one proximal-gradient step on the penalty term,
//   x_j+ = prox_{(tau_j / rho) f_j}( x_j - tau_j M_j^T (A x - lambda / rho) ),
// i.e. the block minimizer of the Lagrangian plus the proximal metric
// rho/tau_j I - rho M_j^T M_j. Convergence needs tau_j < 1 / sigma_max(M_j)^2.
//
// Variants:
//   glopss_cs / glopss_lr   Gauss-Seidel sweep w -> u -> k -> v -> lambda,
//                           k-prox by column group-lasso or SVT.
//   grass_cs / grass_lr     two-block grouping (w, v) | (k, u).
//   ablation_no_hidden      k = v = 0 and no scalar row: plain smooth-signal
//                           graph learning that ignores hidden nodes.

#include "glopss/problem.hpp"
#include "glopss/prox.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace glopss {

enum class Variant { glopss_cs, glopss_lr, grass_cs, grass_lr, ablation_no_hidden };

inline Variant parse_variant(std::string_view s) {
  if (s == "glopss_cs") return Variant::glopss_cs;
  if (s == "glopss_lr") return Variant::glopss_lr;
  if (s == "grass_cs") return Variant::grass_cs;
  if (s == "grass_lr") return Variant::grass_lr;
  if (s == "ablation_no_hidden" || s == "ablation") return Variant::ablation_no_hidden;
  throw InvalidInput("unknown solver variant: " + std::string(s));
}

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::glopss_cs: return "glopss_cs";
    case Variant::glopss_lr: return "glopss_lr";
    case Variant::grass_cs: return "grass_cs";
    case Variant::grass_lr: return "grass_lr";
    case Variant::ablation_no_hidden: return "ablation_no_hidden";
  }
  return "?";
}

inline bool is_low_rank(Variant v) { return v == Variant::glopss_lr || v == Variant::grass_lr; }
inline bool is_grass(Variant v) { return v == Variant::grass_cs || v == Variant::grass_lr; }

struct StepSizes {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double tau3 = 0.0;
  double tau4 = 0.0;

  double operator[](int i) const {
    switch (i) {
      case 0: return tau1;
      case 1: return tau2;
      case 2: return tau3;
      default: return tau4;
    }
  }
};

/// Residual-balancing penalty update; off unless enabled.
struct AdaptivePenalty {
  bool enabled = false;
  double mu = 10.0;
  double tau_inc = 2.0;
  double tau_dec = 2.0;
  double rho_min = 1e-6;
  double rho_max = 1e6;
};

struct SolverConfig {
  RegParams reg;
  double rho = 1.0;
  std::optional<StepSizes> tau;  // nullopt: safety / sigma_max(M_j)^2
  double safety = 0.9;
  bool analytic_m1_bound = false;  // use the kappa bound instead of computed ||M1||
  double eps_primal = 1e-6;
  double eps_dual = 1e-6;
  int max_iter = 10000;
  Variant variant = Variant::glopss_cs;
  GroupMode group_mode = GroupMode::per_column;
  AdaptivePenalty adaptive;
  bool diagnostics = true;  // objective, KKT residual and M-norm step per iteration
  bool keep_w_history = false;

  void validate() const {
    reg.validate();
    if (!(rho > 0.0)) throw InvalidInput("rho must be positive");
    if (!(safety > 0.0 && safety < 1.0)) throw InvalidInput("step-size safety factor must lie in (0,1)");
    if (tau && !(tau->tau1 > 0.0 && tau->tau2 > 0.0 && tau->tau3 > 0.0 && tau->tau4 > 0.0))
      throw InvalidInput("step sizes must be positive");
    if (!(eps_primal >= 0.0) || !(eps_dual >= 0.0)) throw InvalidInput("tolerances must be non-negative");
    if (max_iter < 1) throw InvalidInput("max_iter must be at least 1");
    if (adaptive.enabled && (!(adaptive.mu > 1.0) || !(adaptive.tau_inc > 1.0) || !(adaptive.tau_dec > 1.0) ||
                             !(adaptive.rho_min > 0.0) || !(adaptive.rho_min <= adaptive.rho_max)))
      throw InvalidInput("invalid adaptive penalty parameters");
  }

  /// Regularization weight of the k-block for this variant.
  double k_weight() const { return is_low_rank(variant) ? reg.gammastar : reg.gamma21; }
};

/// tau_j = safety / sigma_max(M_j)^2 from the computed spectral norms.
inline StepSizes default_step_sizes(const ProblemData& pd, double safety = 0.9) {
  if (!(safety > 0.0 && safety < 1.0)) throw InvalidInput("safety factor must lie in (0,1)");
  const auto& n = pd.norms;
  return {safety / (n.m1 * n.m1), safety / (n.m2 * n.m2), safety / (n.m3 * n.m3), safety / (n.m4 * n.m4)};
}

/// sigma_max of the two grouped blocks [M1 M4] and [M3 M2].
inline std::pair<double, double> grass_block_norms(const ProblemData& pd) {
  const Index rows = pd.o + 1;
  const double first = sigma_max(
      rows,
      [&](const Vector& x) { return Vector(apply_M1(pd, x.head(pd.p)) + apply_M4(pd, x.tail(2))); },
      [&](const Vector& y) {
        Vector out(pd.p + 2);
        out << apply_M1_transpose(pd, y), apply_M4_transpose(pd, y);
        return out;
      });
  const double second = sigma_max(
      rows,
      [&](const Vector& x) { return Vector(apply_M3(pd, x.head(pd.k_size())) + apply_M2(pd, x.tail(pd.o))); },
      [&](const Vector& y) {
        Vector out(pd.k_size() + pd.o);
        out << apply_M3_transpose(pd, y), apply_M2_transpose(pd, y);
        return out;
      });
  return {first, second};
}

/// Step sizes actually used by a variant. GraSS shares one step per group
/// (tau1 = tau4, tau2 = tau3); the ablation sizes tau1 against ||B|| only.
inline StepSizes resolve_step_sizes(const ProblemData& pd, const SolverConfig& cfg) {
  if (cfg.tau) {
    StepSizes t = *cfg.tau;
    if (is_grass(cfg.variant)) {
      t.tau1 = t.tau4 = std::min(t.tau1, t.tau4);
      t.tau2 = t.tau3 = std::min(t.tau2, t.tau3);
    }
    return t;
  }
  const double s = cfg.safety;
  if (is_grass(cfg.variant)) {
    const auto [first, second] = grass_block_norms(pd);
    const double ta = s / (first * first), tb = s / (second * second);
    return {ta, tb, tb, ta};
  }
  StepSizes t = default_step_sizes(pd, s);
  if (cfg.variant == Variant::ablation_no_hidden) {
    const double b_norm_sq = 2.0 * static_cast<double>(pd.o - 1);
    t.tau1 = s / b_norm_sq;
  } else if (cfg.analytic_m1_bound) {
    const double bound = m1_norm_bound(pd);
    t.tau1 = s / (bound * bound);
  }
  return t;
}

/// Initial iterate: uniform adjacency 1/o, u = B w, k = 0, v = 0, lambda = 0.
inline IterateState initial_state(const ProblemData& pd) {
  IterateState y = IterateState::zeros(pd.o);
  y.w.setConstant(1.0 / static_cast<double>(pd.o));
  y.u = apply_B(y.w, pd.o);
  return y;
}

namespace detail {

inline Vector prox_k(const ProblemData& pd, const SolverConfig& cfg, const Vector& k, double tau) {
  if (is_low_rank(cfg.variant)) return prox_f3_lowrank(k, pd.b_indices, cfg.reg.gammastar, tau);
  return prox_f3_group(k, pd.b_indices, cfg.reg.gamma21, tau, cfg.group_mode);
}

inline double group_penalty(const ProblemData& pd, const Vector& k, GroupMode mode) {
  if (mode == GroupMode::global) return k.norm();
  double sum = 0.0;
  for (Index c = 0; c < pd.o; ++c) sum += k.segment(c * pd.o, pd.o).norm();
  return sum;
}

inline double nuclear_norm(const ProblemData& pd, const Vector& k) {
  Eigen::BDCSVD<Matrix> svd(Eigen::Map<const Matrix>(k.data(), pd.o, pd.o));
  return svd.singularValues().sum();
}

}  // namespace detail

/// One Gauss-Seidel sweep w -> u -> k -> v -> lambda.
inline IterateState step_glopss(const ProblemData& pd, const SolverConfig& cfg, const StepSizes& tau, double rho,
                                const IterateState& y) {
  const Index o = pd.o;
  const bool ablation = cfg.variant == Variant::ablation_no_hidden;
  IterateState next = y;
  const double lam0 = y.lambda(0) / rho;
  const Vector lam_deg = y.lambda.tail(o) / rho;

  // w
  double q0 = ablation ? 0.0 : scalar_row(pd, y.w, y.k, y.v) - lam0;
  Vector q_deg = apply_B(y.w, o) - y.u - lam_deg;
  Vector grad_w = apply_B_transpose(q_deg, o);
  if (!ablation) grad_w += 0.5 * q0 * pd.z;
  next.w = prox_f1(y.w - tau.tau1 * grad_w, pd.z, cfg.reg.beta, tau.tau1 / rho);

  // u
  const Vector bw = apply_B(next.w, o);
  q_deg = bw - y.u - lam_deg;
  next.u = prox_f2(y.u + tau.tau2 * q_deg, cfg.reg.alpha, tau.tau2 / rho);

  if (!ablation) {
    const double half_zw = 0.5 * pd.z.dot(next.w);
    // k
    q0 = half_zw + 2.0 * trace_of(pd, y.k) + pd.a[0] * y.v(0) + pd.a[1] * y.v(1) - lam0;
    Vector k_hat = y.k;
    for (Index idx : pd.b_indices) k_hat(idx) -= tau.tau3 * 2.0 * q0;
    next.k = detail::prox_k(pd, cfg, k_hat, tau.tau3 / rho);
    // v
    q0 = half_zw + 2.0 * trace_of(pd, next.k) + pd.a[0] * y.v(0) + pd.a[1] * y.v(1) - lam0;
    Vector v_hat(2);
    v_hat << y.v(0) - tau.tau4 * pd.a[0] * q0, y.v(1) - tau.tau4 * pd.a[1] * q0;
    next.v = prox_f4(v_hat, tau.tau4 / rho);
    // lambda
    next.lambda(0) = y.lambda(0) - rho * (half_zw + 2.0 * trace_of(pd, next.k) + pd.a[0] * next.v(0) +
                                          pd.a[1] * next.v(1));
  }
  next.lambda.tail(o) = y.lambda.tail(o) - rho * (bw - next.u);
  return next;
}

inline IterateState step_glopss(const ProblemData& pd, const SolverConfig& cfg, const IterateState& y) {
  check_dimensions(pd, y);
  return step_glopss(pd, cfg, resolve_step_sizes(pd, cfg), cfg.rho, y);
}

/// Two-block sweep (w, v) -> (k, u) -> lambda; each group is linearized jointly.
inline IterateState step_grass(const ProblemData& pd, const SolverConfig& cfg, const StepSizes& tau, double rho,
                               const IterateState& y) {
  const Index o = pd.o;
  IterateState next = y;
  const double lam0 = y.lambda(0) / rho;
  const Vector lam_deg = y.lambda.tail(o) / rho;
  const double ta = tau.tau1, tb = tau.tau3;

  // (w, v) from the residual at the previous iterate
  double q0 = scalar_row(pd, y.w, y.k, y.v) - lam0;
  Vector q_deg = apply_B(y.w, o) - y.u - lam_deg;
  const Vector grad_w = 0.5 * q0 * pd.z + apply_B_transpose(q_deg, o);
  next.w = prox_f1(y.w - ta * grad_w, pd.z, cfg.reg.beta, ta / rho);
  Vector v_hat(2);
  v_hat << y.v(0) - ta * pd.a[0] * q0, y.v(1) - ta * pd.a[1] * q0;
  next.v = prox_f4(v_hat, ta / rho);

  // (k, u) with the fresh (w, v)
  const Vector bw = apply_B(next.w, o);
  q0 = scalar_row(pd, next.w, y.k, next.v) - lam0;
  q_deg = bw - y.u - lam_deg;
  Vector k_hat = y.k;
  for (Index idx : pd.b_indices) k_hat(idx) -= tb * 2.0 * q0;
  next.k = detail::prox_k(pd, cfg, k_hat, tb / rho);
  next.u = prox_f2(y.u + tb * q_deg, cfg.reg.alpha, tb / rho);

  next.lambda(0) = y.lambda(0) - rho * scalar_row(pd, next.w, next.k, next.v);
  next.lambda.tail(o) = y.lambda.tail(o) - rho * (bw - next.u);
  return next;
}

inline IterateState step_grass(const ProblemData& pd, const SolverConfig& cfg, const IterateState& y) {
  check_dimensions(pd, y);
  return step_grass(pd, cfg, resolve_step_sizes(pd, cfg), cfg.rho, y);
}

/// Objective f1 + f2 + f3 + f4 at an iterate (indicators assumed satisfied).
inline double objective(const ProblemData& pd, const SolverConfig& cfg, const IterateState& y) {
  const auto& r = cfg.reg;
  double f = 0.5 * pd.z.dot(y.w) + r.beta * y.w.squaredNorm();
  for (Index i = 0; i < y.u.size(); ++i) f -= r.alpha * std::log(y.u(i));
  if (cfg.variant == Variant::ablation_no_hidden) return f;
  f += 2.0 * trace_of(pd, y.k);
  if (is_low_rank(cfg.variant)) {
    if (r.gammastar > 0.0) f += r.gammastar * detail::nuclear_norm(pd, y.k);
  } else if (r.gamma21 > 0.0) {
    f += r.gamma21 * detail::group_penalty(pd, y.k, cfg.group_mode);
  }
  return f + pd.d[0] * y.v(0) + pd.d[1] * y.v(1);
}

/// Norm of the projection-based KKT residual map: each block contributes
/// x_j - prox_{f_j}(x_j + M_j^T lambda), plus the constraint residual A x.
/// Zero exactly at KKT points.
inline double kkt_residual(const ProblemData& pd, const SolverConfig& cfg, const IterateState& y) {
  check_dimensions(pd, y);
  const bool ablation = cfg.variant == Variant::ablation_no_hidden;
  Vector lam = y.lambda;
  if (ablation) lam(0) = 0.0;
  double sq = (y.w - prox_f1(y.w + apply_M1_transpose(pd, lam), pd.z, cfg.reg.beta, 1.0)).squaredNorm();
  sq += (y.u - prox_f2(y.u + apply_M2_transpose(pd, lam), cfg.reg.alpha, 1.0)).squaredNorm();
  const ConstraintResidual ax = constraint_residual(pd, y);
  sq += ax.degree.squaredNorm();
  if (!ablation) {
    sq += (y.k - detail::prox_k(pd, cfg, y.k + apply_M3_transpose(pd, lam), 1.0)).squaredNorm();
    sq += (y.v - prox_f4(y.v + apply_M4_transpose(pd, lam), 1.0)).squaredNorm();
    sq += ax.scalar * ax.scalar;
  }
  return std::sqrt(sq);
}

/// ||d||_M^2 for the block-diagonal metric
/// M = Diag[rho/tau_j I - rho M_j^T M_j (j = 1..3); rho/tau_4 I; 1/rho I].
inline double m_norm_squared(const ProblemData& pd, const StepSizes& tau, double rho, const IterateState& d) {
  double s = rho / tau.tau1 * d.w.squaredNorm() - rho * apply_M1(pd, d.w).squaredNorm();
  s += rho / tau.tau2 * d.u.squaredNorm() - rho * d.u.squaredNorm();
  s += rho / tau.tau3 * d.k.squaredNorm() - rho * 4.0 * std::pow(trace_of(pd, d.k), 2);
  s += rho / tau.tau4 * d.v.squaredNorm();
  s += d.lambda.squaredNorm() / rho;
  return s;
}

inline IterateState difference(const IterateState& a, const IterateState& b) {
  return {a.w - b.w, a.u - b.u, a.k - b.k, a.v - b.v, a.lambda - b.lambda};
}

/// Descent constant c = min{rho/tau_j - rho sigma_j^2, 1/rho - mu} with
/// mu = (1/2 + tau_4 sigma_4^2 / 2) / rho. c <= 0 means no guarantee.
inline double descent_constant(const SpectralNorms& n, const StepSizes& tau, double rho) {
  const double mu = (0.5 + tau.tau4 * n.m4 * n.m4 / 2.0) / rho;
  double c = 1.0 / rho - mu;
  for (int j = 0; j < 4; ++j) c = std::min(c, rho / tau[j] - rho * n[j] * n[j]);
  return c;
}

/// Residual-balancing update: grow rho when the primal residual dominates,
/// shrink it when the dual residual dominates, clamp to [rho_min, rho_max].
inline double adaptive_rho(double r_primal, double r_dual, double rho, const AdaptivePenalty& ap) {
  double next = rho;
  if (r_primal > ap.mu * r_dual) {
    next = ap.tau_inc * rho;
  } else if (r_dual > ap.mu * r_primal) {
    next = rho / ap.tau_dec;
  }
  return std::clamp(next, ap.rho_min, ap.rho_max);
}

struct IterationRecord {
  int iter = 0;
  double r_primal = 0.0;  // ||A x||: degree rows and scalar row
  double r_dual = 0.0;    // ||rho B^T (u+ - u)||
  double r_scalar = 0.0;  // |scalar row|
  double r_degree = 0.0;  // ||B w - u||, the residual Algorithm 1 monitors
  double objective = 0.0;
  double kkt = 0.0;
  double m_step = 0.0;    // ||y_i - y_{i+1}||_M
  double m_gap = std::numeric_limits<double>::quiet_NaN();  // ||y_{i+1} - y*||_M
  double w_gap = std::numeric_limits<double>::quiet_NaN();  // ||w_{i+1} - w*||
  double rho = 0.0;
  double time_ms = 0.0;
};

using ConvergenceHistory = std::vector<IterationRecord>;

enum class SolveStatus { converged, max_iter, diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::diverged: return "diverged";
  }
  return "?";
}

struct SolveResult {
  IterateState state;
  Matrix adjacency;  // unvec(w)
  Matrix k_matrix;   // unvec(k), column-major
  double r = 0.0;    // v_1
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
  StepSizes steps;
  double rho_final = 0.0;
  double descent_c = 0.0;
  double final_kkt = 0.0;
  double final_constraint = 0.0;
  double wall_ms = 0.0;
  std::string message;
  std::vector<Vector> w_history;  // filled when keep_w_history
};

struct SolveOutput {
  SolveResult result;
  ConvergenceHistory history;
};

using IterateObserver = std::function<void(int, const IterateState&)>;

inline constexpr double divergence_norm = 1e12;

/// Runs the configured variant until r_p <= eps_p and r_d <= eps_d or
/// max_iter sweeps. A reference point, when given, adds ||y - y*||_M and
/// ||w - w*|| to every record.
inline SolveOutput solve(const ProblemData& pd, const SolverConfig& cfg, std::optional<IterateState> init = {},
                         const IterateState* reference = nullptr, const IterateObserver& observer = {}) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  SolveOutput out;
  SolveResult& res = out.result;
  IterateState y = init ? *init : initial_state(pd);
  check_dimensions(pd, y);
  if (reference) check_dimensions(pd, *reference);
  const bool ablation = cfg.variant == Variant::ablation_no_hidden;
  if (ablation) {
    y.k.setZero();
    y.v.setZero();
    y.lambda(0) = 0.0;
  }
  res.steps = resolve_step_sizes(pd, cfg);
  double rho = cfg.rho;
  res.descent_c = descent_constant(pd.norms, res.steps, rho);
  out.history.reserve(static_cast<std::size_t>(std::min(cfg.max_iter, 100000)));
  if (cfg.keep_w_history) res.w_history.push_back(y.w);
  if (observer) observer(0, y);

  res.status = SolveStatus::max_iter;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto t0 = clock::now();
    IterateState next = is_grass(cfg.variant) ? step_grass(pd, cfg, res.steps, rho, y)
                                              : step_glopss(pd, cfg, res.steps, rho, y);
    const auto t1 = clock::now();

    if (!next.all_finite() || next.squared_norm() > divergence_norm * divergence_norm) {
      res.status = SolveStatus::diverged;
      res.message = "iterate became non-finite or exceeded 1e12 in norm at iteration " + std::to_string(it);
      res.iterations = it - 1;
      break;
    }

    IterationRecord rec;
    rec.iter = it;
    rec.rho = rho;
    rec.time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const ConstraintResidual ax = constraint_residual(pd, next);
    rec.r_degree = ax.degree.norm();
    rec.r_scalar = ablation ? 0.0 : std::abs(ax.scalar);
    rec.r_primal = std::hypot(rec.r_degree, rec.r_scalar);
    rec.r_dual = (rho * apply_B_transpose(next.u - y.u, pd.o)).norm();
    if (cfg.diagnostics) {
      rec.objective = objective(pd, cfg, next);
      rec.kkt = kkt_residual(pd, cfg, next);
      rec.m_step = std::sqrt(std::max(0.0, m_norm_squared(pd, res.steps, rho, difference(y, next))));
    } else {
      rec.objective = rec.kkt = rec.m_step = std::numeric_limits<double>::quiet_NaN();
    }
    if (reference) {
      rec.m_gap = std::sqrt(std::max(0.0, m_norm_squared(pd, res.steps, rho, difference(next, *reference))));
      rec.w_gap = (next.w - reference->w).norm();
    }
    out.history.push_back(rec);

    y = std::move(next);
    res.iterations = it;
    if (cfg.keep_w_history) res.w_history.push_back(y.w);
    if (observer) observer(it, y);

    if (rec.r_primal <= cfg.eps_primal && rec.r_dual <= cfg.eps_dual) {
      res.status = SolveStatus::converged;
      break;
    }
    if (cfg.adaptive.enabled) rho = adaptive_rho(rec.r_primal, rec.r_dual, rho, cfg.adaptive);
  }

  res.state = y;
  res.adjacency = unvec_upper(y.w, pd.o);
  res.k_matrix = Eigen::Map<const Matrix>(y.k.data(), pd.o, pd.o);
  res.r = y.v(0);
  res.rho_final = rho;
  res.final_kkt = kkt_residual(pd, cfg, y);
  const ConstraintResidual ax = constraint_residual(pd, y);
  res.final_constraint = ablation ? ax.degree.norm() : ax.norm();
  res.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t_start).count();
  if (res.message.empty()) res.message = to_string(res.status);
  return out;
}

}  // namespace glopss
