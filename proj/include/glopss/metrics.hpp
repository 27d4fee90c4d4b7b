#pragma once

// Recovery-quality metrics: edge F-score, effective (Schur-complement)
// Laplacian of the observed nodes, recovery diagnostics and suboptimality.

#include "glopss/graph.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <vector>

namespace glopss {

/// Default relative weight cutoff used to binarize estimated graphs.
inline constexpr double default_edge_threshold = 1e-4;

struct EdgeRecoveryReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double edge_threshold = default_edge_threshold;
  std::size_t true_edges = 0;
  std::size_t estimated_edges = 0;
  std::size_t matched_edges = 0;
};

/// Edges (i < j) whose weight exceeds rel_threshold times the largest weight.
inline std::vector<char> edge_set(const Matrix& W, double rel_threshold) {
  const Index o = W.rows();
  std::vector<char> edges(static_cast<std::size_t>(pair_count(o)), 0);
  double max_w = 0.0;
  for (Index i = 0; i < o; ++i)
    for (Index j = i + 1; j < o; ++j) max_w = std::max(max_w, W(i, j));
  if (max_w <= 0.0) return edges;
  const double cut = rel_threshold * max_w;
  std::size_t l = 0;
  for (Index i = 0; i < o; ++i)
    for (Index j = i + 1; j < o; ++j, ++l) edges[l] = W(i, j) > cut ? 1 : 0;
  return edges;
}

inline EdgeRecoveryReport f_score(const Matrix& w_true, const Matrix& w_est,
                                  double rel_threshold = default_edge_threshold) {
  if (w_true.rows() != w_true.cols() || w_est.rows() != w_est.cols() || w_true.rows() != w_est.rows())
    throw InvalidInput("f_score: dimension mismatch");
  const auto truth = edge_set(w_true, rel_threshold);
  const auto est = edge_set(w_est, rel_threshold);
  EdgeRecoveryReport rep;
  rep.edge_threshold = rel_threshold;
  for (std::size_t l = 0; l < truth.size(); ++l) {
    rep.true_edges += truth[l];
    rep.estimated_edges += est[l];
    rep.matched_edges += truth[l] && est[l];
  }
  if (rep.true_edges == 0 && rep.estimated_edges == 0) {
    rep.precision = rep.recall = rep.f_score = 1.0;
    return rep;
  }
  rep.precision = rep.estimated_edges ? static_cast<double>(rep.matched_edges) / rep.estimated_edges : 0.0;
  rep.recall = rep.true_edges ? static_cast<double>(rep.matched_edges) / rep.true_edges : 0.0;
  const double denom = rep.precision + rep.recall;
  rep.f_score = denom > 0.0 ? 2.0 * rep.precision * rep.recall / denom : 0.0;
  return rep;
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix.
inline Matrix symmetric_pinv(const Matrix& S, double rel_tol = 1e-10) {
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const Vector& ev = es.eigenvalues();
  const double cut = rel_tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Vector inv = Vector::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) > cut) inv(i) = 1.0 / ev(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Schur complement L_O - L_OH L_HH^+ L_HO of the hidden block.
inline Matrix effective_laplacian(const Matrix& l_full, const ObservationMask& mask) {
  const BlockPartition blocks = partition(l_full, mask);
  if (mask.hidden_count() == 0) return blocks.observed;
  Matrix eff = blocks.observed - blocks.observed_hidden * symmetric_pinv(blocks.hidden) *
                                     blocks.observed_hidden.transpose();
  return 0.5 * (eff + eff.transpose());
}

struct RecoveryDiagnostics {
  double frobenius_error = 0.0;     // ||c L_hat - L_eff||_F after scale alignment
  double raw_frobenius_error = 0.0; // ||L_hat - L_eff||_F
  double scale = 1.0;               // c
  double xi = 1.0;                  // o / m
  double delta_hat = 0.0;           // sigma_min(X_O X_O^T) / n
  double xi_delta = 0.0;
  std::size_t s_o = 0;              // non-zero entries of L_eff
};

/// Entries of M with |M_ij| > rel_threshold * max |M|.
inline std::size_t support_size(const Matrix& M, double rel_threshold = default_edge_threshold) {
  const double max_abs = M.cwiseAbs().maxCoeff();
  if (max_abs <= 0.0) return 0;
  return static_cast<std::size_t>((M.array().abs() > rel_threshold * max_abs).count());
}

/// Compares an estimated observed-node Laplacian with the effective
/// Laplacian. The estimator fixes the overall edge-weight scale only through
/// alpha, so the headline error uses the least-squares scale c that best
/// aligns L_hat with L_eff; the unaligned error is reported alongside.
inline RecoveryDiagnostics recovery_error(const Matrix& l_est_obs, const Matrix& l_full, const ObservationMask& mask,
                                          const std::optional<Matrix>& x_obs = std::nullopt,
                                          double rel_threshold = default_edge_threshold) {
  const Matrix l_eff = effective_laplacian(l_full, mask);
  if (l_est_obs.rows() != l_eff.rows() || l_est_obs.cols() != l_eff.cols())
    throw InvalidInput("recovery_error: estimate has the wrong dimension");
  RecoveryDiagnostics d;
  const double est_sq = l_est_obs.squaredNorm();
  d.scale = est_sq > 0.0 ? (l_est_obs.array() * l_eff.array()).sum() / est_sq : 0.0;
  d.frobenius_error = (d.scale * l_est_obs - l_eff).norm();
  d.raw_frobenius_error = (l_est_obs - l_eff).norm();
  d.xi = mask.observability();
  d.s_o = support_size(l_eff, rel_threshold);
  if (x_obs) {
    if (x_obs->rows() != l_eff.rows()) throw InvalidInput("recovery_error: signal rows do not match");
    const Matrix gram = (*x_obs) * x_obs->transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    d.delta_hat = std::max(0.0, es.eigenvalues().minCoeff()) / static_cast<double>(x_obs->cols());
  }
  d.xi_delta = d.xi * d.delta_hat;
  return d;
}

/// ||w_i - w*||_2 for every stored iterate.
inline std::vector<double> suboptimality(const std::vector<Vector>& w_history, const Vector& w_star) {
  std::vector<double> out;
  out.reserve(w_history.size());
  for (const Vector& w : w_history) {
    if (w.size() != w_star.size()) throw InvalidInput("suboptimality: dimension mismatch");
    out.push_back((w - w_star).norm());
  }
  return out;
}

}  // namespace glopss
