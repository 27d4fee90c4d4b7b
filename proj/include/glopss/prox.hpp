#pragma once

// Closed-form proximal operators of the four separable objective blocks
//   f1(w) = 1/2 z^T w + beta ||w||^2 + I(w >= 0)
//   f2(u) = -alpha 1^T log(u)
//   f3(k) = 2 b^T k + gamma_21 ||K~||_{2,1}   (or gamma_* ||K~||_*)
//   f4(v) = d^T v + I(v >= 0),  d = (1, 0)
// Every function returns prox_{tau f}(input).

#include "glopss/graph.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string_view>
#include <vector>

namespace glopss {

struct RegParams {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma21 = 0.0;
  double gammastar = 0.0;

  void validate() const {
    if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
    if (!(beta >= 0.0) || !(gamma21 >= 0.0) || !(gammastar >= 0.0))
      throw InvalidInput("beta, gamma21 and gammastar must be non-negative");
    if (gamma21 > 0.0 && gammastar > 0.0) throw InvalidInput("at most one of gamma21, gammastar may be non-zero");
  }
};

enum class GroupMode { per_column, global };

inline GroupMode parse_group_mode(std::string_view s) {
  if (s == "per_column") return GroupMode::per_column;
  if (s == "global") return GroupMode::global;
  throw InvalidInput("unknown group mode: " + std::string(s));
}

inline const char* to_string(GroupMode m) { return m == GroupMode::per_column ? "per_column" : "global"; }

namespace detail {
inline void require_positive_step(double tau) {
  if (!(tau > 0.0)) throw InvalidInput("proximal step must be positive");
}
constexpr double zero_group_norm = 1e-300;
}  // namespace detail

inline Vector prox_f1(const Vector& w, const Vector& z, double beta, double tau) {
  detail::require_positive_step(tau);
  if (w.size() != z.size()) throw InvalidInput("prox_f1: dimension mismatch");
  return ((w - 0.5 * tau * z) / (2.0 * tau * beta + 1.0)).cwiseMax(0.0);
}

inline Vector prox_f2(const Vector& u, double alpha, double tau) {
  detail::require_positive_step(tau);
  if (!(alpha > 0.0)) throw InvalidInput("prox_f2: alpha must be positive");
  const double c = 4.0 * alpha * tau;
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    const double x = u(i);
    const double r = std::sqrt(x * x + c);
    // (x + r) / 2 loses everything to cancellation for large negative x;
    // c / (2 (r - x)) is the same number.
    out(i) = x >= 0.0 ? 0.5 * (x + r) : 0.5 * c / (r - x);
  }
  return out;
}

/// Group soft-thresholding [1 - t/||g||]_+ g applied in place.
inline void shrink_group(Eigen::Ref<Vector> g, double threshold) {
  const double norm = g.norm();
  if (norm < detail::zero_group_norm || norm <= threshold) {
    g.setZero();
    return;
  }
  g *= 1.0 - threshold / norm;
}

/// prox of 2 b^T k + gamma ||vec^{-1}(k)||_{2,1}; groups are the o columns of
/// K~ (per_column) or the whole vector (global).
inline Vector prox_f3_group(const Vector& k, const std::vector<Index>& b_indices, double gamma21, double tau,
                            GroupMode mode = GroupMode::per_column) {
  detail::require_positive_step(tau);
  const auto o = static_cast<Index>(b_indices.size());
  if (k.size() != o * o) throw InvalidInput("prox_f3_group: k must have o^2 entries");
  Vector out = k;
  for (Index idx : b_indices) out(idx) -= 2.0 * tau;
  const double threshold = tau * gamma21;
  if (threshold == 0.0) return out;
  if (mode == GroupMode::global) {
    shrink_group(out, threshold);
  } else {
    for (Index c = 0; c < o; ++c) shrink_group(out.segment(c * o, o), threshold);
  }
  return out;
}

inline Vector prox_f4(const Vector& v, double tau) {
  detail::require_positive_step(tau);
  if (v.size() != 2) throw InvalidInput("prox_f4: v must have two entries");
  Vector out = v;
  out(0) -= tau;
  return out.cwiseMax(0.0);
}

/// Singular value thresholding: argmin_X nu ||X||_* + 1/2 ||X - Y||_F^2.
/// Uses a full SVD; beyond a few hundred rows a randomized partial SVD would
/// be the natural replacement.
inline Matrix svt(const Matrix& Y, double nu) {
  if (!(nu >= 0.0)) throw InvalidInput("svt: threshold must be non-negative");
  if (nu == 0.0) return Y;
  Eigen::BDCSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw std::runtime_error("svt: SVD failed");
  const Vector s = (svd.singularValues().array() - nu).cwiseMax(0.0).matrix();
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

/// prox of 2 b^T k + gamma_* ||vec^{-1}(k)||_*.
inline Vector prox_f3_lowrank(const Vector& k, const std::vector<Index>& b_indices, double gammastar, double tau) {
  detail::require_positive_step(tau);
  const auto o = static_cast<Index>(b_indices.size());
  if (k.size() != o * o) throw InvalidInput("prox_f3_lowrank: k must have o^2 entries");
  Vector shifted = k;
  for (Index idx : b_indices) shifted(idx) -= 2.0 * tau;
  const Matrix thresholded = svt(Eigen::Map<const Matrix>(shifted.data(), o, o), tau * gammastar);
  return Eigen::Map<const Vector>(thresholded.data(), o * o);
}

}  // namespace glopss
