#pragma once

// Independent reference implementations shared by the unit and acceptance
// tests: a derivative-free minimizer, dense operator builders written from
// the definitions, and a straight-line dense solver step.

#include "glopss/problem.hpp"
#include "glopss/prox.hpp"
#include "glopss/solver.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace oracle {

using glopss::Index;
using glopss::Matrix;
using glopss::Vector;

/// Pattern search over the coordinate axes plus a fresh random orthonormal
/// basis every sweep; halves the step when no direction gives a sufficient
/// decrease or after a fixed number of sweeps at one step length, which keeps
/// zig-zagging along kinks bounded. Handles non-smooth convex objectives and
/// +inf outside the domain.
inline Vector minimize(const std::function<double(const Vector&)>& f, Vector x, double step, unsigned seed,
                       double min_step = 1e-13) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  const Index n = x.size();
  double fx = f(x);
  int sweeps = 0;
  while (step > min_step) {
    Matrix G(n, n);
    for (Index i = 0; i < G.size(); ++i) G.data()[i] = normal(gen);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ();
    Matrix dirs(n, 2 * n);
    dirs << Matrix::Identity(n, n), Q;
    bool improved = false;
    for (Index d = 0; d < dirs.cols(); ++d) {
      for (double sign : {1.0, -1.0}) {
        // Keep going, with doubling strides, while the direction pays off.
        for (double s = step;; s *= 2.0) {
          const Vector cand = x + sign * s * dirs.col(d);
          const double fc = f(cand);
          if (!(fc < fx - std::max(1e-4 * s * s, 1e-14 * (1.0 + std::abs(fx))))) break;
          x = cand;
          fx = fc;
          improved = true;
        }
      }
    }
    if (!improved || ++sweeps == 50) {
      step *= 0.5;
      sweeps = 0;
    }
  }
  return x;
}

/// Minimizes a prox objective from several starts and keeps the best.
inline Vector brute_prox(const std::function<double(const Vector&)>& f, const std::vector<Vector>& starts,
                         unsigned seed) {
  Vector best;
  double fbest = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const double scale = std::max(1.0, starts[s].cwiseAbs().maxCoeff());
    Vector x = minimize(f, starts[s], scale, seed + static_cast<unsigned>(s));
    const double fx = f(x);
    if (fx < fbest) {
      fbest = fx;
      best = x;
    }
  }
  return best;
}

/// Nuclear norm; matrices with at most two rows use the identity
/// s1 + s2 = sqrt(tr G + 2 sqrt(det G)) with G = X X^T; det G is summed
/// from 2x2 minors so rank-one inputs give exactly zero.
inline double nuclear(const Matrix& X) {
  if (X.rows() == 1) return X.norm();
  if (X.rows() == 2) {
    double det = 0.0;
    for (Index i = 0; i < X.cols(); ++i)
      for (Index j = i + 1; j < X.cols(); ++j) {
        const double minor = X(0, i) * X(1, j) - X(0, j) * X(1, i);
        det += minor * minor;
      }
    return std::sqrt(X.squaredNorm() + 2.0 * std::sqrt(det));
  }
  return Eigen::JacobiSVD<Matrix>(X).singularValues().sum();
}

/// Node-by-pair incidence: column (i, j) has ones in rows i and j.
inline Matrix incidence(Index o) {
  Matrix B = Matrix::Zero(o, o * (o - 1) / 2);
  Index col = 0;
  for (Index i = 0; i < o; ++i)
    for (Index j = i + 1; j < o; ++j, ++col) {
      B(i, col) = 1.0;
      B(j, col) = 1.0;
    }
  return B;
}

/// Constraint blocks built entry by entry.
struct DenseBlocks {
  Matrix M1, M2, M3, M4;
  Matrix A() const {
    Matrix out(M1.rows(), M1.cols() + M2.cols() + M3.cols() + M4.cols());
    out << M1, M2, M3, M4;
    return out;
  }
};

inline DenseBlocks dense_blocks(const Vector& z, Index o) {
  DenseBlocks b;
  const Index p = o * (o - 1) / 2;
  b.M1 = Matrix::Zero(o + 1, p);
  b.M1.row(0) = 0.5 * z.transpose();
  b.M1.bottomRows(o) = incidence(o);
  b.M2 = Matrix::Zero(o + 1, o);
  for (Index i = 0; i < o; ++i) b.M2(1 + i, i) = -1.0;
  b.M3 = Matrix::Zero(o + 1, o * o);
  for (Index i = 0; i < o; ++i) b.M3(0, i + i * o) = 2.0;  // diagonal of column-major K
  b.M4 = Matrix::Zero(o + 1, 2);
  b.M4(0, 0) = 1.0;
  b.M4(0, 1) = -1.0;
  return b;
}

inline double spectral(const Matrix& M) { return Eigen::JacobiSVD<Matrix>(M).singularValues()(0); }

/// One linearized Gauss-Seidel sweep using dense matrices: each block takes
/// x_j <- prox_{(tau_j/rho) f_j}(x_j - tau_j M_j^T (A x - lambda/rho)) with
/// the freshest values of the earlier blocks.
inline glopss::IterateState dense_step(const glopss::ProblemData& pd, const glopss::RegParams& reg,
                                       const glopss::StepSizes& tau, double rho, const glopss::IterateState& y,
                                       bool low_rank, glopss::GroupMode mode) {
  const DenseBlocks b = dense_blocks(pd.z, pd.o);
  glopss::IterateState x = y;
  const auto residual = [&] {
    return Vector(b.M1 * x.w + b.M2 * x.u + b.M3 * x.k + b.M4 * x.v - y.lambda / rho);
  };
  x.w = glopss::prox_f1(x.w - tau.tau1 * b.M1.transpose() * residual(), pd.z, reg.beta, tau.tau1 / rho);
  x.u = glopss::prox_f2(x.u - tau.tau2 * b.M2.transpose() * residual(), reg.alpha, tau.tau2 / rho);
  const Vector k_in = x.k - tau.tau3 * b.M3.transpose() * residual();
  x.k = low_rank ? glopss::prox_f3_lowrank(k_in, pd.b_indices, reg.gammastar, tau.tau3 / rho)
                 : glopss::prox_f3_group(k_in, pd.b_indices, reg.gamma21, tau.tau3 / rho, mode);
  x.v = glopss::prox_f4(x.v - tau.tau4 * b.M4.transpose() * residual(), tau.tau4 / rho);
  x.lambda = y.lambda - rho * (b.A() * glopss::stack_primal(x));
  return x;
}

}  // namespace oracle
