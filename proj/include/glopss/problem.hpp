#pragma once

// Problem data derived from observed signals and the linear constraint
// operator A = [M1 M2 M3 M4] acting on x = [w; u; k; v].
//
// Row 0 of A is the scalar constraint  1/2 z^T w + 2 b^T k + a^T v = 0,
// rows 1..o are the degree constraints B w - u = 0. k = vec(K~) is stored
// column-major, so b picks entries i*o + i.

#include "glopss/graph.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <vector>

namespace glopss {

struct SpectralNorms {
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;

  double operator[](int i) const { return std::array<double, 4>{m1, m2, m3, m4}[static_cast<std::size_t>(i)]; }
};

struct ProblemData {
  Index o = 0;
  Index p = 0;
  Index samples = 0;
  Vector z;       // pairwise squared distances, length p
  Matrix c_obs;   // X_O X_O^T, diagnostic only
  std::vector<Index> b_indices;
  std::array<double, 2> a{1.0, -1.0};
  std::array<double, 2> d{1.0, 0.0};
  double kappa = 0.0;
  SpectralNorms norms;

  Index k_size() const { return o * o; }
};

/// Primal/dual iterate y = (w, u, k, v, lambda); lambda(0) is the scalar-row
/// multiplier, lambda.tail(o) the degree-row multipliers.
struct IterateState {
  Vector w;
  Vector u;
  Vector k;
  Vector v;
  Vector lambda;

  static IterateState zeros(Index o) {
    return {Vector::Zero(pair_count(o)), Vector::Zero(o), Vector::Zero(o * o), Vector::Zero(2), Vector::Zero(o + 1)};
  }

  bool all_finite() const {
    return w.allFinite() && u.allFinite() && k.allFinite() && v.allFinite() && lambda.allFinite();
  }

  double squared_norm() const {
    return w.squaredNorm() + u.squaredNorm() + k.squaredNorm() + v.squaredNorm() + lambda.squaredNorm();
  }
};

inline void check_dimensions(const ProblemData& pd, const IterateState& y) {
  if (y.w.size() != pd.p || y.u.size() != pd.o || y.k.size() != pd.k_size() || y.v.size() != 2 ||
      y.lambda.size() != pd.o + 1)
    throw InvalidInput("iterate dimensions do not match problem data");
}

// Matrix-free blocks. Each M_i maps its variable block to R^{1+o}.

inline Vector apply_M1(const ProblemData& pd, const Vector& w) {
  Vector out(pd.o + 1);
  out(0) = 0.5 * pd.z.dot(w);
  out.tail(pd.o) = apply_B(w, pd.o);
  return out;
}

inline Vector apply_M1_transpose(const ProblemData& pd, const Vector& y) {
  return 0.5 * y(0) * pd.z + apply_B_transpose(y.tail(pd.o), pd.o);
}

inline Vector apply_M2(const ProblemData& pd, const Vector& u) {
  Vector out(pd.o + 1);
  out(0) = 0.0;
  out.tail(pd.o) = -u;
  return out;
}

inline Vector apply_M2_transpose(const ProblemData& pd, const Vector& y) { return -y.tail(pd.o); }

inline double trace_of(const ProblemData& pd, const Vector& k) {
  double t = 0.0;
  for (Index idx : pd.b_indices) t += k(idx);
  return t;
}

inline Vector apply_M3(const ProblemData& pd, const Vector& k) {
  Vector out = Vector::Zero(pd.o + 1);
  out(0) = 2.0 * trace_of(pd, k);
  return out;
}

inline Vector apply_M3_transpose(const ProblemData& pd, const Vector& y) {
  Vector out = Vector::Zero(pd.k_size());
  for (Index idx : pd.b_indices) out(idx) = 2.0 * y(0);
  return out;
}

inline Vector apply_M4(const ProblemData& pd, const Vector& v) {
  Vector out = Vector::Zero(pd.o + 1);
  out(0) = pd.a[0] * v(0) + pd.a[1] * v(1);
  return out;
}

inline Vector apply_M4_transpose(const ProblemData& pd, const Vector& y) {
  Vector out(2);
  out << pd.a[0] * y(0), pd.a[1] * y(0);
  return out;
}

struct ConstraintResidual {
  double scalar = 0.0;
  Vector degree;

  double norm() const { return std::sqrt(scalar * scalar + degree.squaredNorm()); }
  Vector stacked() const {
    Vector out(degree.size() + 1);
    out(0) = scalar;
    out.tail(degree.size()) = degree;
    return out;
  }
};

inline double scalar_row(const ProblemData& pd, const Vector& w, const Vector& k, const Vector& v) {
  return 0.5 * pd.z.dot(w) + 2.0 * trace_of(pd, k) + pd.a[0] * v(0) + pd.a[1] * v(1);
}

/// A x for x = [w; u; k; v], split into the scalar row and the degree rows.
inline ConstraintResidual constraint_residual(const ProblemData& pd, const IterateState& y) {
  check_dimensions(pd, y);
  return {scalar_row(pd, y.w, y.k, y.v), apply_B(y.w, pd.o) - y.u};
}

/// Largest singular value of a short-and-wide operator, from the exact Gram
/// matrix G = M M^T assembled column by column through the matrix-free maps.
template <class Apply, class ApplyT>
double sigma_max(Index rows, Apply apply, ApplyT apply_t) {
  Matrix gram(rows, rows);
  for (Index j = 0; j < rows; ++j) {
    Vector e = Vector::Zero(rows);
    e(j) = 1.0;
    gram.col(j) = apply(apply_t(e));
  }
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline SpectralNorms spectral_norms(const ProblemData& pd) {
  const Index rows = pd.o + 1;
  SpectralNorms n;
  n.m1 = sigma_max(rows, [&](const Vector& x) { return apply_M1(pd, x); },
                   [&](const Vector& y) { return apply_M1_transpose(pd, y); });
  n.m2 = sigma_max(rows, [&](const Vector& x) { return apply_M2(pd, x); },
                   [&](const Vector& y) { return apply_M2_transpose(pd, y); });
  n.m3 = sigma_max(rows, [&](const Vector& x) { return apply_M3(pd, x); },
                   [&](const Vector& y) { return apply_M3_transpose(pd, y); });
  n.m4 = sigma_max(rows, [&](const Vector& x) { return apply_M4(pd, x); },
                   [&](const Vector& y) { return apply_M4_transpose(pd, y); });
  return n;
}

/// Closed-form upper bound on ||M1||_2 from kappa = max z.
inline double m1_norm_bound(const ProblemData& pd) {
  const auto o = static_cast<double>(pd.o);
  return 0.5 * pd.kappa * o + std::sqrt(2.0 * (o - 1.0));
}

/// Builds z, the diagonal selector b and the spectral norms from X_O.
inline ProblemData build_problem(const SignalMatrix& x_obs) {
  const Index o = x_obs.nodes();
  if (o < 2) throw InvalidInput("need at least two observed nodes");
  if (x_obs.samples() < 1) throw InvalidInput("need at least one signal sample");
  const Matrix& X = x_obs.data();
  if (!X.allFinite()) throw InvalidInput("signals must be finite");

  ProblemData pd;
  pd.o = o;
  pd.p = pair_count(o);
  pd.samples = x_obs.samples();
  pd.c_obs = X * X.transpose();
  pd.z.resize(pd.p);
  Index l = 0;
  for (Index i = 0; i < o; ++i)
    for (Index j = i + 1; j < o; ++j) pd.z(l++) = (X.row(i) - X.row(j)).squaredNorm();
  pd.b_indices.reserve(static_cast<std::size_t>(o));
  for (Index i = 0; i < o; ++i) pd.b_indices.push_back(i * o + i);
  pd.kappa = pd.p > 0 ? pd.z.maxCoeff() : 0.0;
  pd.norms = spectral_norms(pd);
  return pd;
}

// Dense forms, used by tests and diagnostics only.

inline Matrix dense_M1(const ProblemData& pd) {
  Matrix M(pd.o + 1, pd.p);
  M.row(0) = 0.5 * pd.z.transpose();
  M.bottomRows(pd.o) = dense_B(pd.o);
  return M;
}

inline Matrix dense_M2(const ProblemData& pd) {
  Matrix M = Matrix::Zero(pd.o + 1, pd.o);
  M.bottomRows(pd.o) = -Matrix::Identity(pd.o, pd.o);
  return M;
}

inline Matrix dense_M3(const ProblemData& pd) {
  Matrix M = Matrix::Zero(pd.o + 1, pd.k_size());
  for (Index idx : pd.b_indices) M(0, idx) = 2.0;
  return M;
}

inline Matrix dense_M4(const ProblemData& pd) {
  Matrix M = Matrix::Zero(pd.o + 1, 2);
  M(0, 0) = pd.a[0];
  M(0, 1) = pd.a[1];
  return M;
}

inline Matrix dense_A(const ProblemData& pd) {
  Matrix A(pd.o + 1, pd.p + pd.o + pd.k_size() + 2);
  A << dense_M1(pd), dense_M2(pd), dense_M3(pd), dense_M4(pd);
  return A;
}

inline Vector stack_primal(const IterateState& y) {
  Vector x(y.w.size() + y.u.size() + y.k.size() + y.v.size());
  x << y.w, y.u, y.k, y.v;
  return x;
}

}  // namespace glopss
