#pragma once

// Graph and signal data model: weighted undirected graphs, observed/hidden
// node partitions and the upper-triangular edge-vector convention shared by
// every solver.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace glopss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Symmetric, non-negative, zero-diagonal edge-weight matrix.
class Graph {
 public:
  Graph() = default;

  explicit Graph(Index nodes) : weights_(Matrix::Zero(nodes, nodes)) {
    if (nodes <= 0) throw InvalidInput("graph needs at least one node");
  }

  explicit Graph(Matrix weights, double tol = 1e-12) : weights_(std::move(weights)) {
    if (weights_.rows() != weights_.cols() || weights_.rows() == 0)
      throw InvalidInput("weight matrix must be square and non-empty");
    for (Index i = 0; i < weights_.rows(); ++i) {
      if (std::abs(weights_(i, i)) > tol) throw InvalidInput("weight matrix must have zero diagonal");
      weights_(i, i) = 0.0;
      for (Index j = i + 1; j < weights_.cols(); ++j) {
        const double a = weights_(i, j), b = weights_(j, i);
        if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("non-finite edge weight");
        if (std::abs(a - b) > tol) throw InvalidInput("weight matrix must be symmetric");
        if (a < -tol) throw InvalidInput("edge weights must be non-negative");
        const double w = std::max(0.0, 0.5 * (a + b));
        weights_(i, j) = weights_(j, i) = w;
      }
    }
  }

  Index nodes() const { return weights_.rows(); }
  const Matrix& weights() const { return weights_; }
  double weight(Index i, Index j) const { return weights_(i, j); }

  void set_edge(Index i, Index j, double w) {
    if (i == j) throw InvalidInput("self-loops are not supported");
    if (i < 0 || j < 0 || i >= nodes() || j >= nodes()) throw InvalidInput("edge index out of range");
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("edge weights must be finite and non-negative");
    weights_(i, j) = weights_(j, i) = w;
  }

  std::size_t edge_count() const {
    std::size_t count = 0;
    for (Index j = 0; j < nodes(); ++j)
      for (Index i = 0; i < j; ++i)
        if (weights_(i, j) > 0.0) ++count;
    return count;
  }

  /// True when every node can reach every other node through positive edges.
  bool connected() const {
    const Index m = nodes();
    if (m == 0) return true;
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index reached = 1;
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (Index j = 0; j < m; ++j) {
        if (!seen[static_cast<std::size_t>(j)] && weights_(i, j) > 0.0) {
          seen[static_cast<std::size_t>(j)] = 1;
          ++reached;
          stack.push_back(j);
        }
      }
    }
    return reached == m;
  }

 private:
  Matrix weights_;
};

/// Combinatorial Laplacian Diag(W 1) - W of a symmetric weight matrix.
inline Matrix laplacian(const Matrix& weights) {
  Matrix lap = -weights;
  lap.diagonal() = weights.rowwise().sum();
  return lap;
}

inline Matrix laplacian(const Graph& g) { return laplacian(g.weights()); }

/// Partition of [0, m) into observed and hidden node lists, both ascending.
class ObservationMask {
 public:
  ObservationMask() = default;

  ObservationMask(Index nodes, std::vector<Index> hidden) : nodes_(nodes), hidden_(std::move(hidden)) {
    std::sort(hidden_.begin(), hidden_.end());
    if (std::adjacent_find(hidden_.begin(), hidden_.end()) != hidden_.end())
      throw InvalidInput("duplicate hidden node index");
    std::vector<char> is_hidden(static_cast<std::size_t>(nodes_), 0);
    for (Index h : hidden_) {
      if (h < 0 || h >= nodes_) throw InvalidInput("hidden node index out of range");
      is_hidden[static_cast<std::size_t>(h)] = 1;
    }
    for (Index i = 0; i < nodes_; ++i)
      if (!is_hidden[static_cast<std::size_t>(i)]) observed_.push_back(i);
    if (observed_.size() < 2) throw InvalidInput("at least two observed nodes are required");
  }

  static ObservationMask all_observed(Index nodes) { return ObservationMask(nodes, {}); }

  Index nodes() const { return nodes_; }
  Index observed_count() const { return static_cast<Index>(observed_.size()); }
  Index hidden_count() const { return static_cast<Index>(hidden_.size()); }
  const std::vector<Index>& observed() const { return observed_; }
  const std::vector<Index>& hidden() const { return hidden_; }

  /// Observability coefficient o / m.
  double observability() const { return static_cast<double>(observed_count()) / static_cast<double>(nodes_); }

 private:
  Index nodes_ = 0;
  std::vector<Index> observed_;
  std::vector<Index> hidden_;
};

/// Node-by-sample signal matrix with finite entries.
class SignalMatrix {
 public:
  SignalMatrix() = default;
  explicit SignalMatrix(Matrix data) : data_(std::move(data)) {
    if (!data_.allFinite()) throw InvalidInput("signals must be finite");
  }

  Index nodes() const { return data_.rows(); }
  Index samples() const { return data_.cols(); }
  const Matrix& data() const { return data_; }

  SignalMatrix rows(const std::vector<Index>& idx) const {
    Matrix out(static_cast<Index>(idx.size()), data_.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = data_.row(idx[r]);
    return SignalMatrix(std::move(out));
  }

 private:
  Matrix data_;
};

struct BlockPartition {
  Matrix observed;         // o x o
  Matrix observed_hidden;  // o x h
  Matrix hidden;           // h x h
};

inline Matrix select(const Matrix& src, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = src(rows[i], cols[j]);
  return out;
}

/// Splits a square node-indexed matrix into its observed/hidden blocks.
inline BlockPartition partition(const Matrix& full, const ObservationMask& mask) {
  if (full.rows() != mask.nodes() || full.cols() != mask.nodes())
    throw InvalidInput("mask does not match matrix dimension");
  return {select(full, mask.observed(), mask.observed()), select(full, mask.observed(), mask.hidden()),
          select(full, mask.hidden(), mask.hidden())};
}

inline BlockPartition partition(const Graph& g, const ObservationMask& mask) { return partition(g.weights(), mask); }

// Upper-triangle convention: l enumerates pairs (i, j), i < j, in
// lexicographic order, so (0,1), (0,2), ..., (0,o-1), (1,2), ...

inline Index pair_count(Index o) { return o * (o - 1) / 2; }

inline Index pair_index(Index i, Index j, Index o) { return i * o - i * (i + 1) / 2 + (j - i - 1); }

/// Stacks the strictly-upper entries of a symmetric zero-diagonal matrix.
inline Vector vec_upper(const Matrix& sym, double tol = 1e-12) {
  const Index o = sym.rows();
  if (sym.cols() != o) throw InvalidInput("vec_upper needs a square matrix");
  Vector out(pair_count(o));
  Index l = 0;
  for (Index i = 0; i < o; ++i) {
    if (std::abs(sym(i, i)) > tol) throw InvalidInput("vec_upper needs a zero diagonal");
    for (Index j = i + 1; j < o; ++j) {
      if (std::abs(sym(i, j) - sym(j, i)) > tol) throw InvalidInput("vec_upper needs a symmetric matrix");
      out(l++) = sym(i, j);
    }
  }
  return out;
}

/// Node count o with o(o-1)/2 == p; throws when p is not triangular.
inline Index nodes_from_pairs(Index p) {
  const auto o = static_cast<Index>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(p))) / 2.0));
  if (pair_count(o) != p) throw InvalidInput("edge vector length is not o(o-1)/2");
  return o;
}

inline Matrix unvec_upper(const Vector& w, Index o) {
  if (w.size() != pair_count(o)) throw InvalidInput("edge vector length does not match node count");
  Matrix out = Matrix::Zero(o, o);
  Index l = 0;
  for (Index i = 0; i < o; ++i)
    for (Index j = i + 1; j < o; ++j) out(i, j) = out(j, i) = w(l++);
  return out;
}

inline Matrix unvec_upper(const Vector& w) { return unvec_upper(w, nodes_from_pairs(w.size())); }

/// B w: node degrees of the graph whose edge vector is w. O(p), matrix-free.
inline Vector apply_B(const Vector& w, Index o) {
  if (w.size() != pair_count(o)) throw InvalidInput("apply_B: dimension mismatch");
  Vector deg = Vector::Zero(o);
  Index l = 0;
  for (Index i = 0; i < o; ++i) {
    for (Index j = i + 1; j < o; ++j, ++l) {
      deg(i) += w(l);
      deg(j) += w(l);
    }
  }
  return deg;
}

/// B^T y: entry (i, j) of the result is y_i + y_j.
inline Vector apply_B_transpose(const Vector& y, Index o) {
  if (y.size() != o) throw InvalidInput("apply_B_transpose: dimension mismatch");
  Vector out(pair_count(o));
  Index l = 0;
  for (Index i = 0; i < o; ++i)
    for (Index j = i + 1; j < o; ++j) out(l++) = y(i) + y(j);
  return out;
}

/// Dense o x p incidence-sum matrix, for tests and spectral computations.
inline Matrix dense_B(Index o) {
  Matrix B = Matrix::Zero(o, pair_count(o));
  Index l = 0;
  for (Index i = 0; i < o; ++i)
    for (Index j = i + 1; j < o; ++j, ++l) B(i, l) = B(j, l) = 1.0;
  return B;
}

}  // namespace glopss
