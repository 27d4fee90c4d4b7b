#pragma once

// Synthetic graphs (Gaussian kernel, Erdos-Renyi, preferential attachment),
// smooth-signal synthesis from the Laplacian spectrum and hidden-node masks.

#include "glopss/graph.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace glopss {

/// Independent random streams so sweeps can vary one factor at a time.
enum class Stream : std::uint64_t { graph = 1, signals = 2, noise = 3, mask = 4, trial = 5 };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// mt19937_64 with hand-rolled conversions: the standard distributions are
/// implementation-defined, these are bit-identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream) * 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidInput("Rng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Marsaglia's polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double a, b, s;
    do {
      a = 2.0 * uniform() - 1.0;
      b = 2.0 * uniform() - 1.0;
      s = a * a + b * b;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = b * f;
    has_spare_ = true;
    return a * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class GraphKind { gaussian, erdos_renyi, pref_attach };

inline GraphKind parse_graph_kind(std::string_view s) {
  if (s == "gaussian" || s == "ga") return GraphKind::gaussian;
  if (s == "erdos_renyi" || s == "er") return GraphKind::erdos_renyi;
  if (s == "pref_attach" || s == "pa") return GraphKind::pref_attach;
  throw InvalidInput("unknown graph kind: " + std::string(s));
}

inline const char* to_string(GraphKind k) {
  switch (k) {
    case GraphKind::gaussian: return "gaussian";
    case GraphKind::erdos_renyi: return "erdos_renyi";
    case GraphKind::pref_attach: return "pref_attach";
  }
  return "?";
}

struct GenSpec {
  GraphKind kind = GraphKind::gaussian;
  Index nodes = 20;
  double kernel_width = 0.5;      // gaussian
  double weight_threshold = 0.75; // gaussian
  double edge_prob = 0.2;         // erdos_renyi
  Index attach_edges = 1;         // pref_attach, edges per new node
  std::uint64_t seed = 1;

  void validate() const {
    if (nodes < 3) throw InvalidInput("graph generation needs at least 3 nodes");
    if (!(kernel_width > 0.0)) throw InvalidInput("kernel width must be positive");
    if (!(weight_threshold >= 0.0 && weight_threshold <= 1.0)) throw InvalidInput("weight threshold must lie in [0,1]");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw InvalidInput("edge probability must lie in [0,1]");
    if (attach_edges < 1) throw InvalidInput("attachment count must be at least 1");
  }
};

struct SignalSpec {
  Index samples = 100;
  double noise_sigma = 0.5;

  void validate() const {
    if (samples < 1) throw InvalidInput("need at least one sample");
    if (!(noise_sigma >= 0.0)) throw InvalidInput("noise level must be non-negative");
  }
};

namespace detail {

inline Graph gaussian_graph(const GenSpec& spec, Rng& rng) {
  const Index m = spec.nodes;
  Matrix pts(m, 2);
  for (Index i = 0; i < m; ++i) {
    pts(i, 0) = rng.uniform();
    pts(i, 1) = rng.uniform();
  }
  Graph g(m);
  const double denom = 2.0 * spec.kernel_width * spec.kernel_width;
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) {
      const double w = std::exp(-(pts.row(i) - pts.row(j)).squaredNorm() / denom);
      if (w >= spec.weight_threshold) g.set_edge(i, j, w);
    }
  return g;
}

inline Graph erdos_renyi_graph(const GenSpec& spec, Rng& rng) {
  Graph g(spec.nodes);
  for (Index i = 0; i < spec.nodes; ++i)
    for (Index j = i + 1; j < spec.nodes; ++j)
      if (rng.uniform() < spec.edge_prob) g.set_edge(i, j, 1.0);
  return g;
}

// Barabasi-Albert growth from a 3-node clique; each new node draws
// attach_edges distinct targets with probability proportional to degree.
inline Graph pref_attach_graph(const GenSpec& spec, Rng& rng) {
  const Index m = spec.nodes;
  Graph g(m);
  std::vector<double> degree(static_cast<std::size_t>(m), 0.0);
  for (Index i = 0; i < 3; ++i)
    for (Index j = i + 1; j < 3; ++j) {
      g.set_edge(i, j, 1.0);
      degree[static_cast<std::size_t>(i)] += 1.0;
      degree[static_cast<std::size_t>(j)] += 1.0;
    }
  for (Index node = 3; node < m; ++node) {
    const Index want = std::min(spec.attach_edges, node);
    std::vector<Index> targets;
    while (static_cast<Index>(targets.size()) < want) {
      double total = 0.0;
      for (Index t = 0; t < node; ++t)
        if (g.weight(node, t) == 0.0) total += degree[static_cast<std::size_t>(t)];
      double r = rng.uniform() * total;
      Index pick = -1;
      for (Index t = 0; t < node; ++t) {
        if (g.weight(node, t) != 0.0) continue;
        pick = t;
        r -= degree[static_cast<std::size_t>(t)];
        if (r < 0.0) break;
      }
      g.set_edge(node, pick, 1.0);
      targets.push_back(pick);
    }
    for (Index t : targets) {
      degree[static_cast<std::size_t>(t)] += 1.0;
      degree[static_cast<std::size_t>(node)] += 1.0;
    }
  }
  return g;
}

}  // namespace detail

/// Draws a graph; the result may be disconnected (see Graph::connected).
inline Graph generate_graph(const GenSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, Stream::graph);
  switch (spec.kind) {
    case GraphKind::gaussian: return detail::gaussian_graph(spec, rng);
    case GraphKind::erdos_renyi: return detail::erdos_renyi_graph(spec, rng);
    case GraphKind::pref_attach: return detail::pref_attach_graph(spec, rng);
  }
  throw InvalidInput("unknown graph kind");
}

struct GeneratedGraph {
  Graph graph;
  std::uint64_t seed_used = 0;
  int attempts = 1;
};

/// Resamples with derived seeds until the graph is connected.
inline GeneratedGraph generate_connected_graph(GenSpec spec, int max_attempts = 1000) {
  const std::uint64_t base = spec.seed;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    spec.seed = attempt == 0 ? base : splitmix64(base + static_cast<std::uint64_t>(attempt));
    Graph g = generate_graph(spec);
    if (g.connected()) return {std::move(g), spec.seed, attempt + 1};
  }
  throw std::runtime_error("could not draw a connected graph");
}

/// Eigenvalues below this fraction of the largest are treated as zero.
inline constexpr double pseudo_inverse_rel_tol = 1e-8;

/// X = V Z + E with Z ~ N(0, Lambda^+) and E ~ N(0, sigma^2 I).
inline SignalMatrix generate_signals(const Graph& g, const SignalSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Index m = g.nodes();
  Eigen::SelfAdjointEigenSolver<Matrix> es(laplacian(g));
  if (es.info() != Eigen::Success) throw std::runtime_error("Laplacian eigendecomposition failed");
  const Vector& lambda = es.eigenvalues();
  const double cutoff = pseudo_inverse_rel_tol * std::max(0.0, lambda.maxCoeff());
  Vector scale = Vector::Zero(m);
  for (Index i = 0; i < m; ++i)
    if (lambda(i) > cutoff && lambda(i) > 0.0) scale(i) = 1.0 / std::sqrt(lambda(i));

  Rng sig(seed, Stream::signals);
  Matrix Z(m, spec.samples);
  for (Index c = 0; c < spec.samples; ++c)
    for (Index i = 0; i < m; ++i) Z(i, c) = scale(i) * sig.normal();
  Matrix X = es.eigenvectors() * Z;
  if (spec.noise_sigma > 0.0) {
    Rng noise(seed, Stream::noise);
    for (Index c = 0; c < spec.samples; ++c)
      for (Index i = 0; i < m; ++i) X(i, c) += spec.noise_sigma * noise.normal();
  }
  return SignalMatrix(std::move(X));
}

struct HiddenNodeSample {
  ObservationMask mask;
  SignalMatrix x_obs;
  Matrix w_obs_true;
};

/// Hides h nodes chosen uniformly at random.
inline HiddenNodeSample hide_nodes(const Graph& g, const SignalMatrix& x, Index h, std::uint64_t seed) {
  const Index m = g.nodes();
  if (x.nodes() != m) throw InvalidInput("signal rows do not match graph size");
  if (h < 0 || h > m - 2) throw InvalidInput("hidden count must lie in [0, m-2]");
  Rng rng(seed, Stream::mask);
  std::vector<Index> perm(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < h; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  ObservationMask mask(m, std::vector<Index>(perm.begin(), perm.begin() + h));
  return {mask, x.rows(mask.observed()), partition(g, mask).observed};
}

}  // namespace glopss
