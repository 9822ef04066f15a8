#pragma once

// Independent reference spectra and graph generators for the test suites.
// Nothing here calls the library's root finders; the oracles are closed
// forms or a different formulation of the eigenvalue problem.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgraph/graph.hpp"
#include "qgraph/spectrum.hpp"

namespace qgraph::testing {

inline constexpr double pi = std::numbers::pi;

inline std::string fixture(const std::string& name) { return std::string(QGRAPH_FIXTURES_DIR) + "/" + name + ".json"; }
inline MetricGraph load_fixture(const std::string& name) { return read_graph_file(fixture(name)); }

struct Root {
  double k;
  int multiplicity;
};

// Adds `m` at k, merging with an existing entry closer than 1e-9.
inline void add_root(std::vector<Root>& roots, double k, int m) {
  if (m <= 0) return;
  for (auto& r : roots) {
    if (std::abs(r.k - k) < 1e-9) {
      r.multiplicity += m;
      return;
    }
  }
  roots.push_back({k, m});
}

inline std::vector<Root> sorted(std::vector<Root> roots) {
  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.k < b.k; });
  return roots;
}

// Interval of length L with Neumann ends: k = n pi / L, all simple.
inline std::vector<Root> interval_roots(double L, double k_max) {
  std::vector<Root> out;
  for (int n = 1; n * pi / L <= k_max; ++n) out.push_back({n * pi / L, 1});
  return out;
}

// Circle of circumference L: k = 2 n pi / L, all double.
inline std::vector<Root> circle_roots(double L, double k_max) {
  std::vector<Root> out;
  for (int n = 1; 2 * n * pi / L <= k_max; ++n) out.push_back({2 * n * pi / L, 2});
  return out;
}

// Star with q equal edges of length a. Modes vanishing at the centre satisfy
// cos(ka) = 0 with multiplicity q - 1; the symmetric modes satisfy
// sin(ka) = 0 and are simple.
inline std::vector<Root> star_roots(int q, double a, double k_max) {
  std::vector<Root> out;
  for (int n = 1; n * pi / (2 * a) <= k_max; ++n) {
    out.push_back({n * pi / (2 * a), n % 2 == 1 ? q - 1 : 1});
  }
  return out;
}

inline bool is_bipartite(const MetricGraph& g) {
  std::vector<int> side(static_cast<std::size_t>(g.vertex_count()), -1);
  side[0] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : g.edges()) {
      auto& su = side[static_cast<std::size_t>(e.u)];
      auto& sv = side[static_cast<std::size_t>(e.v)];
      if (su >= 0 && sv >= 0 && su == sv) return false;
      if (su >= 0 && sv < 0) sv = 1 - su, changed = true;
      if (sv >= 0 && su < 0) su = 1 - sv, changed = true;
    }
  }
  return true;
}

// Equilateral connected graph with edge length l. Away from sin(kl) = 0 the
// eigenvalues are the k with cos(kl) an eigenvalue of D^{-1} A. At kl = 2m pi
// the multiplicity is N - M + 2; at kl = (2m+1) pi it is N - M + 2 for
// bipartite graphs and N - M otherwise.
inline std::vector<Root> equilateral_roots(const MetricGraph& g, double l, double k_max) {
  const int M = g.vertex_count(), N = g.edge_count();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(M);
  for (const auto& e : g.edges()) {
    A(e.u, e.v) += 1;
    A(e.v, e.u) += 1;
    d(e.u) += 1;
    d(e.v) += 1;
  }
  // D^{-1/2} A D^{-1/2} is symmetric with the same spectrum as D^{-1} A.
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd B = s.asDiagonal() * A * s.asDiagonal();
  const Eigen::VectorXd mu = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(B).eigenvalues();

  std::vector<Root> out;
  const bool bip = is_bipartite(g);
  for (int m = 0;; ++m) {
    const double base = 2 * m * pi;
    if (base / l > k_max) break;
    for (int j = 0; j < M; ++j) {
      if (std::abs(mu(j)) > 1 - 1e-9) continue;
      const double t = std::acos(mu(j));
      if ((base + t) / l <= k_max) add_root(out, (base + t) / l, 1);
      if ((base + 2 * pi - t) / l <= k_max) add_root(out, (base + 2 * pi - t) / l, 1);
    }
    if ((base + pi) / l <= k_max) add_root(out, (base + pi) / l, bip ? N - M + 2 : N - M);
    if (m > 0) add_root(out, base / l, N - M + 2);
  }
  return sorted(out);
}

// Vertex formulation: at k with sin(k l_e) != 0 on every edge, f is an
// eigenfunction iff its vertex values solve M(k) f = 0 where
//   M_vv = -sum_{e at v} cot(k l_e),  M_vw = sum_{e = vw} 1 / sin(k l_e).
inline Eigen::MatrixXd vertex_matrix(const MetricGraph& g, double k) {
  const int M = g.vertex_count();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M, M);
  for (const auto& e : g.edges()) {
    const double kl = k * e.length.value();
    const double c = std::cos(kl) / std::sin(kl), csc = 1 / std::sin(kl);
    out(e.u, e.u) -= c;
    out(e.v, e.v) -= c;
    out(e.u, e.v) += csc;
    out(e.v, e.u) += csc;
  }
  return out;
}

// Nullity of the vertex matrix at k, relative to its largest eigenvalue.
inline int vertex_nullity(const MetricGraph& g, double k, double rel_tol = 1e-6) {
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(vertex_matrix(g, k)).eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return static_cast<int>((ev.cwiseAbs().array() < rel_tol * scale).count());
}

inline bool away_from_poles(const MetricGraph& g, double k, double margin = 1e-3) {
  for (const auto& e : g.edges()) {
    if (std::abs(std::sin(k * e.length.value())) < margin) return false;
  }
  return true;
}

// Roots of the four-edge example with every length 1/4, per period 8 pi:
// 8 pi n (double), +-(8/3) pi + 8 pi n, and the four -4i log(w) + 8 pi n
// values with |w| = 1, taken mod 8 pi.
inline std::vector<Root> four_edge_example_period() {
  using C = std::complex<double>;
  const double r33 = std::sqrt(33.0);
  const C iu(0, 1);  // `I` is a macro once lapacke.h pulls in complex.h
  const std::vector<C> w = {
      (-3 - r33 - iu * std::sqrt(102 - 6 * r33)) / 12.0,
      (-3 - r33 + iu * std::sqrt(102 - 6 * r33)) / 12.0,
      (-3 + r33 - iu * std::sqrt(6 * (17 + r33))) / 12.0,
      (-3 + r33 + iu * std::sqrt(6 * (17 + r33))) / 12.0,
  };
  const double P = 8 * pi;
  auto wrap = [&](double k) { return std::fmod(std::fmod(k, P) + P, P); };
  std::vector<Root> out;
  out.push_back({wrap(-8 * pi / 3), 1});
  out.push_back({wrap(8 * pi / 3), 1});
  for (const C& z : w) {
    const C k = -4.0 * iu * std::log(z);
    out.push_back({wrap(k.real()), 1});
  }
  out.push_back({P, 2});
  return sorted(out);
}

// Flattens a spectrum to (k, m) pairs on (0, k_max].
inline std::vector<Root> positive_roots(const Spectrum& s, double k_max) {
  std::vector<Root> out;
  for (const auto& r : s.roots) {
    if (r.k > 0 && r.k <= k_max) out.push_back({r.k, r.multiplicity});
  }
  return out;
}

// Largest position error between matched root lists, or +inf if the
// multiplicities or counts differ.
inline double root_mismatch(const std::vector<Root>& a, const std::vector<Root>& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].multiplicity != b[i].multiplicity) return INFINITY;
    worst = std::max(worst, std::abs(a[i].k - b[i].k));
  }
  return worst;
}

// Drops roots within `edge` of the window end, where one method may see a
// root the other places just outside.
inline std::vector<Root> trim(std::vector<Root> roots, double k_max, double edge = 1e-6) {
  std::erase_if(roots, [&](const Root& r) { return r.k > k_max - edge; });
  return roots;
}

// Connected multigraph with 2..5 vertices, at most 7 edges, lengths p/q with
// q <= 12, normalized to total length one.
inline MetricGraph random_rational_graph(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> vertices(2, 5), den(1, 12);
  const int M = vertices(rng);
  std::vector<Edge> edges;
  auto length = [&] {
    const int q = den(rng);
    const int p = std::uniform_int_distribution<int>(1, q)(rng);
    return LengthExpr::concrete(static_cast<double>(p) / q);
  };
  for (int v = 1; v < M; ++v) {
    edges.push_back({std::uniform_int_distribution<int>(0, v - 1)(rng), v, length()});
  }
  const int extra = std::uniform_int_distribution<int>(0, 7 - (M - 1))(rng);
  for (int i = 0; i < extra; ++i) {
    int u = std::uniform_int_distribution<int>(0, M - 1)(rng);
    int v = std::uniform_int_distribution<int>(0, M - 2)(rng);
    if (v >= u) ++v;
    edges.push_back({u, v, length()});
  }
  return normalize(MetricGraph(M, std::move(edges)));
}

// Same shape with real-valued lengths in [0.2, 1].
inline MetricGraph random_graph(std::mt19937_64& rng, int max_vertices = 5, int max_edges = 7) {
  std::uniform_int_distribution<int> vertices(2, max_vertices);
  std::uniform_real_distribution<double> len(0.2, 1.0);
  const int M = vertices(rng);
  std::vector<Edge> edges;
  for (int v = 1; v < M; ++v) {
    edges.push_back({std::uniform_int_distribution<int>(0, v - 1)(rng), v, LengthExpr::concrete(len(rng))});
  }
  const int extra = std::uniform_int_distribution<int>(0, std::max(0, max_edges - (M - 1)))(rng);
  for (int i = 0; i < extra; ++i) {
    int u = std::uniform_int_distribution<int>(0, M - 1)(rng);
    int v = std::uniform_int_distribution<int>(0, M - 2)(rng);
    if (v >= u) ++v;
    edges.push_back({u, v, LengthExpr::concrete(len(rng))});
  }
  return normalize(MetricGraph(M, std::move(edges)));
}

// Random vertex relabeling and edge reordering, with random orientation.
inline MetricGraph relabeled(const MetricGraph& g, std::mt19937_64& rng) {
  std::vector<int> perm(static_cast<std::size_t>(g.vertex_count()));
  for (int i = 0; i < g.vertex_count(); ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    Edge f{perm[static_cast<std::size_t>(e.u)], perm[static_cast<std::size_t>(e.v)], e.length};
    if (rng() % 2) std::swap(f.u, f.v);
    edges.push_back(f);
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return MetricGraph(g.vertex_count(), std::move(edges), g.allow_loops());
}

}  // namespace qgraph::testing
