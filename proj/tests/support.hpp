#pragma once
// Shared fixtures, random generators and independent oracles for the tests.
// The oracles here deliberately avoid the library's solver paths.

#include "sdl/sdl.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace sdl::testing {

using Q = Rational;

template <class S>
Instance<S> make_instance(std::vector<std::vector<double>> coords, std::vector<S> atoms,
                          std::vector<EdgeSpec<S>> edges, Norm norm = Norm::lr(2, 2.0)) {
  std::vector<VertexData<S>> vs;
  for (std::size_t i = 0; i < coords.size(); ++i) vs.push_back({coords[i], atoms[i]});
  return Instance<S>(std::move(norm), std::move(vs), edges);
}

/// path(2): unit length, unit density, unit atoms.
template <class S = double>
Instance<S> path2(S atom = S(1)) {
  return make_instance<S>({{0, 0}, {1, 0}}, {atom, atom}, {{0, 1, S(1), S(1)}});
}

/// Directed 3-cycle 0->1->2->0 with unit data.
template <class S = double>
Instance<S> triangle() {
  return make_instance<S>({{0, 0}, {1, 0}, {0, 1}}, {S(1), S(1), S(1)},
                          {{0, 1, S(1), S(1)}, {1, 2, S(1), S(1)}, {2, 0, S(1), S(1)}});
}

/// Diamond s=0, a=1, b=2, t=3 with edges s->a, s->b, a->t, b->t, optionally
/// the reverse edge t->s, all of unit length.
template <class S = double>
Instance<S> diamond(bool with_return = false) {
  std::vector<EdgeSpec<S>> es{{0, 1, S(1), S(1)}, {0, 2, S(1), S(1)}, {1, 3, S(1), S(1)}, {2, 3, S(1), S(1)}};
  if (with_return) es.push_back({3, 0, S(1), S(1)});
  return make_instance<S>({{0, 0}, {1, 1}, {1, -1}, {2, 0}}, {S(1), S(1), S(1), S(1)}, es);
}

/// star(3) with unit lengths/densities and the given atom.
inline Instance<double> star3(double atom = 1.0) {
  GeneratorSpec spec;
  spec.topology = Topology::star;
  spec.k = 3;
  spec.atom = atom;
  spec.length = 1.0;
  return build_instance(spec);
}

/// One of path, grid, star or random-geometric (cycled by `kind`), at most
/// 60 vertices, positive atoms, with sizes and weights drawn from `seed`.
inline Instance<double> mixed_instance(std::uint64_t seed, std::size_t kind) {
  Rng rng(seed);
  GeneratorSpec spec;
  spec.seed = seed;
  spec.atom = uniform(rng, 0.25, 2.0);
  spec.density = uniform(rng, 0.5, 3.0);
  switch (kind % 4) {
    case 0:
      spec.topology = Topology::path;
      spec.n = 2 + uniform_index(rng, 40);
      break;
    case 1:
      spec.topology = Topology::grid;
      spec.n = 2 + uniform_index(rng, 5);
      spec.m = 2 + uniform_index(rng, 6);
      break;
    case 2:
      spec.topology = Topology::star;
      spec.k = 2 + uniform_index(rng, 20);
      break;
    default:
      spec.topology = Topology::random_geometric;
      spec.n = 5 + uniform_index(rng, 35);
      spec.radius = 0.45;
      // Redraw the points until no vertex is isolated.
      for (;; ++spec.seed) {
        try {
          return build_instance(spec);
        } catch (const std::invalid_argument&) {
        }
      }
  }
  return build_instance(spec);
}

inline Q random_rational(Rng& rng, std::int64_t num_lo, std::int64_t num_hi, std::int64_t den_hi) {
  return Q(uniform_int(rng, num_lo, num_hi)) / Q(uniform_int(rng, 1, den_hi));
}

inline Q random_positive_rational(Rng& rng, std::int64_t num_hi = 9, std::int64_t den_hi = 7) {
  return Q(uniform_int(rng, 1, num_hi)) / Q(uniform_int(rng, 1, den_hi));
}

/// Random recursive tree with rational densities, lengths and atoms.
inline Instance<Q> random_rational_tree(Rng& rng, std::size_t n) {
  std::vector<VertexData<Q>> vs;
  std::vector<EdgeSpec<Q>> es;
  for (std::size_t i = 0; i < n; ++i) vs.push_back({{double(i), 0.0}, random_positive_rational(rng)});
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t parent = uniform_index(rng, i);
    // Random orientation so the divergence system is not trivially ordered.
    if (uniform_index(rng, 2) == 0)
      es.push_back({parent, i, random_positive_rational(rng), random_positive_rational(rng)});
    else
      es.push_back({i, parent, random_positive_rational(rng), random_positive_rational(rng)});
  }
  return Instance<Q>(Norm::lr(2, 2.0), std::move(vs), es);
}

/// Random connected graph with cycles: a random tree plus extra chords.
template <class S>
Instance<S> random_cyclic_graph(Rng& rng, std::size_t n, std::size_t extra, bool positive_atoms = true) {
  std::vector<VertexData<S>> vs;
  std::vector<EdgeSpec<S>> es;
  std::vector<std::vector<bool>> used(n, std::vector<bool>(n, false));
  auto value = [&](std::int64_t hi) -> S {
    const Q r = random_positive_rational(rng, hi, 5);
    if constexpr (is_exact_v<S>)
      return r;
    else
      return to_double(r);
  };
  for (std::size_t i = 0; i < n; ++i) vs.push_back({{double(i), 0.0}, positive_atoms ? value(5) : S(0)});
  auto add = [&](std::size_t a, std::size_t b) {
    if (a == b || used[a][b]) return;
    used[a][b] = used[b][a] = true;
    es.push_back({a, b, value(6), value(6)});
  };
  for (std::size_t i = 1; i < n; ++i) add(uniform_index(rng, i), i);
  for (std::size_t t = 0; t < extra; ++t) add(uniform_index(rng, n), uniform_index(rng, n));
  return Instance<S>(Norm::lr(2, 2.0), std::move(vs), es);
}

/// Zero-mean (w.r.t. lumped masses) random divergence, exact.
inline ScalarField<Q> random_balanced_field(Rng& rng, const Instance<Q>& inst) {
  ScalarField<Q> g(inst.num_vertices(), Q(0));
  Q moment(0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    g[v] = random_rational(rng, -9, 9, 5);
    moment += inst.lumped_mass(v) * g[v];
  }
  const Q shift = moment / inst.total_mass();
  for (auto& x : g.values) x -= shift;
  return g;
}

/// Random exact flow with some zero entries. With `acyclic`, every edge
/// carries flow from its lower-index endpoint to its higher one, so the
/// sign-oriented support is a DAG.
inline Current1<Q> random_flow(Rng& rng, const Instance<Q>& inst, bool acyclic) {
  Current1<Q> T(std::vector<Q>(inst.num_edges(), Q(0)));
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    if (uniform_index(rng, 5) == 0) continue;
    const Q x = random_positive_rational(rng, 9, 6);
    if (acyclic)
      T.J[e] = inst.edge(e).tail < inst.edge(e).head ? x : Q(-x);
    else
      T.J[e] = uniform_index(rng, 2) == 0 ? x : Q(-x);
  }
  return T;
}

inline ScalarField<double> to_double_field(const ScalarField<Q>& f) {
  ScalarField<double> out(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = to_double(f[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Oracles

/// Tree flow oracle: the unique L with adjoint(L) = g on a tree, by leaf
/// elimination in exact arithmetic.
inline std::vector<Q> tree_flow_oracle(const Instance<Q>& tree, const ScalarField<Q>& g) {
  const std::size_t n = tree.num_vertices();
  std::vector<Q> excess(n);  // required net inflow mu_v g_v still unassigned
  for (std::size_t v = 0; v < n; ++v) excess[v] = tree.lumped_mass(v) * g[v];
  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : tree.edges()) {
    ++degree[e.tail];
    ++degree[e.head];
  }
  std::vector<bool> done_edge(tree.num_edges(), false);
  std::vector<Q> J(tree.num_edges(), Q(0));
  std::vector<std::size_t> leaves;
  for (std::size_t v = 0; v < n; ++v)
    if (degree[v] == 1) leaves.push_back(v);
  while (!leaves.empty()) {
    const std::size_t v = leaves.back();
    leaves.pop_back();
    if (degree[v] != 1) continue;
    for (std::size_t e = 0; e < tree.num_edges(); ++e) {
      if (done_edge[e]) continue;
      const auto& ed = tree.edge(e);
      if (ed.tail != v && ed.head != v) continue;
      // Net inflow from this edge is +J at the head and -J at the tail; the
      // other endpoint w still needs its excess minus what e delivers.
      J[e] = ed.head == v ? excess[v] : Q(-excess[v]);
      const std::size_t w = ed.head == v ? ed.tail : ed.head;
      excess[w] += ed.head == v ? J[e] : Q(-J[e]);
      excess[v] = 0;
      done_edge[e] = true;
      --degree[v];
      if (--degree[w] == 1) leaves.push_back(w);
      break;
    }
  }
  std::vector<Q> L(tree.num_edges());
  for (std::size_t e = 0; e < L.size(); ++e) L[e] = J[e] * tree.length(e) / tree.edge_mass(e);
  return L;
}

/// q = 2 oracle: u = pinv(D^T M D) (mu g), L = D u, dense.
inline std::vector<double> laplacian_pinv_flow(const Instance<double>& inst, const ScalarField<double>& g) {
  const std::size_t n = inst.num_vertices();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs(n);
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    const auto& ed = inst.edge(e);
    const double c = inst.edge_mass(e) / (ed.length * ed.length);
    H(ed.tail, ed.tail) += c;
    H(ed.head, ed.head) += c;
    H(ed.tail, ed.head) -= c;
    H(ed.head, ed.tail) -= c;
  }
  for (std::size_t v = 0; v < n; ++v) rhs[v] = inst.lumped_mass(v) * g[v];
  const Eigen::VectorXd u = H.completeOrthogonalDecomposition().pseudoInverse() * rhs;
  std::vector<double> L(inst.num_edges());
  for (std::size_t e = 0; e < L.size(); ++e) {
    const auto& ed = inst.edge(e);
    L[e] = (u[ed.head] - u[ed.tail]) / ed.length;
  }
  return L;
}

/// sup <omega, v> over sampled points of the unit sphere of `norm` (2-d:
/// uniform angles; otherwise random directions).
inline double sampled_dual_norm(const Norm& norm, const std::vector<double>& omega, std::size_t samples,
                                std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<double> v(norm.dimension());
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    if (v.size() == 2) {
      const double theta = 2.0 * std::numbers::pi * double(s) / double(samples);
      v = {std::cos(theta), std::sin(theta)};
    } else {
      for (auto& x : v) x = uniform(rng, -1.0, 1.0);
    }
    const double nv = norm(v);
    if (nv == 0.0) continue;
    best = std::max(best, pairing(omega, v) / nv);
  }
  return best;
}

}  // namespace sdl::testing
