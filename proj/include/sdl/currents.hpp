#pragma once
//! \file
//! \brief Discrete normal 1-currents: signed edge flows with boundary, mass,
//! the subcurrent relation and cycle removal.
//!
//! Orientation of the support: edge e points tail -> head when J_e > 0 and
//! head -> tail when J_e < 0. A current is acyclic when this sign-oriented
//! support has no directed cycle. This agrees with "the only cycle
//! subcurrent is zero": a cycle subcurrent C of T satisfies |C_e| <= |T_e|
//! with matching signs, and a nonzero boundaryless such C carries a directed
//! cycle of the support; conversely any directed support cycle, weighted by
//! its minimum |T_e|, is a nonzero cycle subcurrent.

#include "sdl/calculus.hpp"
#include "sdl/space.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdl {

template <class S = double>
struct Current1 {
  std::vector<S> J;

  Current1() = default;
  explicit Current1(std::vector<S> flow) : J(std::move(flow)) {}
  Current1(std::initializer_list<S> init) : J(init) {}
  std::size_t size() const { return J.size(); }
  friend bool operator==(const Current1&, const Current1&) = default;
};

/// J_e = (m_e / l_e) L_e = w_e L_e: the current carried by a dual element.
template <class S>
Current1<S> current_from_dual(const Instance<S>& inst, const EdgeField<S>& L) {
  if (L.size() != inst.num_edges()) throw std::invalid_argument("edge field dimension mismatch");
  Current1<S> T;
  T.J.reserve(L.size());
  for (std::size_t e = 0; e < L.size(); ++e) T.J.push_back(inst.edge_mass(e) / inst.length(e) * L[e]);
  return T;
}

namespace detail {

template <class S>
void check_current(const Instance<S>& inst, const Current1<S>& T) {
  if (T.size() != inst.num_edges())
    throw std::invalid_argument("current has " + std::to_string(T.size()) + " entries, instance has " +
                                std::to_string(inst.num_edges()) + " edges");
}

template <class S>
S max_abs(const std::vector<S>& x) {
  S m{0};
  for (const auto& v : x) m = std::max(m, abs_value(v));
  return m;
}

/// Sign-oriented support digraph: out-edges per vertex in edge index order.
template <class S>
std::vector<std::vector<std::size_t>> oriented_support(const Instance<S>& inst, const std::vector<S>& J,
                                                       const S& scale) {
  std::vector<std::vector<std::size_t>> out(inst.num_vertices());
  for (std::size_t e = 0; e < J.size(); ++e) {
    if (is_negligible(J[e], scale)) continue;
    const auto& ed = inst.edge(e);
    out[J[e] > S{0} ? ed.tail : ed.head].push_back(e);
  }
  return out;
}

template <class S>
std::size_t oriented_target(const Instance<S>& inst, const std::vector<S>& J, std::size_t e) {
  const auto& ed = inst.edge(e);
  return J[e] > S{0} ? ed.head : ed.tail;
}

/// Depth-first search from the lowest-index vertex; returns the edges of the
/// first directed cycle met, in traversal order.
template <class S>
std::optional<std::vector<std::size_t>> find_directed_cycle(const Instance<S>& inst, const std::vector<S>& J,
                                                            const S& scale) {
  const auto adj = oriented_support(inst, J, scale);
  const std::size_t n = inst.num_vertices();
  enum : unsigned char { white, grey, black };
  std::vector<unsigned char> colour(n, white);
  std::vector<std::size_t> next(n, 0);
  std::vector<std::size_t> via(n, 0);  // edge used to enter the vertex
  std::vector<std::size_t> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (colour[root] != white) continue;
    colour[root] = grey;
    stack.push_back(root);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      if (next[v] == adj[v].size()) {
        colour[v] = black;
        stack.pop_back();
        continue;
      }
      const std::size_t e = adj[v][next[v]++];
      const std::size_t w = oriented_target(inst, J, e);
      if (colour[w] == white) {
        colour[w] = grey;
        via[w] = e;
        stack.push_back(w);
      } else if (colour[w] == grey) {
        // The DFS stack is the current path; the cycle runs from w to v, then e.
        const auto pos = std::find(stack.begin(), stack.end(), w);
        std::vector<std::size_t> cycle;
        for (auto it = pos + 1; it != stack.end(); ++it) cycle.push_back(via[*it]);
        cycle.push_back(e);
        return cycle;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Net inflow b_v = sum_e sigma(v, e) J_e (sigma = +1 at the head). Satisfies
/// sum_v f_v b_v = sum_e l_e J_e (df)_e.
template <class S>
std::vector<S> boundary(const Instance<S>& inst, const Current1<S>& T) {
  detail::check_current(inst, T);
  std::vector<S> b(inst.num_vertices(), S{0});
  for (std::size_t e = 0; e < T.size(); ++e) {
    b[inst.edge(e).head] += T.J[e];
    b[inst.edge(e).tail] -= T.J[e];
  }
  return b;
}

/// sum_e l_e |J_e|.
template <class S>
S mass(const Instance<S>& inst, const Current1<S>& T) {
  detail::check_current(inst, T);
  S m{0};
  for (std::size_t e = 0; e < T.size(); ++e) m += inst.length(e) * abs_value(T.J[e]);
  return m;
}

/// Edgewise |S_e| + |T_e - S_e| = |T_e|: exact for rationals, relative
/// 1e-12 for doubles.
template <class S>
bool is_subcurrent(const Current1<S>& sub, const Current1<S>& T) {
  if (sub.size() != T.size()) throw std::invalid_argument("is_subcurrent: currents live on different instances");
  for (std::size_t e = 0; e < T.size(); ++e) {
    const S lhs = abs_value(sub.J[e]) + abs_value(S(T.J[e] - sub.J[e]));
    const S rhs = abs_value(T.J[e]);
    if constexpr (is_exact_v<S>) {
      if (lhs != rhs) return false;
    } else {
      if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, lhs)) return false;
    }
  }
  return true;
}

/// Directed cycle of the sign-oriented support, if any (edge indices in
/// traversal order).
template <class S>
std::optional<std::vector<std::size_t>> find_cycle(const Instance<S>& inst, const Current1<S>& T) {
  detail::check_current(inst, T);
  return detail::find_directed_cycle(inst, T.J, detail::max_abs(T.J));
}

template <class S>
bool is_acyclic(const Instance<S>& inst, const Current1<S>& T) {
  return !find_cycle(inst, T).has_value();
}

template <class S>
struct CycleSplit {
  Current1<S> cycles;   ///< C: boundaryless subcurrent
  Current1<S> acyclic;  ///< A = T - C
  std::size_t cancellations = 0;
};

/// Repeatedly cancels the minimum |J| along the first directed cycle found
/// (lowest-index root, depth first). Each cancellation zeroes an edge.
template <class S>
CycleSplit<S> remove_cycles(const Instance<S>& inst, const Current1<S>& T) {
  detail::check_current(inst, T);
  const S scale = detail::max_abs(T.J);
  CycleSplit<S> out{Current1<S>(std::vector<S>(T.size(), S{0})), T, 0};
  auto& R = out.acyclic.J;
  auto& C = out.cycles.J;
  while (auto cycle = detail::find_directed_cycle(inst, R, scale)) {
    S amount = abs_value(R[cycle->front()]);
    for (std::size_t e : *cycle) amount = std::min(amount, abs_value(R[e]));
    for (std::size_t e : *cycle) {
      const bool forward = R[e] > S{0};
      if (abs_value(R[e]) == amount) {
        C[e] += R[e];
        R[e] = S{0};
      } else if (forward) {
        R[e] -= amount;
        C[e] += amount;
      } else {
        R[e] += amount;
        C[e] -= amount;
      }
    }
    ++out.cancellations;
  }
  return out;
}

}  // namespace sdl
