#pragma once
//! \file
//! \brief Plans with barycenter on metric graphs and the exact superposition
//! of acyclic currents into weighted paths.
//!
//! A plan is a finite family of oriented vertex-to-vertex paths with positive
//! weights. Each path is read as a constant-speed curve on [0, 1], so its
//! speed equals its length and the occupation measure of the plan has edge
//! density Bar_e = (sum_k c_k * count_k(e)) / w_e with respect to mu. No time
//! grid is stored: boundary, barycenter and mass do not depend on the
//! parametrization.

#include "sdl/currents.hpp"
#include "sdl/space.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdl {

template <class S = double>
struct PlanPath {
  std::vector<std::size_t> vertices;
  std::vector<std::size_t> edges;  ///< edges[i] joins vertices[i] and vertices[i+1]
  S weight{1};
};

template <class S = double>
struct Plan {
  std::vector<PlanPath<S>> paths;
  std::size_t size() const { return paths.size(); }
  bool empty() const { return paths.empty(); }
};

/// Finds the edge joining each pair of consecutive vertices.
template <class S>
PlanPath<S> make_path(const Instance<S>& inst, std::vector<std::size_t> vertices, S weight) {
  if (vertices.size() < 2) throw std::invalid_argument("invalid walk: a path needs at least one edge");
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> lookup;
  for (std::size_t e = 0; e < inst.num_edges(); ++e)
    lookup.emplace(std::minmax(inst.edge(e).tail, inst.edge(e).head), e);
  PlanPath<S> path{std::move(vertices), {}, std::move(weight)};
  for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
    const std::size_t a = path.vertices[i], b = path.vertices[i + 1];
    if (a >= inst.num_vertices() || b >= inst.num_vertices())
      throw std::invalid_argument("invalid walk: vertex out of range");
    const auto it = lookup.find(std::minmax(a, b));
    if (it == lookup.end())
      throw std::invalid_argument("invalid walk: no edge between " + std::to_string(a) + " and " + std::to_string(b));
    path.edges.push_back(it->second);
  }
  return path;
}

template <class S>
void validate_plan(const Instance<S>& inst, const Plan<S>& plan) {
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto& P = plan.paths[k];
    const std::string where = "path " + std::to_string(k);
    if (P.edges.empty() || P.vertices.size() != P.edges.size() + 1)
      throw std::invalid_argument("invalid walk: " + where + " is constant or malformed");
    if (!(P.weight > S{0})) throw std::invalid_argument("invalid walk: " + where + " has nonpositive weight");
    for (std::size_t i = 0; i < P.edges.size(); ++i) {
      if (P.edges[i] >= inst.num_edges()) throw std::invalid_argument("invalid walk: " + where + " edge out of range");
      const auto& ed = inst.edge(P.edges[i]);
      const std::size_t a = P.vertices[i], b = P.vertices[i + 1];
      if (!((ed.tail == a && ed.head == b) || (ed.tail == b && ed.head == a)))
        throw std::invalid_argument("invalid walk: " + where + " is not connected at step " + std::to_string(i));
    }
  }
}

template <class S>
S path_length(const Instance<S>& inst, const PlanPath<S>& path) {
  S len{0};
  for (std::size_t e : path.edges) len += inst.length(e);
  return len;
}

// ---------------------------------------------------------------------------

/// Exact superposition of an acyclic current. Repeatedly starts at the
/// lowest-index vertex with negative residual boundary, follows the
/// lowest-index residual out-edge until none is left, and subtracts the
/// smallest residual along the walk. Every extraction zeroes an edge.
template <class S>
Plan<S> decompose_acyclic(const Instance<S>& inst, const Current1<S>& A) {
  if (auto cycle = find_cycle(inst, A)) {
    std::string edges;
    for (std::size_t e : *cycle) edges += (edges.empty() ? "" : ",") + std::to_string(e);
    throw std::invalid_argument("decompose_acyclic: current has a directed cycle through edges [" + edges + "]");
  }
  const S scale = detail::max_abs(A.J);
  std::vector<S> R = A.J;
  Plan<S> plan;
  auto out_edge = [&](std::size_t v) -> std::optional<std::size_t> {
    for (const auto& inc : inst.incident(v)) {
      const S& r = R[inc.edge];
      if (is_negligible(r, scale)) continue;
      // Leaves v along the sign orientation: tail with r > 0 or head with r < 0.
      if ((inc.sign < 0 && r > S{0}) || (inc.sign > 0 && r < S{0})) return inc.edge;
    }
    return std::nullopt;
  };
  for (;;) {
    const auto b = boundary(inst, Current1<S>(R));
    std::optional<std::size_t> start;
    for (std::size_t v = 0; v < b.size() && !start; ++v)
      if (b[v] < S{0} && !is_negligible(b[v], scale) && out_edge(v)) start = v;
    if (!start) break;
    PlanPath<S> path;
    path.vertices.push_back(*start);
    for (auto e = out_edge(*start); e; e = out_edge(path.vertices.back())) {
      path.edges.push_back(*e);
      const auto& ed = inst.edge(*e);
      path.vertices.push_back(ed.tail == path.vertices.back() ? ed.head : ed.tail);
    }
    S weight = abs_value(R[path.edges.front()]);
    for (std::size_t e : path.edges) weight = std::min(weight, abs_value(R[e]));
    for (std::size_t e : path.edges) {
      if (abs_value(R[e]) == weight)
        R[e] = S{0};
      else
        R[e] += R[e] > S{0} ? S(-weight) : weight;
    }
    path.weight = weight;
    plan.paths.push_back(std::move(path));
  }
  return plan;
}

template <class S = double>
struct PlanStats {
  std::vector<S> boundary;        ///< sum_k c_k (delta_end - delta_start)
  std::vector<S> occupation;      ///< sum_k c_k count_k(e)
  DensityField<S> barycenter;     ///< edge part occupation_e / w_e, vertex part 0
  S mass{0};                      ///< sum_k c_k l(P_k)
  std::vector<S> start_density;   ///< (sum of weights starting at v) / a_v
  std::vector<S> end_density;     ///< (sum of weights ending at v) / a_v
  std::vector<std::size_t> zero_atom_endpoints;
  bool in_Bq = true;              ///< false iff some endpoint has a_v = 0
};

template <class S>
PlanStats<S> plan_stats(const Instance<S>& inst, const Plan<S>& plan) {
  validate_plan(inst, plan);
  const std::size_t n = inst.num_vertices(), m = inst.num_edges();
  PlanStats<S> st;
  st.boundary.assign(n, S{0});
  st.occupation.assign(m, S{0});
  std::vector<S> starts(n, S{0}), ends(n, S{0});
  for (const auto& P : plan.paths) {
    st.boundary[P.vertices.back()] += P.weight;
    st.boundary[P.vertices.front()] -= P.weight;
    starts[P.vertices.front()] += P.weight;
    ends[P.vertices.back()] += P.weight;
    for (std::size_t e : P.edges) st.occupation[e] += P.weight;
    st.mass += P.weight * path_length(inst, P);
  }
  st.barycenter.edge.resize(m);
  for (std::size_t e = 0; e < m; ++e) st.barycenter.edge[e] = st.occupation[e] / inst.density(e);
  st.barycenter.vertex.assign(n, S{0});
  st.start_density.assign(n, S{0});
  st.end_density.assign(n, S{0});
  for (std::size_t v = 0; v < n; ++v) {
    if (starts[v] == S{0} && ends[v] == S{0}) continue;
    if (inst.atom(v) > S{0}) {
      st.start_density[v] = starts[v] / inst.atom(v);
      st.end_density[v] = ends[v] / inst.atom(v);
    } else {
      st.zero_atom_endpoints.push_back(v);
      st.in_Bq = false;
    }
  }
  return st;
}

/// (sum_e m_e |x_e|^q)^{1/q} for an exactly or approximately stored field.
template <class S>
double weighted_lq_norm(const Instance<S>& inst, const std::vector<S>& x, double q) {
  double s = 0.0;
  for (std::size_t e = 0; e < x.size(); ++e) s += to_double(inst.edge_mass(e)) * std::pow(std::abs(to_double(x[e])), q);
  return std::pow(s, 1.0 / q);
}

template <class S = double>
struct DualPlan {
  Plan<S> plan;
  CycleSplit<S> split;
  PlanStats<S> stats;
  double bar_norm = 0.0;  ///< |Bar(pi)|_q
  double L_norm = 0.0;    ///< |L|_q
};

/// L -> J = w L -> drop cycles -> superpose. The plan satisfies
/// boundary = mu * adjoint(L) and |Bar|_q <= |L|_q, strictly when a cycle
/// part was removed.
template <class S>
DualPlan<S> plan_from_dual(const Instance<S>& inst, const EdgeField<S>& L, double q) {
  require_energy_exponent(q, "q");
  DualPlan<S> out;
  const auto T = current_from_dual(inst, L);
  out.split = remove_cycles(inst, T);
  out.plan = decompose_acyclic(inst, out.split.acyclic);
  out.stats = plan_stats(inst, out.plan);
  out.bar_norm = weighted_lq_norm(inst, out.stats.barycenter.edge, q);
  out.L_norm = weighted_lq_norm(inst, L.values, q);
  return out;
}

}  // namespace sdl
