#pragma once
//! \file
//! \brief The differential d on vertex fields, its adjoint with respect to
//! the lumped pairing, and the slope-based energies.

#include "sdl/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdl {

/// (df)_e = (f_head - f_tail) / l_e.
template <class S>
EdgeField<S> differential(const Instance<S>& inst, const ScalarField<S>& f) {
  if (f.size() != inst.num_vertices()) throw std::invalid_argument("differential: field dimension mismatch");
  EdgeField<S> df(inst.num_edges(), S{0});
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    const auto& ed = inst.edge(e);
    df[e] = (f[ed.head] - f[ed.tail]) / ed.length;
  }
  return df;
}

/// Adjoint of d: sum_e m_e (df)_e L_e = sum_v mu_v f_v (d*L)_v for every f.
template <class S>
ScalarField<S> adjoint(const Instance<S>& inst, const EdgeField<S>& L) {
  if (L.size() != inst.num_edges()) throw std::invalid_argument("adjoint: edge field dimension mismatch");
  ScalarField<S> g(inst.num_vertices(), S{0});
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    const auto& ed = inst.edge(e);
    const S flux = inst.edge_mass(e) / ed.length * L[e];
    g[ed.head] += flux;
    g[ed.tail] -= flux;
  }
  for (std::size_t v = 0; v < g.size(); ++v) g[v] /= inst.lumped_mass(v);
  return g;
}

/// F(f) = (1/p) sum_e m_e |df_e|^p; no atom contribution.
inline double cylinder_energy(const Instance<double>& inst, const ScalarField<double>& f, double p) {
  require_energy_exponent(p);
  const auto df = differential(inst, f);
  double s = 0.0;
  for (std::size_t e = 0; e < df.size(); ++e) s += inst.edge_mass(e) * std::pow(std::abs(df[e]), p);
  return s / p;
}

/// lip_a of the piecewise-affine representative: |df_e| on edges, the largest
/// incident slope at vertices.
inline DensityField<double> asymptotic_slope(const Instance<double>& inst, const ScalarField<double>& f) {
  const auto df = differential(inst, f);
  DensityField<double> out{std::vector<double>(inst.num_edges()), std::vector<double>(inst.num_vertices(), 0.0)};
  for (std::size_t e = 0; e < df.size(); ++e) {
    const double s = std::abs(df[e]);
    out.edge[e] = s;
    const auto& ed = inst.edge(e);
    out.vertex[ed.tail] = std::max(out.vertex[ed.tail], s);
    out.vertex[ed.head] = std::max(out.vertex[ed.head], s);
  }
  return out;
}

/// (1/p) [sum_e m_e lip_e^p + sum_v a_v lip_v^p].
inline double lip_energy(const Instance<double>& inst, const ScalarField<double>& f, double p) {
  require_energy_exponent(p);
  const auto lip = asymptotic_slope(inst, f);
  double s = 0.0;
  for (std::size_t e = 0; e < lip.edge.size(); ++e) s += inst.edge_mass(e) * std::pow(lip.edge[e], p);
  for (std::size_t v = 0; v < lip.vertex.size(); ++v)
    if (inst.atom(v) > 0.0) s += inst.atom(v) * std::pow(lip.vertex[v], p);
  return s / p;
}

/// phi_p(t) = |t|^{p-2} t applied edgewise.
inline EdgeField<double> duality_map(const EdgeField<double>& x, double p) {
  EdgeField<double> out(x.size(), 0.0);
  for (std::size_t e = 0; e < x.size(); ++e) out[e] = signed_power(x[e], p);
  return out;
}

/// (sum_e m_e |x_e|^r), the r-th power of the weighted edge norm.
inline double edge_power_sum(const Instance<double>& inst, std::span<const double> x, double r) {
  if (x.size() != inst.num_edges()) throw std::invalid_argument("edge field dimension mismatch");
  double s = 0.0;
  for (std::size_t e = 0; e < x.size(); ++e) s += inst.edge_mass(e) * std::pow(std::abs(x[e]), r);
  return s;
}

}  // namespace sdl
