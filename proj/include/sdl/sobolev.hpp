#pragma once
//! \file
//! \brief The relaxation-side and plan-side Sobolev energies on a metric
//! graph, and the harness that checks they coincide.
//!
//! Weak upper gradients are edge densities only. Barycenters of plans never
//! charge the atoms (curves spend zero time at a point), so a vertex
//! component of G never enters a constraint <f, dpi> <= <G, Bar(pi)> and the
//! minimal one vanishes there.
//!
//! The single-edge plans (each edge traversed once, both orientations)
//! generate all constraints: along a path P the constraint is implied by the
//! sum of the single-edge constraints of its edges, and a plan is a positive
//! combination of paths. Hence the minimal weak upper gradient is |df|.
//! Single-edge plans whose endpoints carry no atom are limits of plans with
//! endpoints spread along the edge, which is why they are admitted here even
//! though they are not themselves in B_q.

#include "sdl/beckmann.hpp"
#include "sdl/calculus.hpp"
#include "sdl/space.hpp"
#include "sdl/superposition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdl {

struct WeakGradientOptions {
  bool include_single_edge = true;
  std::vector<Plan<double>> plans;  ///< extra constraint plans; must lie in B_q
  double tol = 1e-13;
  int max_sweeps = 100000;
};

struct WeakGradient {
  DensityField<double> gradient;  ///< edge part G, vertex part 0
  double value = 0.0;             ///< (1/p) sum_e m_e G_e^p
  int sweeps = 0;                 ///< coordinate-ascent sweeps (0: closed form)
};

namespace detail {

struct PlanConstraint {
  std::vector<std::pair<std::size_t, double>> bar;  ///< (edge, Bar_e)
  double rhs;                                       ///< <f, boundary(pi)>
};

}  // namespace detail

/// Minimal G >= 0 (edge density) with <f, dpi> <= <G, Bar(pi)> over the plan
/// family. With only the single-edge family the answer is G = |df|. Extra
/// plans are handled by cyclic coordinate ascent on the concave dual
///   max_{lambda >= 0} sum_j lambda_j b_j - (1/q) sum_e m_e s_e^q,
///   s_e = sum_j lambda_j Bar_{j,e},  G_e = s_e^{q-1}.
inline WeakGradient min_weak_upper_gradient(const Instance<double>& inst, const ScalarField<double>& f, double p,
                                            const WeakGradientOptions& opts = {}) {
  require_energy_exponent(p);
  const double q = conjugate_exponent(p);
  const std::size_t m = inst.num_edges();
  WeakGradient out;
  out.gradient.vertex.assign(inst.num_vertices(), 0.0);

  if (opts.plans.empty()) {
    out.gradient.edge.assign(m, 0.0);
    if (opts.include_single_edge) {
      const auto df = differential(inst, f);
      for (std::size_t e = 0; e < m; ++e) out.gradient.edge[e] = std::abs(df[e]);
    } else if (f.size() != inst.num_vertices()) {
      throw std::invalid_argument("field dimension mismatch");
    }
    out.value = edge_power_sum(inst, out.gradient.edge, p) / p;
    return out;
  }

  std::vector<detail::PlanConstraint> cons;
  if (opts.include_single_edge) {
    for (std::size_t e = 0; e < m; ++e) {
      const auto& ed = inst.edge(e);
      const double jump = f.at(ed.head) - f.at(ed.tail);
      cons.push_back({{{e, 1.0 / ed.density}}, jump});
      cons.push_back({{{e, 1.0 / ed.density}}, -jump});
    }
  }
  for (std::size_t j = 0; j < opts.plans.size(); ++j) {
    const auto st = plan_stats(inst, opts.plans[j]);
    if (!st.in_Bq)
      throw std::invalid_argument("plan " + std::to_string(j) + " is not in B_q: endpoint vertex " +
                                  std::to_string(st.zero_atom_endpoints.front()) + " carries no atom");
    detail::PlanConstraint c{{}, measure_pairing<double>(f, st.boundary)};
    for (std::size_t e = 0; e < m; ++e)
      if (st.barycenter.edge[e] > 0.0) c.bar.emplace_back(e, st.barycenter.edge[e]);
    cons.push_back(std::move(c));
  }

  std::vector<double> lambda(cons.size(), 0.0), s(m, 0.0);
  double scale = 0.0;
  for (const auto& c : cons) scale = std::max(scale, std::abs(c.rhs));
  if (scale == 0.0) scale = 1.0;

  auto gradient_at = [&](std::size_t e, double se) { return se > 0.0 ? std::pow(se, q - 1.0) : 0.0; };
  // b_j - <G, Bar_j>_mu with lambda_j replaced by x.
  auto slack = [&](const detail::PlanConstraint& c, double old, double x) {
    double acc = c.rhs;
    for (const auto& [e, bar] : c.bar) {
      const double se = std::max(0.0, s[e] + (x - old) * bar);
      acc -= inst.edge_mass(e) * bar * gradient_at(e, se);
    }
    return acc;
  };

  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < cons.size(); ++j) {
      const auto& c = cons[j];
      const double old = lambda[j];
      double next = 0.0;
      if (slack(c, old, 0.0) > 0.0) {
        double lo = 0.0, hi = std::max(1.0, 2.0 * old);
        while (slack(c, old, hi) > 0.0) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          (slack(c, old, mid) > 0.0 ? lo : hi) = mid;
        }
        next = hi;
      }
      for (const auto& [e, bar] : c.bar) s[e] = std::max(0.0, s[e] + (next - old) * bar);
      lambda[j] = next;
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < cons.size(); ++j) {
      const double r = slack(cons[j], lambda[j], lambda[j]);
      worst = std::max(worst, lambda[j] > 0.0 ? std::abs(r) : std::max(r, 0.0));
    }
    if (worst <= opts.tol * scale) {
      ++sweep;
      break;
    }
  }
  out.gradient.edge.resize(m);
  for (std::size_t e = 0; e < m; ++e) out.gradient.edge[e] = gradient_at(e, s[e]);
  out.value = edge_power_sum(inst, out.gradient.edge, p) / p;
  out.sweeps = sweep;
  return out;
}

// ---------------------------------------------------------------------------
// Relaxation by flattening

struct RelaxationLevel {
  std::size_t k = 1;
  double value = 0.0;   ///< lip energy of the level-k competitor
  double factor = 1.0;  ///< (k/(k-2))^{p-1} for flattened levels
  bool flattened = false;
  double density_limit_error = 0.0;  ///< max_e | slope_e / (k/(k-2)) - |df_e| |
};

struct Relaxation {
  std::vector<RelaxationLevel> levels;
  double E_H_level = 0.0;  ///< value at the largest level
  double E_H = 0.0;        ///< that value with the flattening factor removed
};

/// (k/(k-2))^{p-1}: level-k flattened energy over the cylinder energy.
inline double flattening_factor(std::size_t k, double p) {
  if (k < 3) throw std::invalid_argument("flattening needs k >= 3");
  return std::pow(double(k) / double(k - 2), p - 1.0);
}

/// Level-k competitor on subdivide(inst, k): equals f at original vertices,
/// is constant on the first and last piece of every edge and affine in
/// between. Its slopes vanish next to every atom.
inline ScalarField<double> flattened_competitor(const Instance<double>& inst, const Subdivision<double>& sub,
                                                const ScalarField<double>& f) {
  const std::size_t k = sub.parts;
  if (k < 3) throw std::invalid_argument("flattening needs k >= 3");
  ScalarField<double> g(sub.refined.num_vertices(), 0.0);
  for (std::size_t v = 0; v < inst.num_vertices(); ++v) g[v] = f[v];
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    const auto& chain = sub.chain[e];
    const double ft = f[inst.edge(e).tail], fh = f[inst.edge(e).head];
    for (std::size_t j = 1; j < k; ++j) g[chain[j]] = ft + double(j - 1) / double(k - 2) * (fh - ft);
  }
  return g;
}

/// Level 1 is the instance itself, level 2 the plain interpolant, levels
/// k >= 3 the flattened competitor.
inline Relaxation relaxed_slope_via_subdivision(const Instance<double>& inst, const ScalarField<double>& f, double p,
                                                const std::vector<std::size_t>& levels) {
  require_energy_exponent(p);
  if (f.size() != inst.num_vertices()) throw std::invalid_argument("field dimension mismatch");
  if (levels.empty()) throw std::invalid_argument("no subdivision levels given");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == 0) throw std::invalid_argument("subdivision level must be >= 1");
    if (i > 0 && levels[i] <= levels[i - 1]) throw std::invalid_argument("subdivision levels must increase");
  }
  const auto df = differential(inst, f);
  Relaxation out;
  for (std::size_t k : levels) {
    RelaxationLevel lv;
    lv.k = k;
    if (k == 1) {
      lv.value = lip_energy(inst, f, p);
    } else {
      const auto sub = subdivide(inst, k);
      if (k == 2) {
        lv.value = lip_energy(sub.refined, sub.interpolate(f), p);
      } else {
        const auto g = flattened_competitor(inst, sub, f);
        lv.value = lip_energy(sub.refined, g, p);
        lv.factor = flattening_factor(k, p);
        lv.flattened = true;
        const auto dg = differential(sub.refined, g);
        const double stretch = double(k) / double(k - 2);
        for (std::size_t e = 0; e < inst.num_edges(); ++e) {
          double slope = 0.0;
          for (std::size_t piece : sub.pieces[e]) slope = std::max(slope, std::abs(dg[piece]));
          lv.density_limit_error = std::max(lv.density_limit_error, std::abs(slope / stretch - std::abs(df[e])));
        }
      }
    }
    out.levels.push_back(lv);
  }
  out.E_H_level = out.levels.back().value;
  out.E_H = out.E_H_level / out.levels.back().factor;
  return out;
}

// ---------------------------------------------------------------------------
// Duality chain

struct DualityChain {
  double F = 0.0;
  /// (1) <f, g*> - F*(g*)            (biconjugate at the optimal g)
  /// (2) <f, dpi> - |Bar(pi)|_q^q / q (plan built from the Beckmann optimizer)
  /// (3) <G, Bar(pi)> - |Bar(pi)|_q^q / q
  /// (4) |G|_p^p / p                  (G the minimal weak upper gradient)
  std::array<double, 4> values{};
  BeckmannSolution conjugate;
  DualPlan<double> plan;
  double tolerance = 0.0;         ///< absolute, tol * max(1, F)
  double monotonicity_defect = 0.0;
  double collapse_defect = 0.0;   ///< max(|(1) - F|, |(4) - F|)

  bool monotone() const { return monotonicity_defect <= tolerance; }
  bool collapsed() const { return collapse_defect <= tolerance; }
};

inline double default_report_tolerance(double p) { return p == 2.0 ? 1e-6 : 1e-4; }

inline DualityChain duality_chain(const Instance<double>& inst, const ScalarField<double>& f, double p, double tol = 0.0,
                                  double solver_tol = 0.0) {
  require_energy_exponent(p);
  if (!(tol > 0.0)) tol = default_report_tolerance(p);
  const double q = conjugate_exponent(p);
  DualityChain ch;
  ch.F = cylinder_energy(inst, f, p);
  const auto g_star = adjoint(inst, duality_map(differential(inst, f), p));
  ch.conjugate = solve_beckmann(inst, g_star, q, solver_tol);
  ch.values[0] = lumped_pairing(inst, f, g_star) - ch.conjugate.value;

  ch.plan = plan_from_dual(inst, ch.conjugate.L, q);
  const double bar_term = std::pow(ch.plan.bar_norm, q) / q;
  ch.values[1] = measure_pairing<double>(f, ch.plan.stats.boundary) - bar_term;

  const auto G = min_weak_upper_gradient(inst, f, p);
  double pairing = 0.0;
  for (std::size_t e = 0; e < inst.num_edges(); ++e)
    pairing += inst.edge_mass(e) * G.gradient.edge[e] * ch.plan.stats.barycenter.edge[e];
  ch.values[2] = pairing - bar_term;
  ch.values[3] = G.value;

  ch.tolerance = tol * std::max(1.0, std::abs(ch.F));
  for (int i = 0; i < 3; ++i) ch.monotonicity_defect = std::max(ch.monotonicity_defect, ch.values[i] - ch.values[i + 1]);
  ch.collapse_defect = std::max(std::abs(ch.values[0] - ch.F), std::abs(ch.values[3] - ch.F));
  return ch;
}

// ---------------------------------------------------------------------------
// Equivalence report

struct ReportConfig {
  std::vector<std::size_t> levels{3, 4, 8, 16, 32};
  double rel_tol = 0.0;     ///< nonpositive: 1e-6 for p = 2, else 1e-4
  double solver_tol = 0.0;  ///< nonpositive: Beckmann default
};

struct Verdict {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
};

struct EquivalenceReport {
  double p = 2.0;
  double q = 2.0;
  double rel_tol = 0.0;
  double F = 0.0;
  double E_lip = 0.0;
  Relaxation relaxation;
  double E_W = 0.0;
  DualityChain chain;
  std::vector<double> weak_gradient;    ///< |Df|_{p,w} on edges
  std::vector<double> cylinder_slope;   ///< |df| on edges
  std::vector<Verdict> verdicts;

  bool passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& v : verdicts)
      if (!v.passed) out.push_back(v.name);
    return out;
  }
};

inline EquivalenceReport equivalence_report(const Instance<double>& inst, const ScalarField<double>& f, double p,
                                            const ReportConfig& cfg = {}) {
  require_energy_exponent(p);
  require_valid(inst);
  if (f.size() != inst.num_vertices()) throw std::invalid_argument("field dimension mismatch");
  EquivalenceReport r;
  r.p = p;
  r.q = conjugate_exponent(p);
  r.rel_tol = cfg.rel_tol > 0.0 ? cfg.rel_tol : default_report_tolerance(p);
  r.F = cylinder_energy(inst, f, p);
  r.E_lip = lip_energy(inst, f, p);
  r.relaxation = relaxed_slope_via_subdivision(inst, f, p, cfg.levels);
  const auto G = min_weak_upper_gradient(inst, f, p);
  r.E_W = G.value;
  r.weak_gradient = G.gradient.edge;
  const auto df = differential(inst, f);
  r.cylinder_slope.resize(df.size());
  for (std::size_t e = 0; e < df.size(); ++e) r.cylinder_slope[e] = std::abs(df[e]);
  r.chain = duality_chain(inst, f, p, r.rel_tol, cfg.solver_tol);

  const double scale = std::max(1.0, std::abs(r.F));
  const double tol = r.rel_tol * scale;
  auto add = [&](std::string name, double measured, double threshold) {
    r.verdicts.push_back({std::move(name), measured <= threshold, measured, threshold});
  };

  add("chain_monotone", std::max(0.0, r.chain.monotonicity_defect), r.chain.tolerance);
  add("chain_collapse", r.chain.collapse_defect, r.chain.tolerance);
  add("weak_energy_matches_F", std::abs(r.E_W - r.F), tol);

  double increase = 0.0, closed_form = 0.0, density = 0.0;
  const RelaxationLevel* prev = nullptr;
  for (const auto& lv : r.relaxation.levels) {
    if (!lv.flattened) continue;
    if (prev) increase = std::max(increase, lv.value - prev->value);
    const double expected = lv.factor * r.F;
    closed_form = std::max(closed_form, std::abs(lv.value - expected) / std::max(1.0, expected));
    density = std::max(density, lv.density_limit_error);
    prev = &lv;
  }
  add("relaxation_decreasing", std::max(0.0, increase), 1e-12 * scale);
  add("relaxation_closed_form", closed_form, 1e-12);
  add("relaxation_limit_matches_F", std::abs(r.relaxation.E_H - r.F), tol);
  add("equivalence", std::abs(r.relaxation.E_H - r.E_W), r.rel_tol * std::max(1.0, r.E_W));
  add("lip_dominates", std::max(0.0, r.F - r.E_lip), 1e-12 * scale);

  double sandwich = density;
  for (std::size_t e = 0; e < df.size(); ++e)
    sandwich = std::max(sandwich, std::abs(r.weak_gradient[e] - r.cylinder_slope[e]));
  add("edgewise_sandwich", sandwich, 1e-9);
  return r;
}

}  // namespace sdl
