#pragma once
//! \file
//! \brief Fenchel conjugate of the cylinder energy as a minimal-flow problem.
//!
//!   F*(g) = min { (1/q) sum_e m_e |L_e|^q : d*L = g }
//!
//! solved through its concave dual over potentials u,
//!
//!   Phi(u) = sum_v mu_v u_v g_v - (1/p) sum_e m_e |du_e|^p,
//!
//! a weighted p-Laplacian problem. The optimal flow is L = phi_p(du) with
//! phi_p(t) = |t|^{p-2} t. Newton's method with backtracking runs on the
//! smoothed integrand (t^2 + eps^2)^{p/2} / p while eps is driven to zero,
//! followed by a polishing phase on the exact integrand. For p = 2 the
//! integrand is quadratic and one linear solve suffices.

#include "sdl/calculus.hpp"
#include "sdl/space.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdl {

struct BeckmannSolution {
  EdgeField<double> L;
  ScalarField<double> u;
  double value = 0.0;     ///< F*(g) = (1/q) sum_e m_e |L_e|^q
  double residual = 0.0;  ///< max_v |(d*L)_v - g_v|
  double gap = 0.0;       ///< |<u, g> - F(u) - F*(g)|
  int iterations = 0;     ///< Newton steps (linear solves)
};

class InfeasibleError : public std::invalid_argument {
 public:
  InfeasibleError(std::size_t component, double mean)
      : std::invalid_argument("infeasible divergence: component " + std::to_string(component) +
                              " has nonzero mu-mean " + std::to_string(mean)),
        component_(component),
        mean_(mean) {}
  std::size_t component() const { return component_; }
  double mean() const { return mean_; }

 private:
  std::size_t component_;
  double mean_;
};

class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(BeckmannSolution best)
      : std::runtime_error(message(best)),
        best_(std::move(best)) {}
  const BeckmannSolution& best() const { return best_; }

 private:
  static std::string message(const BeckmannSolution& b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "Beckmann solver did not converge (residual %.3e, gap %.3e, %d iterations)",
                  b.residual, b.gap, b.iterations);
    return buf;
  }

  BeckmannSolution best_;
};

struct BeckmannOptions {
  int max_iterations = 500;
  double continuation_factor = 0.1;
  double min_smoothing = 1e-24;  ///< smallest smoothing, relative to the slope scale
  double relative_feasibility = 1e-12;
};

inline double default_beckmann_tolerance(double q) { return q == 2.0 ? 1e-10 : 1e-8; }

namespace detail {

class PotentialProblem {
 public:
  PotentialProblem(const Instance<double>& inst, const ScalarField<double>& g, double p)
      : inst_(inst), g_(g), p_(p), index_(inst.num_vertices(), npos) {
    std::vector<bool> rooted(inst.num_components(), false);
    for (std::size_t v = 0; v < inst.num_vertices(); ++v) {
      const std::size_t c = inst.component_of(v);
      if (!rooted[c]) {
        rooted[c] = true;  // lowest index vertex grounds its component
        continue;
      }
      index_[v] = unknowns_++;
    }
  }

  std::size_t unknowns() const { return unknowns_; }

  std::vector<double> slopes(const std::vector<double>& u) const {
    std::vector<double> du(inst_.num_edges());
    for (std::size_t e = 0; e < du.size(); ++e) {
      const auto& ed = inst_.edge(e);
      du[e] = (u[ed.head] - u[ed.tail]) / ed.length;
    }
    return du;
  }

  /// Phi_eps(u), dropping the constant eps^p / p per edge.
  double objective(const std::vector<double>& u, double eps) const {
    const auto du = slopes(u);
    double s = 0.0;
    for (std::size_t v = 0; v < u.size(); ++v) s += inst_.lumped_mass(v) * u[v] * g_[v];
    for (std::size_t e = 0; e < du.size(); ++e) s -= inst_.edge_mass(e) * integrand(du[e], eps);
    return s;
  }

  /// Sum of the absolute values of the terms of Phi_eps: the rounding scale.
  double objective_magnitude(const std::vector<double>& u, double eps) const {
    const auto du = slopes(u);
    double s = 0.0;
    for (std::size_t v = 0; v < u.size(); ++v) s += std::abs(inst_.lumped_mass(v) * u[v] * g_[v]);
    for (std::size_t e = 0; e < du.size(); ++e) s += inst_.edge_mass(e) * integrand(du[e], eps);
    return s;
  }

  /// Gradient of Phi_eps on all vertices.
  std::vector<double> gradient(const std::vector<double>& u, double eps) const {
    const auto du = slopes(u);
    std::vector<double> grad(u.size());
    for (std::size_t v = 0; v < u.size(); ++v) grad[v] = inst_.lumped_mass(v) * g_[v];
    for (std::size_t e = 0; e < du.size(); ++e) {
      const auto& ed = inst_.edge(e);
      const double flux = inst_.edge_mass(e) / ed.length * first(du[e], eps);
      grad[ed.head] -= flux;
      grad[ed.tail] += flux;
    }
    return grad;
  }

  /// Ascent direction H^{-1} grad on the grounded system. `floor_eps` keeps
  /// the curvature finite and positive where du vanishes.
  bool newton_direction(const std::vector<double>& u, const std::vector<double>& grad, double eps, double floor_eps,
                        std::vector<double>& dir) {
    const auto du = slopes(u);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * du.size());
    for (std::size_t e = 0; e < du.size(); ++e) {
      const auto& ed = inst_.edge(e);
      const double c = inst_.edge_mass(e) / (ed.length * ed.length) * second(du[e], eps, floor_eps);
      const std::size_t a = index_[ed.tail], b = index_[ed.head];
      if (a != npos) trips.emplace_back(a, a, c);
      if (b != npos) trips.emplace_back(b, b, c);
      if (a != npos && b != npos) {
        trips.emplace_back(a, b, -c);
        trips.emplace_back(b, a, -c);
      }
    }
    Eigen::SparseMatrix<double> H(unknowns_, unknowns_);
    H.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd rhs(unknowns_);
    for (std::size_t v = 0; v < index_.size(); ++v)
      if (index_[v] != npos) rhs[index_[v]] = grad[v];
    if (!analyzed_) {
      solver_.analyzePattern(H);
      analyzed_ = true;
    }
    solver_.factorize(H);
    if (solver_.info() != Eigen::Success) return false;
    Eigen::VectorXd x = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success) return false;
    dir.assign(index_.size(), 0.0);
    for (std::size_t v = 0; v < index_.size(); ++v)
      if (index_[v] != npos) dir[v] = x[index_[v]];
    return true;
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  double integrand(double t, double eps) const {
    if (eps == 0.0) return std::pow(std::abs(t), p_) / p_;
    return std::pow(t * t + eps * eps, 0.5 * p_) / p_;
  }
  double first(double t, double eps) const {
    if (eps == 0.0) return signed_power(t, p_);
    return std::pow(t * t + eps * eps, 0.5 * (p_ - 2.0)) * t;
  }
  double second(double t, double eps, double floor_eps) const {
    if (p_ == 2.0) return 1.0;
    const double e2 = eps > 0.0 ? eps * eps : floor_eps * floor_eps;
    const double s = t * t + e2;
    return std::pow(s, 0.5 * (p_ - 4.0)) * ((p_ - 1.0) * t * t + (eps > 0.0 ? e2 : (p_ - 1.0) * e2));
  }

  const Instance<double>& inst_;
  const ScalarField<double>& g_;
  double p_;
  std::vector<std::size_t> index_;
  std::size_t unknowns_ = 0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  bool analyzed_ = false;
};

inline void normalize_potential(const Instance<double>& inst, std::vector<double>& u) {
  std::vector<double> mass(inst.num_components(), 0.0), moment(inst.num_components(), 0.0);
  for (std::size_t v = 0; v < u.size(); ++v) {
    mass[inst.component_of(v)] += inst.lumped_mass(v);
    moment[inst.component_of(v)] += inst.lumped_mass(v) * u[v];
  }
  for (std::size_t v = 0; v < u.size(); ++v) u[v] -= moment[inst.component_of(v)] / mass[inst.component_of(v)];
}

/// |<u, g> - F(u) - (1/q) sum m |L|^q|, accumulated in extended precision:
/// the three terms are of the size of F*(g) and cancel.
inline double fenchel_young_gap(const Instance<double>& inst, const ScalarField<double>& g, double p,
                                const ScalarField<double>& u, const EdgeField<double>& L) {
  using X = long double;
  const X pp = p, qq = X(p) / (X(p) - 1);
  X s = 0;
  for (std::size_t v = 0; v < u.size(); ++v) s += X(inst.lumped_mass(v)) * X(u[v]) * X(g[v]);
  for (std::size_t e = 0; e < L.size(); ++e) {
    const auto& ed = inst.edge(e);
    const X du = (X(u[ed.head]) - X(u[ed.tail])) / X(ed.length);
    s -= X(inst.edge_mass(e)) * (std::pow(std::abs(du), pp) / pp + std::pow(std::abs(X(L[e])), qq) / qq);
  }
  return static_cast<double>(std::abs(s));
}

inline BeckmannSolution assemble_solution(const Instance<double>& inst, const ScalarField<double>& g, double p,
                                          std::vector<double> u, int iterations) {
  const double q = conjugate_exponent(p);
  normalize_potential(inst, u);
  BeckmannSolution sol;
  sol.u = ScalarField<double>(std::move(u));
  const auto du = differential(inst, sol.u);
  sol.L = duality_map(du, p);
  sol.value = edge_power_sum(inst, sol.L.values, q) / q;
  const auto div = adjoint(inst, sol.L);
  for (std::size_t v = 0; v < g.size(); ++v) sol.residual = std::max(sol.residual, std::abs(div[v] - g[v]));
  sol.gap = fenchel_young_gap(inst, g, p, sol.u, sol.L);
  sol.iterations = iterations;
  return sol;
}

/// Projects L onto {adjoint(L) = g} with one weighted-Laplacian solve. Large
/// potentials cost digits in the slopes of low-flow edges; the correction is
/// of the size of the residual. Kept only if residual and gap both improve.
inline void restore_feasibility(const Instance<double>& inst, const ScalarField<double>& g, double p,
                                BeckmannSolution& sol) {
  if (sol.residual == 0.0) return;
  const double q = conjugate_exponent(p);
  const auto div = adjoint(inst, sol.L);
  ScalarField<double> defect(g.size(), 0.0);
  for (std::size_t v = 0; v < g.size(); ++v) defect[v] = g[v] - div[v];
  PotentialProblem correction(inst, defect, 2.0);
  if (correction.unknowns() == 0) return;
  std::vector<double> zero(g.size(), 0.0), lambda;
  if (!correction.newton_direction(zero, correction.gradient(zero, 0.0), 0.0, 0.0, lambda)) return;
  BeckmannSolution out = sol;
  const auto dl = differential(inst, ScalarField<double>(lambda));
  for (std::size_t e = 0; e < dl.size(); ++e) out.L[e] += dl[e];
  out.value = edge_power_sum(inst, out.L.values, q) / q;
  out.residual = 0.0;
  const auto fixed = adjoint(inst, out.L);
  for (std::size_t v = 0; v < g.size(); ++v) out.residual = std::max(out.residual, std::abs(fixed[v] - g[v]));
  out.gap = fenchel_young_gap(inst, g, p, out.u, out.L);
  if (out.residual <= sol.residual && out.gap <= std::max(sol.gap, 1e-15 * std::max(1.0, std::abs(out.value))))
    sol = std::move(out);
}

}  // namespace detail

/// Throws InfeasibleError unless sum_v mu_v g_v vanishes on every component
/// (relative to sum_v mu_v |g_v|).
inline void check_divergence_feasible(const Instance<double>& inst, const ScalarField<double>& g,
                                      double relative = 1e-12) {
  if (g.size() != inst.num_vertices()) throw std::invalid_argument("divergence field dimension mismatch");
  std::vector<double> sum(inst.num_components(), 0.0), scale(inst.num_components(), 0.0);
  for (std::size_t v = 0; v < g.size(); ++v) {
    sum[inst.component_of(v)] += inst.lumped_mass(v) * g[v];
    scale[inst.component_of(v)] += inst.lumped_mass(v) * std::abs(g[v]);
  }
  for (std::size_t c = 0; c < sum.size(); ++c)
    if (std::abs(sum[c]) > relative * scale[c]) throw InfeasibleError(c, sum[c]);
}

/// Minimizes (1/q) sum_e m_e |L_e|^q subject to adjoint(L) = g. A
/// nonpositive `tol` selects the default (1e-10 for q = 2, else 1e-8).
inline BeckmannSolution solve_beckmann(const Instance<double>& inst, const ScalarField<double>& g, double q,
                                       double tol = 0.0, const BeckmannOptions& opts = {}) {
  require_energy_exponent(q, "q");
  if (!(tol > 0.0)) tol = default_beckmann_tolerance(q);
  check_divergence_feasible(inst, g, opts.relative_feasibility);
  const double p = conjugate_exponent(q);
  const std::size_t n = inst.num_vertices();

  detail::PotentialProblem problem(inst, g, p);
  std::vector<double> u(n, 0.0), dir, trial(n);
  int iterations = 0;
  bool all_zero = std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; });
  if (all_zero || problem.unknowns() == 0) return detail::assemble_solution(inst, g, p, u, 0);

  // Quadratic warm start: the p = 2 potential has the right sign pattern and
  // sets the slope scale for the continuation.
  {
    detail::PotentialProblem quadratic(inst, g, 2.0);
    const auto grad = quadratic.gradient(u, 0.0);
    if (!quadratic.newton_direction(u, grad, 0.0, 0.0, dir)) throw std::runtime_error("singular weighted Laplacian");
    u = dir;
    ++iterations;
  }
  if (p == 2.0) {
    // One refinement step absorbs the rounding of the first solve.
    const auto grad = problem.gradient(u, 0.0);
    if (problem.newton_direction(u, grad, 0.0, 0.0, dir))
      for (std::size_t v = 0; v < n; ++v) u[v] += dir[v];
    ++iterations;
    auto sol = detail::assemble_solution(inst, g, p, u, iterations);
    detail::restore_feasibility(inst, g, p, sol);
    if (sol.residual > tol || sol.gap > tol) throw ConvergenceError(std::move(sol));
    return sol;
  }

  double slope_scale = 0.0;
  for (double s : problem.slopes(u)) slope_scale = std::max(slope_scale, std::abs(s));
  if (slope_scale == 0.0) slope_scale = 1.0;
  const double floor_eps = 1e-9 * slope_scale;

  // Iterations continue past `tol` down to rounding level; `tol` only
  // decides success.
  double g_scale = 0.0;
  for (double x : g) g_scale = std::max(g_scale, std::abs(x));
  const double floor_residual = 1e-15 * g_scale;

  // Divergence-unit size of the gradient, the residual of the smoothed problem.
  auto grad_size = [&](const std::vector<double>& grad) {
    double r = 0.0;
    for (std::size_t v = 0; v < n; ++v) r = std::max(r, std::abs(grad[v]) / inst.lumped_mass(v));
    return r;
  };

  // Damped Newton on Phi_eps. Armijo on the objective; once objective
  // differences drown in rounding, a step is accepted if it shrinks the
  // gradient instead.
  auto newton_stage = [&](double eps, int budget) {
    auto grad = problem.gradient(u, eps);
    for (int it = 0; it < budget && iterations < opts.max_iterations; ++it) {
      const double size = grad_size(grad);
      if (size <= floor_residual) return;
      if (!problem.newton_direction(u, grad, eps, floor_eps, dir)) return;
      ++iterations;
      double decrement = 0.0;
      for (std::size_t v = 0; v < n; ++v) decrement += grad[v] * dir[v];
      if (!(decrement > 0.0)) return;
      const double phi0 = problem.objective(u, eps);
      const double noise = 1e-13 * problem.objective_magnitude(u, eps);
      double t = 1.0;
      bool accepted = false;
      std::vector<double> trial_grad;
      for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
        for (std::size_t v = 0; v < n; ++v) trial[v] = u[v] + t * dir[v];
        const double phi = problem.objective(trial, eps);
        if (phi >= phi0 + 1e-4 * t * decrement && 1e-4 * t * decrement > noise) {
          accepted = true;
        } else if (phi >= phi0 - noise) {
          trial_grad = problem.gradient(trial, eps);
          accepted = grad_size(trial_grad) < size;
        }
        if (accepted) break;
      }
      if (!accepted) return;
      u.swap(trial);
      grad = trial_grad.empty() ? problem.gradient(u, eps) : std::move(trial_grad);
    }
  };

  std::optional<BeckmannSolution> best;
  // Keeps the best iterate; true once it sits at rounding level.
  auto record = [&]() -> bool {
    auto sol = detail::assemble_solution(inst, g, p, u, iterations);
    if (!best || std::max(sol.residual, sol.gap) < std::max(best->residual, best->gap)) best = std::move(sol);
    return best->residual <= 10 * floor_residual;
  };

  // Continuation in the smoothing parameter. Near zero slopes the exact flux
  // |t|^{p-1} is not differentiable (p < 2) or has vanishing derivative
  // (p > 2), so the smoothing is driven far down rather than switched off.
  for (double eps = slope_scale; eps >= opts.min_smoothing * slope_scale; eps *= opts.continuation_factor) {
    newton_stage(eps, 50);
    if (eps <= 1e-4 * slope_scale && record()) break;
    if (iterations >= opts.max_iterations) break;
  }
  if (!record()) {
    // Polishing on the exact integrand.
    newton_stage(0.0, opts.max_iterations);
    record();
  }
  detail::restore_feasibility(inst, g, p, *best);
  if (best->residual <= tol && best->gap <= tol) return *best;
  throw ConvergenceError(std::move(*best));
}

inline double fenchel_conjugate_value(const Instance<double>& inst, const ScalarField<double>& g, double q,
                                      double tol = 0.0) {
  return solve_beckmann(inst, g, q, tol).value;
}

struct BiconjugateCheck {
  double lower = 0.0;  ///< <f, g*> - F*(g*)
  double F = 0.0;      ///< cylinder energy of f
  BeckmannSolution conjugate;
};

/// Evaluates the biconjugate lower bound at g* = d*(phi_p(df)), where the
/// supremum over g is attained.
inline BiconjugateCheck biconjugate_check(const Instance<double>& inst, const ScalarField<double>& f, double p,
                                          double tol = 0.0) {
  require_energy_exponent(p);
  const double q = conjugate_exponent(p);
  const auto g_star = adjoint(inst, duality_map(differential(inst, f), p));
  BiconjugateCheck out;
  out.conjugate = solve_beckmann(inst, g_star, q, tol);
  out.lower = lumped_pairing(inst, f, g_star) - out.conjugate.value;
  out.F = cylinder_energy(inst, f, p);
  return out;
}

}  // namespace sdl
