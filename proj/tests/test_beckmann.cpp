#include "support.hpp"

#include <gtest/gtest.h>

using namespace sdl;
using namespace sdl::testing;

namespace {

double rel_error(const std::vector<double>& got, const std::vector<double>& want) {
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    err = std::max(err, std::abs(got[i] - want[i]));
    scale = std::max(scale, std::abs(want[i]));
  }
  return scale > 0 ? err / scale : err;
}

std::vector<double> doubles(const std::vector<Q>& x) {
  std::vector<double> out;
  for (const auto& v : x) out.push_back(to_double(v));
  return out;
}

}  // namespace

TEST(SolveBeckmann, PathTwo) {
  const auto inst = path2();
  const ScalarField<double> g{-2.0 / 3.0, 2.0 / 3.0};
  const auto sol = solve_beckmann(inst, g, 2.0);
  EXPECT_NEAR(sol.L[0], 1.0, 1e-14);
  EXPECT_NEAR(sol.value, 0.5, 1e-14);
  EXPECT_NEAR(sol.u[1] - sol.u[0], 1.0, 1e-14);
  // Zero mu-mean normalization.
  EXPECT_NEAR(1.5 * sol.u[0] + 1.5 * sol.u[1], 0.0, 1e-14);
  EXPECT_LE(sol.residual, 1e-10);
  EXPECT_LE(sol.gap, 1e-10);
}

TEST(SolveBeckmann, ZeroDivergence) {
  for (double q : {1.5, 2.0, 3.0}) {
    const auto sol = solve_beckmann(diamond<double>(true), ScalarField<double>(4, 0.0), q);
    EXPECT_EQ(sol.L, EdgeField<double>(5, 0.0));
    EXPECT_EQ(sol.value, 0.0);
  }
}

TEST(SolveBeckmann, TriangleMatchesPseudoinverse) {
  const auto inst = triangle();
  // (1, -1, 0) has zero mu-mean on the equal-mass triangle.
  const ScalarField<double> g{1.0, -1.0, 0.0};
  const auto sol = solve_beckmann(inst, g, 2.0);
  const auto L = laplacian_pinv_flow(inst, g);
  EXPECT_LT(rel_error(sol.L.values, L), 1e-12);
  double value = 0.0;
  for (std::size_t e = 0; e < L.size(); ++e) value += inst.edge_mass(e) * L[e] * L[e] / 2.0;
  EXPECT_NEAR(sol.value, value, 1e-12);
}

TEST(SolveBeckmann, Infeasible) {
  EXPECT_THROW(solve_beckmann(path2(), ScalarField<double>{1.0, 0.0}, 2.0), InfeasibleError);
  // Balanced overall but not on each component.
  auto two = make_instance<double>({{0, 0}, {1, 0}, {5, 0}, {6, 0}}, {1, 1, 1, 1},
                                   {{0, 1, 1.0, 1.0}, {2, 3, 1.0, 1.0}});
  try {
    solve_beckmann(two, ScalarField<double>{1, 0, 0, -1}, 2.0);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.component(), 0u);
  }
  EXPECT_NO_THROW(solve_beckmann(two, ScalarField<double>{1, -1, 2, -2}, 2.0));
}

TEST(SolveBeckmann, RejectsExponent) {
  EXPECT_THROW(solve_beckmann(path2(), ScalarField<double>{0, 0}, 1.0), std::invalid_argument);
}

TEST(SolveBeckmann, ConvergenceErrorCarriesBestIterate) {
  const auto inst = diamond<double>(true);
  const ScalarField<double> g{1, 0, 0, -1};
  BeckmannOptions opts;
  opts.max_iterations = 2;
  try {
    solve_beckmann(inst, g, 1.5, 1e-14, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.best().L.size(), 5u);
    EXPECT_GT(e.best().residual + e.best().gap, 1e-14);
  }
}

TEST(FenchelConjugate, PathTwoAndHomogeneity) {
  const auto inst = path2();
  const ScalarField<double> g{-2.0 / 3.0, 2.0 / 3.0}, g2{-4.0 / 3.0, 4.0 / 3.0};
  EXPECT_NEAR(fenchel_conjugate_value(inst, g, 2.0), 0.5, 1e-14);
  EXPECT_EQ(fenchel_conjugate_value(inst, ScalarField<double>(2, 0.0), 2.0), 0.0);
  EXPECT_NEAR(fenchel_conjugate_value(inst, g2, 2.0), 2.0, 1e-13);
  for (double q : {1.5, 3.0}) {
    const double base = fenchel_conjugate_value(inst, g, q);
    EXPECT_NEAR(fenchel_conjugate_value(inst, g2, q), std::pow(2.0, q) * base, 1e-9);
  }
}

TEST(Biconjugate, Examples) {
  const auto a = biconjugate_check(path2(), ScalarField<double>{0, 1}, 2.0);
  EXPECT_NEAR(a.lower, 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(a.F, 0.5);
  const auto b = biconjugate_check(star3(), ScalarField<double>(4, 2.0), 3.0);
  EXPECT_EQ(b.lower, 0.0);
  EXPECT_EQ(b.F, 0.0);
}

TEST(Biconjugate, RandomTreeAtPThree) {
  Rng rng(41);
  const auto tree = random_rational_tree(rng, 25).cast<double>();
  ScalarField<double> f(tree.num_vertices(), 0.0);
  for (auto& x : f.values) x = uniform(rng, -1, 1);
  const auto check = biconjugate_check(tree, f, 3.0);
  EXPECT_NEAR(check.lower, check.F, 1e-6);
  // Tree-flow oracle for the conjugate value.
  const auto g_star = adjoint(tree, duality_map(differential(tree, f), 3.0));
  const auto L_tree = duality_map(differential(tree, f), 3.0);
  EXPECT_NEAR(check.conjugate.value, edge_power_sum(tree, L_tree.values, 1.5) / 1.5, 1e-8);
  (void)g_star;
}

TEST(BeckmannProperties, TreesMatchLeafElimination) {
  Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const auto exact = random_rational_tree(rng, 2 + uniform_index(rng, 40));
    const auto g = random_balanced_field(rng, exact);
    const auto oracle = doubles(tree_flow_oracle(exact, g));
    const auto inst = exact.cast<double>();
    for (double q : {3.0, 2.0, 1.5}) {
      const auto sol = solve_beckmann(inst, to_double_field(g), q);
      EXPECT_LE(rel_error(sol.L.values, oracle), 1e-10) << "trial " << trial << " q " << q;
      EXPECT_LE(sol.residual, default_beckmann_tolerance(q));
      EXPECT_LE(sol.gap, default_beckmann_tolerance(q));
    }
  }
}

TEST(BeckmannProperties, CyclicQuadraticMatchesPseudoinverse) {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const auto exact = random_cyclic_graph<Q>(rng, 3 + uniform_index(rng, 20), 1 + uniform_index(rng, 15));
    const auto g = to_double_field(random_balanced_field(rng, exact));
    const auto inst = exact.cast<double>();
    const auto sol = solve_beckmann(inst, g, 2.0);
    EXPECT_LE(rel_error(sol.L.values, laplacian_pinv_flow(inst, g)), 1e-9) << "trial " << trial;
  }
}

TEST(BeckmannProperties, OptimalitySystemAndValueRecomputation) {
  Rng rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    const auto exact = random_cyclic_graph<Q>(rng, 3 + uniform_index(rng, 20), uniform_index(rng, 15));
    const auto g = to_double_field(random_balanced_field(rng, exact));
    const auto inst = exact.cast<double>();
    const double q = std::array{1.5, 2.0, 3.0, 1.25, 5.0}[trial % 5];
    const double p = conjugate_exponent(q);
    const auto sol = solve_beckmann(inst, g, q);
    const double tol = default_beckmann_tolerance(q);
    EXPECT_LE(sol.residual, tol);
    EXPECT_LE(sol.gap, tol);
    const auto phi = duality_map(differential(inst, sol.u), p);
    // L is projected onto the constraint after the dual solve, so it agrees with phi_p(du) to the solver tolerance.
    for (std::size_t e = 0; e < phi.size(); ++e) EXPECT_NEAR(phi[e], sol.L[e], 1e-8 * std::max(1.0, std::abs(phi[e])));
    const double value = edge_power_sum(inst, sol.L.values, q) / q;
    EXPECT_NEAR(sol.value, value, 1e-12 * std::max(1.0, value));
  }
}

TEST(BeckmannProperties, WeakDuality) {
  Rng rng(45);
  for (int trial = 0; trial < 100; ++trial) {
    const auto exact = random_cyclic_graph<Q>(rng, 3 + uniform_index(rng, 12), uniform_index(rng, 10));
    const auto inst = exact.cast<double>();
    const double q = uniform(rng, 1.2, 4.0), p = conjugate_exponent(q);
    // Any L is feasible for its own divergence g = adjoint(L).
    EdgeField<double> L(inst.num_edges(), 0.0);
    for (auto& x : L.values) x = uniform(rng, -2, 2);
    const auto g = adjoint(inst, L);
    ScalarField<double> u(inst.num_vertices(), 0.0);
    for (auto& x : u.values) x = uniform(rng, -2, 2);
    const double lhs = lumped_pairing(inst, u, g);
    const double rhs = edge_power_sum(inst, differential(inst, u).values, p) / p + edge_power_sum(inst, L.values, q) / q;
    EXPECT_LE(lhs, rhs + 1e-12 * std::max(1.0, rhs)) << "trial " << trial;
  }
}

TEST(BeckmannProperties, TreeFlowIndependentOfExponent) {
  Rng rng(46);
  const auto exact = random_rational_tree(rng, 30);
  const auto g = to_double_field(random_balanced_field(rng, exact));
  const auto inst = exact.cast<double>();
  const auto a = solve_beckmann(inst, g, 1.5), b = solve_beckmann(inst, g, 4.0);
  EXPECT_LE(rel_error(a.L.values, b.L.values), 1e-10);
}
