#include "support.hpp"

#include <gtest/gtest.h>

using namespace sdl;
using namespace sdl::testing;

namespace {

// Occupation by hand: the number of times each edge is walked, weighted.
std::vector<Q> occupation_oracle(const Instance<Q>& inst, const Plan<Q>& plan) {
  std::vector<Q> occ(inst.num_edges(), Q(0));
  for (const auto& P : plan.paths)
    for (std::size_t i = 0; i + 1 < P.vertices.size(); ++i)
      for (std::size_t e = 0; e < inst.num_edges(); ++e) {
        const auto& ed = inst.edge(e);
        if ((ed.tail == P.vertices[i] && ed.head == P.vertices[i + 1]) ||
            (ed.head == P.vertices[i] && ed.tail == P.vertices[i + 1]))
          occ[e] += P.weight;
      }
  return occ;
}

}  // namespace

TEST(DecomposeAcyclic, Diamond) {
  const auto inst = diamond<Q>();
  const auto plan = decompose_acyclic(inst, Current1<Q>{Q(1), Q(1), Q(1), Q(1)});
  ASSERT_EQ(plan.size(), 2u);
  EXPECT_EQ(plan.paths[0].vertices, (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(plan.paths[1].vertices, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(plan.paths[0].weight, Q(1));
  EXPECT_EQ(plan.paths[1].weight, Q(1));
  EXPECT_EQ(plan_stats(inst, plan).mass, Q(4));
}

TEST(DecomposeAcyclic, PathAndZero) {
  const auto inst = path2<Q>();
  const auto plan = decompose_acyclic(inst, Current1<Q>{Q(1)});
  ASSERT_EQ(plan.size(), 1u);
  EXPECT_EQ(plan.paths[0].weight, Q(1));
  EXPECT_EQ(path_length(inst, plan.paths[0]), Q(1));
  EXPECT_TRUE(decompose_acyclic(inst, Current1<Q>{Q(0)}).empty());
}

TEST(DecomposeAcyclic, NegativeFlowWalksAgainstOrientation) {
  const auto plan = decompose_acyclic(path2<Q>(), Current1<Q>{Q(-3, 2)});
  ASSERT_EQ(plan.size(), 1u);
  EXPECT_EQ(plan.paths[0].vertices, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(plan.paths[0].weight, Q(3, 2));
}

TEST(DecomposeAcyclic, RejectsCycleAndNamesIt) {
  try {
    decompose_acyclic(triangle<Q>(), Current1<Q>{Q(1), Q(1), Q(1)});
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("[0,1,2]"), std::string::npos) << e.what();
  }
}

TEST(PlanStats, SinglePath) {
  const auto inst = path2();
  Plan<double> plan;
  plan.paths.push_back(make_path(inst, {0, 1}, 1.0));
  const auto st = plan_stats(inst, plan);
  EXPECT_EQ(st.barycenter.edge, (std::vector<double>{1}));
  EXPECT_EQ(st.barycenter.vertex, (std::vector<double>{0, 0}));
  EXPECT_EQ(st.boundary, (std::vector<double>{-1, 1}));
  EXPECT_EQ(st.mass, 1.0);
  EXPECT_EQ(st.start_density, (std::vector<double>{1, 0}));
  EXPECT_EQ(st.end_density, (std::vector<double>{0, 1}));
  EXPECT_TRUE(st.in_Bq);
}

TEST(PlanStats, EmptyPlan) {
  const auto st = plan_stats(diamond(), Plan<double>{});
  EXPECT_EQ(st.boundary, std::vector<double>(4, 0.0));
  EXPECT_EQ(st.barycenter.edge, std::vector<double>(4, 0.0));
  EXPECT_EQ(st.mass, 0.0);
  EXPECT_TRUE(st.in_Bq);
}

TEST(PlanStats, DoublingWeightsIsLinear) {
  const auto inst = diamond<Q>(true);
  Plan<Q> plan, twice;
  plan.paths.push_back(make_path(inst, {0, 1, 3, 0, 2}, Q(1, 3)));
  plan.paths.push_back(make_path(inst, {2, 3}, Q(5, 2)));
  for (auto P : plan.paths) {
    P.weight *= 2;
    twice.paths.push_back(P);
  }
  const auto a = plan_stats(inst, plan), b = plan_stats(inst, twice);
  for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(b.boundary[v], 2 * a.boundary[v]);
  for (std::size_t e = 0; e < 5; ++e) EXPECT_EQ(b.barycenter.edge[e], 2 * a.barycenter.edge[e]);
  EXPECT_EQ(b.mass, 2 * a.mass);
}

TEST(PlanStats, ZeroAtomEndpointLeavesBq) {
  const auto inst = path2(0.0);
  Plan<double> plan;
  plan.paths.push_back(make_path(inst, {0, 1}, 1.0));
  const auto st = plan_stats(inst, plan);
  EXPECT_FALSE(st.in_Bq);
  EXPECT_EQ(st.zero_atom_endpoints, (std::vector<std::size_t>{0, 1}));
}

TEST(PlanStats, InvalidWalks) {
  const auto inst = diamond();
  EXPECT_THROW(make_path(inst, {0, 3}, 1.0), std::invalid_argument);
  EXPECT_THROW(make_path(inst, {0}, 1.0), std::invalid_argument);
  Plan<double> plan;
  plan.paths.push_back({{0, 1}, {3}, 1.0});
  EXPECT_THROW(plan_stats(inst, plan), std::invalid_argument);
  plan.paths = {{{0, 1}, {0}, -1.0}};
  EXPECT_THROW(plan_stats(inst, plan), std::invalid_argument);
}

TEST(PlanFromDual, Examples) {
  const auto a = plan_from_dual(path2(), EdgeField<double>{1}, 2.0);
  ASSERT_EQ(a.plan.size(), 1u);
  EXPECT_EQ(a.stats.barycenter.edge, (std::vector<double>{1}));
  EXPECT_DOUBLE_EQ(a.bar_norm, 1.0);
  EXPECT_DOUBLE_EQ(a.L_norm, 1.0);

  const auto b = plan_from_dual(triangle(), EdgeField<double>{1, 1, 1}, 2.0);
  EXPECT_TRUE(b.plan.empty());
  EXPECT_EQ(b.bar_norm, 0.0);
  EXPECT_LE(b.bar_norm, b.L_norm);

  const auto c = plan_from_dual(diamond(true), EdgeField<double>{1, 1, 1, 1, 1}, 2.0);
  EXPECT_LT(c.bar_norm, c.L_norm);
  // Cycle-removed flow (0,1,0,1,0) has norm sqrt(2) against sqrt(5).
  EXPECT_NEAR(c.bar_norm, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(c.L_norm, std::sqrt(5.0), 1e-15);
}

TEST(PlanFromDual, RejectsExponent) {
  EXPECT_THROW(plan_from_dual(path2(), EdgeField<double>{1}, 1.0), std::invalid_argument);
}

TEST(SuperpositionProperties, AcyclicFlowsExact) {
  Rng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_cyclic_graph<Q>(rng, 2 + uniform_index(rng, 14), uniform_index(rng, 12));
    const auto A = random_flow(rng, inst, true);
    const auto plan = decompose_acyclic(inst, A);
    const auto st = plan_stats(inst, plan);
    EXPECT_EQ(st.boundary, boundary(inst, A)) << "trial " << trial;
    EXPECT_EQ(st.mass, mass(inst, A));
    const auto occ = occupation_oracle(inst, plan);
    for (std::size_t e = 0; e < inst.num_edges(); ++e) {
      EXPECT_EQ(occ[e], abs_value(A.J[e]));
      EXPECT_EQ(st.occupation[e], occ[e]);
    }
    EXPECT_LE(plan.size(), inst.num_edges());
    for (const auto& P : plan.paths) {
      std::vector<std::size_t> seen = P.vertices;
      std::sort(seen.begin(), seen.end());
      EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end()) << "path repeats a vertex";
      // Paths run along the sign orientation.
      for (std::size_t i = 0; i < P.edges.size(); ++i) {
        const auto& ed = inst.edge(P.edges[i]);
        EXPECT_EQ(A.J[P.edges[i]] > 0 ? ed.tail : ed.head, P.vertices[i]);
      }
    }
  }
}

TEST(SuperpositionProperties, BarycenterDefiningIdentity) {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_cyclic_graph<Q>(rng, 2 + uniform_index(rng, 10), uniform_index(rng, 8));
    const auto plan = decompose_acyclic(inst, random_flow(rng, inst, true));
    const auto st = plan_stats(inst, plan);
    ScalarField<Q> f(inst.num_vertices(), Q(0));
    for (auto& x : f.values) x = random_rational(rng, -9, 9, 4);
    auto avg = [&](std::size_t e) { return (f[inst.edge(e).tail] + f[inst.edge(e).head]) / 2; };
    Q lhs(0), rhs(0);
    for (std::size_t e = 0; e < inst.num_edges(); ++e) lhs += inst.edge_mass(e) * st.barycenter.edge[e] * avg(e);
    for (const auto& P : plan.paths)
      for (std::size_t e : P.edges) rhs += P.weight * inst.length(e) * avg(e);
    EXPECT_EQ(lhs, rhs) << "trial " << trial;
  }
}

TEST(SuperpositionProperties, PlanFromDualExact) {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_cyclic_graph<Q>(rng, 3 + uniform_index(rng, 12), 1 + uniform_index(rng, 10));
    EdgeField<Q> L(inst.num_edges(), Q(0));
    for (auto& x : L.values) x = random_rational(rng, -6, 6, 5);
    const double q = uniform(rng, 1.2, 4.0);
    const auto out = plan_from_dual(inst, L, q);
    const auto g = adjoint(inst, L);
    for (std::size_t v = 0; v < g.size(); ++v) EXPECT_EQ(out.stats.boundary[v], inst.lumped_mass(v) * g[v]);
    const bool has_cycles =
        std::any_of(out.split.cycles.J.begin(), out.split.cycles.J.end(), [](const Q& x) { return x != 0; });
    if (has_cycles)
      EXPECT_LT(out.bar_norm, out.L_norm) << "trial " << trial;
    else
      EXPECT_NEAR(out.bar_norm, out.L_norm, 1e-12 * std::max(1.0, out.L_norm));
    EXPECT_LE(out.bar_norm, out.L_norm * (1 + 1e-14));
  }
}
