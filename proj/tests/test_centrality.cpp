#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "guarnet/centrality.hpp"
#include "guarnet/rng.hpp"

#include "support/oracles.hpp"

namespace g = guarnet;

namespace {

g::Subnetwork net_of(int n, const std::vector<std::pair<int, int>>& edges) {
  return oracle::make_subnetwork(n, edges);
}

}  // namespace

TEST(Hits, SingleEdgeSeparatesRoles) {
  auto sub = net_of(2, {{0, 1}});
  auto r = g::hits(sub);
  EXPECT_NEAR(r.hub[0], 1.0, 1e-9);
  EXPECT_NEAR(r.hub[1], 0.0, 1e-9);
  EXPECT_NEAR(r.authority[0], 0.0, 1e-9);
  EXPECT_NEAR(r.authority[1], 1.0, 1e-9);
}

TEST(Hits, StarCenterIsPureHub) {
  auto sub = net_of(4, {{0, 1}, {0, 2}, {0, 3}});
  auto r = g::hits(sub);
  EXPECT_NEAR(r.authority[0], 0.0, 1e-9);
  EXPECT_NEAR(r.hub[0], 1.0, 1e-9);
  for (int leaf = 1; leaf <= 3; ++leaf)
    EXPECT_NEAR(r.authority[leaf], 1.0 / std::sqrt(3.0), 1e-9);
}

TEST(Hits, EdgelessComponentScoresZero) {
  auto sub = net_of(1, {});
  auto r = g::hits(sub);
  EXPECT_TRUE(r.no_edges);
  EXPECT_EQ(r.authority[0], 0.0);
  EXPECT_EQ(r.hub[0], 0.0);
}

TEST(PageRank, MutualCycleSplitsEvenly) {
  auto sub = net_of(2, {{0, 1}, {1, 0}});
  auto r = g::pagerank(sub);
  EXPECT_NEAR(r.scores[0], 0.5, 1e-9);
  EXPECT_NEAR(r.scores[1], 0.5, 1e-9);
}

TEST(PageRank, IsolatedNodeScoresOne) {
  auto sub = net_of(1, {});
  auto r = g::pagerank(sub);
  EXPECT_DOUBLE_EQ(r.scores[0], 1.0);
}

TEST(PageRank, DanglingNodeMatchesFixedPointIteration) {
  auto sub = net_of(2, {{0, 1}});
  auto r = g::pagerank(sub);
  // Independent fixed point: p = 0.15/2 + 0.85 * (dangling mass spread
  // uniformly plus in-links), iterated from uniform.
  double p0 = 0.5, p1 = 0.5;
  for (int it = 0; it < 200; ++it) {
    double dangling = p1;  // node 1 has no out-edges
    double n0 = 0.15 / 2.0 + 0.85 * (dangling / 2.0);
    double n1 = 0.15 / 2.0 + 0.85 * (dangling / 2.0 + p0);
    p0 = n0;
    p1 = n1;
  }
  EXPECT_NEAR(r.scores[0], p0, 1e-7);
  EXPECT_NEAR(r.scores[1], p1, 1e-7);
}

TEST(KShell, TriangleIsAllTwos) {
  auto sub = net_of(3, {{0, 1}, {1, 2}, {2, 0}});
  auto shells = g::kshell(sub);
  for (int v = 0; v < 3; ++v) EXPECT_EQ(shells[v], 2);
}

TEST(KShell, StarIsAllOnes) {
  auto sub = net_of(4, {{0, 1}, {0, 2}, {0, 3}});
  auto shells = g::kshell(sub);
  for (int v = 0; v < 4; ++v) EXPECT_EQ(shells[v], 1);
}

TEST(KShell, CliqueOfFourIsAllThrees) {
  auto sub = net_of(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  auto shells = g::kshell(sub);
  for (int v = 0; v < 4; ++v) EXPECT_EQ(shells[v], 3);
}

TEST(Eigenvector, PairIsSymmetric) {
  auto sub = net_of(2, {{0, 1}});
  auto r = g::eigenvector_centrality(sub);
  EXPECT_NEAR(r.scores[0], 1.0 / std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(r.scores[1], 1.0 / std::sqrt(2.0), 1e-9);
}

TEST(Eigenvector, FourCycleIsUniform) {
  auto sub = net_of(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  auto r = g::eigenvector_centrality(sub);
  for (int v = 0; v < 4; ++v) EXPECT_NEAR(r.scores[v], 0.5, 1e-9);
}

TEST(Betweenness, PathCenterMediatesOnePair) {
  auto sub = net_of(3, {{0, 1}, {1, 2}});
  auto b = g::betweenness(sub);
  EXPECT_NEAR(b[0], 0.0, 1e-12);
  EXPECT_NEAR(b[1], 1.0, 1e-12);
  EXPECT_NEAR(b[2], 0.0, 1e-12);
}

TEST(Betweenness, StarCenterMediatesAllLeafPairs) {
  auto sub = net_of(4, {{0, 1}, {0, 2}, {0, 3}});
  auto b = g::betweenness(sub);
  EXPECT_NEAR(b[0], 3.0, 1e-12);
}

TEST(Closeness, PathScores) {
  auto sub = net_of(3, {{0, 1}, {1, 2}});
  auto c = g::closeness(sub);
  EXPECT_NEAR(c[1], 1.0, 1e-12);
  EXPECT_NEAR(c[0], 2.0 / 3.0, 1e-12);
}

TEST(Closeness, IsolatedNodeIsZero) {
  auto sub = net_of(1, {});
  auto c = g::closeness(sub);
  EXPECT_DOUBLE_EQ(c[0], 0.0);
}

TEST(Closeness, CliqueIsAllOnes) {
  auto sub = net_of(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  auto c = g::closeness(sub);
  for (int v = 0; v < 4; ++v) EXPECT_DOUBLE_EQ(c[v], 1.0);
}

TEST(Degrees, CountDistinctCounterparties) {
  // Parallel guarantee edges cannot occur post-collapse, but distinctness
  // also dedupes opposing directions.
  auto sub = net_of(3, {{0, 1}, {0, 2}, {1, 0}});
  auto scores = g::compute_centrality(sub);
  EXPECT_EQ(scores.out_degree[0], 2);
  EXPECT_EQ(scores.in_degree[0], 1);
  EXPECT_EQ(scores.in_degree[1], 1);
  EXPECT_EQ(scores.out_degree[1], 1);
}

TEST(Oracles, RandomDigraphsMatchAllMeasures) {
  guarnet::Rng rng(1234321);
  for (int i = 0; i < 15; ++i) {
    auto sub = oracle::random_connected_digraph(rng, 7);
    auto hits = g::hits(sub, 1e-12, 200000);
    auto ref = oracle::hits_oracle(sub);
    for (int v = 0; v < sub.size(); ++v) {
      EXPECT_NEAR(hits.authority[v], ref.authority[v], 1e-6);
      EXPECT_NEAR(hits.hub[v], ref.hub[v], 1e-6);
    }
    auto bc = g::betweenness(sub);
    auto bc_ref = oracle::betweenness_oracle(sub);
    auto cl = g::closeness(sub);
    auto cl_ref = oracle::closeness_oracle(sub);
    auto ks = g::kshell(sub);
    auto ks_ref = oracle::kshell_oracle(sub);
    for (int v = 0; v < sub.size(); ++v) {
      EXPECT_NEAR(bc[v], bc_ref[v], 1e-9);
      EXPECT_NEAR(cl[v], cl_ref[v], 1e-9);
      EXPECT_EQ(ks[v], ks_ref[v]);
    }
  }
}
