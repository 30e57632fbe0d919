// Copyright 2026 The Explore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "explore/phylo/distance.hpp"
#include "explore/phylo/nj.hpp"
#include "explore/phylo/outcome.hpp"
#include "explore/phylo/simulate.hpp"
#include "explore/phylo/tree.hpp"
#include "explore/phylo/upgma.hpp"

using namespace explore;
using namespace explore::phylo;

namespace {

using LeafSet = std::set<int>;

LeafSet leaves_below(const Phylogeny& t, int v) {
  const auto& nd = t.node(v);
  if (nd.children.empty()) return {nd.label};
  LeafSet out;
  for (int c : nd.children) {
    const auto s = leaves_below(t, c);
    out.insert(s.begin(), s.end());
  }
  return out;
}

// Non-trivial splits as explicit label sets, always the side without leaf 0.
std::set<LeafSet> splits(const Phylogeny& t) {
  const LeafSet all = leaves_below(t, t.root());
  const int n = static_cast<int>(all.size());
  std::set<LeafSet> out;
  for (std::size_t v = 0; v < t.node_count(); ++v) {
    if (static_cast<int>(v) == t.root()) continue;
    LeafSet s = leaves_below(t, static_cast<int>(v));
    if (s.count(0)) {
      LeafSet c;
      for (int x : all)
        if (!s.count(x)) c.insert(x);
      s = c;
    }
    const int k = static_cast<int>(s.size());
    if (k >= 2 && k <= n - 2) out.insert(s);
  }
  return out;
}

std::size_t brute_rf(const Phylogeny& a, const Phylogeny& b) {
  const auto sa = splits(a), sb = splits(b);
  std::size_t d = 0;
  for (const auto& s : sa) d += !sb.count(s);
  for (const auto& s : sb) d += !sa.count(s);
  return d;
}

// ((0:1,1:2):1,(2:3,3:4)) stored unrooted from the node joining 0 and 1.
Phylogeny quartet(int a, int b, int c, int d) {
  Phylogeny t(false);
  const int u = t.add_node();
  t.set_root(u);
  const int la = t.add_node(a), lb = t.add_node(b), v = t.add_node(), lc = t.add_node(c), ld = t.add_node(d);
  t.attach(u, la, 1.0);
  t.attach(u, lb, 2.0);
  t.attach(u, v, 1.0);
  t.attach(v, lc, 3.0);
  t.attach(v, ld, 4.0);
  return t;
}

Phylogeny random_tree(std::size_t n, RngStream& rng, double skew) {
  return apply_skew_scale(simulate_yule_tree(n, rng), skew, 1.0, rng);
}

void expect_same_distances(const DistanceMatrix& a, const DistanceMatrix& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a(i, j), b(i, j), tol) << i << "," << j;
}

Phylogeny two_leaf(double t) {
  Phylogeny tree(true);
  const int r = tree.add_node();
  tree.set_root(r);
  tree.attach(r, tree.add_node(0), 0.0);
  tree.attach(r, tree.add_node(1), t);
  return tree;
}

double mismatch(const Alignment& a) {
  std::size_t d = 0;
  for (std::size_t k = 0; k < a.length(); ++k) d += a.sequences[0][k] != a.sequences[1][k];
  return static_cast<double>(d) / static_cast<double>(a.length());
}

}  // namespace

TEST(Yule, TwoTaxaIsACherry) {
  RngStream rng(1);
  const auto t = simulate_yule_tree(2, rng);
  EXPECT_TRUE(t.rooted());
  EXPECT_EQ(t.node_count(), 3u);
  EXPECT_EQ(t.node(t.root()).children.size(), 2u);
  EXPECT_THROW(simulate_yule_tree(1, rng), ContractViolation);
}

TEST(Yule, ThirtyTaxaShape) {
  RngStream rng(2);
  const auto t = simulate_yule_tree(30, rng);
  EXPECT_EQ(t.leaf_count(), 30u);
  EXPECT_EQ(t.node_count() - t.leaf_count(), 29u);
  for (const auto& nd : t.nodes()) {
    if (!nd.children.empty()) {
      EXPECT_EQ(nd.children.size(), 2u);
    }
    EXPECT_GE(nd.length, 0.0);
  }
  std::set<int> labels;
  for (const auto& nd : t.nodes())
    if (nd.children.empty()) labels.insert(nd.label);
  EXPECT_EQ(labels.size(), 30u);
  EXPECT_EQ(*labels.begin(), 0);
  EXPECT_EQ(*labels.rbegin(), 29);
}

TEST(Yule, MeanCherryCount) {
  RngStream rng(3);
  double total = 0.0;
  const int trees = 10000;
  for (int k = 0; k < trees; ++k) {
    const auto t = simulate_yule_tree(30, rng);
    for (const auto& nd : t.nodes())
      if (nd.children.size() == 2 && t.node(nd.children[0]).children.empty() && t.node(nd.children[1]).children.empty())
        total += 1.0;
  }
  EXPECT_NEAR(total / trees, 10.0, 0.3);
}

TEST(SkewScale, HeightIsTheScale) {
  RngStream rng(4);
  for (double skew : {0.0, 0.5, std::numbers::ln10})
    for (double s : {0.02, 0.3, 1.0}) {
      const auto t = apply_skew_scale(simulate_yule_tree(30, rng), skew, s, rng);
      EXPECT_NEAR(t.height(), s, 1e-12);
    }
}

TEST(SkewScale, ZeroSkewIsAPureRescale) {
  RngStream rng(5);
  const auto t = simulate_yule_tree(10, rng);
  const auto u = apply_skew_scale(t, 0.0, 2.0, rng);
  const double f = 2.0 / t.height();
  for (std::size_t v = 0; v < t.node_count(); ++v)
    EXPECT_NEAR(u.node(static_cast<int>(v)).length, t.node(static_cast<int>(v)).length * f, 1e-12);
}

TEST(SkewScale, MultipliersStayWithinATenfold) {
  RngStream rng(6);
  const auto t = simulate_yule_tree(30, rng);
  RngStream draw(7);
  RngStream replay = draw;
  const auto u = apply_skew_scale(t, std::numbers::ln10, 1.0, draw);
  double factor = 0.0;
  for (int v : t.preorder()) {
    if (v == t.root()) continue;
    const double m = std::exp(replay.uniform(-std::numbers::ln10, std::numbers::ln10));
    EXPECT_GE(m, 0.1 - 1e-12);
    EXPECT_LE(m, 10.0 + 1e-12);
    if (t.node(v).length > 0.0) {
      const double f = u.node(v).length / (t.node(v).length * m);
      if (factor == 0.0) factor = f;
      EXPECT_NEAR(f, factor, 1e-9 * factor);
    }
  }
}

TEST(SkewScale, Errors) {
  RngStream rng(8);
  EXPECT_THROW(apply_skew_scale(simulate_yule_tree(4, rng), -0.1, 1.0, rng), ContractViolation);
  EXPECT_THROW(apply_skew_scale(simulate_yule_tree(4, rng), 0.1, 0.0, rng), ContractViolation);
  EXPECT_THROW(apply_skew_scale(two_leaf(0.0), 0.0, 1.0, rng), NumericalError);
}

TEST(Evolve, ZeroLengthEdgeCopiesTheParent) {
  RngStream rng(9);
  const auto a = evolve_sequences(two_leaf(0.0), 1000, rng);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a.sequences[0], a.sequences[1]);
  for (char c : a.sequences[0]) EXPECT_NE(std::string("ACGT").find(c), std::string::npos);
}

TEST(Evolve, MismatchFollowsJukesCantor) {
  RngStream rng(10);
  EXPECT_NEAR(mismatch(evolve_sequences(two_leaf(0.1), 100000, rng)), 0.75 * (1.0 - std::exp(-0.4 / 3.0)), 0.005);
  EXPECT_NEAR(mismatch(evolve_sequences(two_leaf(50.0), 100000, rng)), 0.75, 0.01);
}

TEST(Evolve, RootIsUniformOverNucleotides) {
  RngStream rng(11);
  const auto a = evolve_sequences(two_leaf(0.0), 100000, rng);
  for (char c : std::string("ACGT")) {
    const double f = std::count(a.sequences[0].begin(), a.sequences[0].end(), c) / 100000.0;
    EXPECT_NEAR(f, 0.25, 0.006);
  }
}

TEST(JcDistance, Formula) {
  EXPECT_EQ(jc_distance(0.0), 0.0);
  EXPECT_NEAR(jc_distance(0.3), 0.38312, 5e-6);
  EXPECT_NEAR(jc_distance(0.3), -0.75 * std::log(1.0 - 0.4), 1e-14);
}

TEST(JcDistance, SaturationIsCappedAndFlagged) {
  bool sat = false;
  const double d = jc_distance(0.75, &sat);
  EXPECT_TRUE(sat);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_DOUBLE_EQ(d, -0.75 * std::log(1.0 - 4.0 * 0.74999 / 3.0));
  EXPECT_DOUBLE_EQ(jc_distance(0.9), d);
  jc_distance(0.5, &sat);
  EXPECT_FALSE(sat);

  Alignment aln{{"AAAA", "CCCC", "AAAA"}};
  std::size_t pairs = 0;
  const auto D = jc_distance_matrix(aln, &pairs);
  EXPECT_EQ(pairs, 2u);
  EXPECT_EQ(D(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(D(0, 1), d);
}

TEST(JcDistance, MatrixShapeAndErrors) {
  Alignment aln{{"ACGTACGTAC", "ACGTACGTAA", "TCGTACGTAA"}};
  const auto D = jc_distance_matrix(aln);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(D(i, i), 0.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(D(i, j), D(j, i));
  }
  EXPECT_NEAR(D(0, 1), jc_distance(0.1), 1e-15);
  EXPECT_THROW(jc_distance_matrix(Alignment{{"AC", "A"}}), ContractViolation);
}

TEST(JcDistance, ConvergesToBranchLength) {
  RngStream rng(12);
  const auto D = jc_distance_matrix(evolve_sequences(two_leaf(0.2), 1000000, rng));
  EXPECT_NEAR(D(0, 1), 0.2, 0.01);
}

TEST(Patristic, Quartet) {
  const auto D = patristic_distances(quartet(0, 1, 2, 3));
  EXPECT_DOUBLE_EQ(D(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(D(0, 2), 5.0);
  EXPECT_DOUBLE_EQ(D(0, 3), 6.0);
  EXPECT_DOUBLE_EQ(D(1, 2), 6.0);
  EXPECT_DOUBLE_EQ(D(1, 3), 7.0);
  EXPECT_DOUBLE_EQ(D(2, 3), 7.0);
}

TEST(NeighborJoining, RecoversAdditiveQuartet) {
  const auto truth = quartet(0, 1, 2, 3);
  const auto D = patristic_distances(truth);
  const auto nj = neighbor_joining(D);
  EXPECT_FALSE(nj.rooted());
  EXPECT_EQ(robinson_foulds(nj, truth), 0u);
  expect_same_distances(patristic_distances(nj), D, 1e-12);
}

TEST(NeighborJoining, ThreeTaxaStar) {
  DistanceMatrix D(3);
  D.set(0, 1, 3.0);
  D.set(0, 2, 4.0);
  D.set(1, 2, 5.0);
  const auto t = neighbor_joining(D);
  EXPECT_EQ(t.leaf_count(), 3u);
  std::vector<double> len(3);
  for (const auto& nd : t.nodes())
    if (nd.children.empty()) len[static_cast<std::size_t>(nd.label)] = nd.length;
  EXPECT_NEAR(len[0], (3.0 + 4.0 - 5.0) / 2.0, 1e-12);
  EXPECT_NEAR(len[1], (3.0 + 5.0 - 4.0) / 2.0, 1e-12);
  EXPECT_NEAR(len[2], (4.0 + 5.0 - 3.0) / 2.0, 1e-12);
  EXPECT_THROW(neighbor_joining(DistanceMatrix(2)), ContractViolation);
}

TEST(NeighborJoining, TiesJoinTheLowestPair) {
  DistanceMatrix D(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) D.set(i, j, 1.0);
  const auto s = splits(neighbor_joining(D));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(*s.begin(), (LeafSet{2, 3}));
}

TEST(NeighborJoining, ExactOnRandomAdditiveMatrices) {
  RngStream rng(13);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 4 + rng.uniform_index(9);
    const auto truth = random_tree(n, rng, 1.0);
    const auto D = patristic_distances(truth);
    const auto nj = neighbor_joining(D);
    ASSERT_EQ(robinson_foulds(nj, truth), 0u) << "instance " << k;
    expect_same_distances(patristic_distances(nj), D, 1e-9);
  }
}

TEST(Upgma, TwoTaxa) {
  DistanceMatrix D(2);
  D.set(0, 1, 0.4);
  const auto t = upgma(D);
  EXPECT_TRUE(t.rooted());
  EXPECT_EQ(t.leaf_count(), 2u);
  EXPECT_NEAR(t.height(), 0.2, 1e-15);
  for (int c : t.node(t.root()).children) EXPECT_NEAR(t.node(c).length, 0.2, 1e-15);
}

TEST(Upgma, TiesMergeTheLowestPair) {
  DistanceMatrix D(3);
  D.set(0, 1, 1.0);
  D.set(0, 2, 1.0);
  D.set(1, 2, 1.0);
  const auto t = upgma(D);
  bool found = false;
  for (int c : t.node(t.root()).children)
    if (!t.node(c).children.empty()) {
      EXPECT_EQ(leaves_below(t, c), (LeafSet{0, 1}));
      found = true;
    }
  EXPECT_TRUE(found);
}

TEST(Upgma, ExactOnUltrametricMatrices) {
  RngStream rng(14);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + rng.uniform_index(11);
    auto truth = simulate_yule_tree(n, rng);
    const auto D = patristic_distances(truth);
    const auto u = upgma(D);
    ASSERT_EQ(robinson_foulds(u, truth), 0u) << "instance " << k;
    expect_same_distances(patristic_distances(u), D, 1e-9);
    const auto depth = u.depths();
    for (std::size_t v = 0; v < u.node_count(); ++v)
      if (u.node(static_cast<int>(v)).children.empty()) {
        EXPECT_NEAR(depth[v], truth.height(), 1e-9);
      }
  }
}

TEST(RobinsonFoulds, Quartets) {
  const auto a = quartet(0, 1, 2, 3);
  EXPECT_EQ(robinson_foulds(a, a), 0u);
  EXPECT_EQ(robinson_foulds(a, quartet(1, 0, 3, 2)), 0u);
  EXPECT_EQ(robinson_foulds(a, quartet(0, 2, 1, 3)), 2u);
  EXPECT_EQ(robinson_foulds(a, quartet(0, 3, 1, 2)), 2u);
}

TEST(RobinsonFoulds, RootIsIgnored) {
  RngStream rng(15);
  const auto t = simulate_yule_tree(12, rng);
  const auto D = patristic_distances(t);
  EXPECT_EQ(robinson_foulds(t, neighbor_joining(D)), 0u);
}

TEST(RobinsonFoulds, LeafSetMismatch) {
  RngStream rng(16);
  EXPECT_THROW(robinson_foulds(simulate_yule_tree(5, rng), simulate_yule_tree(6, rng)), ContractViolation);
}

TEST(RobinsonFoulds, BoundOnThirtyTaxa) {
  RngStream rng(17);
  for (int k = 0; k < 50; ++k) EXPECT_LE(robinson_foulds(simulate_yule_tree(30, rng), simulate_yule_tree(30, rng)), 54u);
}

TEST(RobinsonFoulds, AgreesWithBruteForceOracle) {
  RngStream rng(18);
  std::vector<Phylogeny> trees;
  for (int k = 0; k < 50; ++k) trees.push_back(simulate_yule_tree(6, rng));
  for (std::size_t i = 0; i < trees.size(); ++i)
    for (std::size_t j = 0; j < trees.size(); ++j)
      ASSERT_EQ(robinson_foulds(trees[i], trees[j]), brute_rf(trees[i], trees[j]));
}

TEST(RobinsonFoulds, IsAMetric) {
  RngStream rng(19);
  for (int k = 0; k < 300; ++k) {
    const auto a = simulate_yule_tree(7, rng), b = simulate_yule_tree(7, rng), c = simulate_yule_tree(7, rng);
    EXPECT_EQ(robinson_foulds(a, b), robinson_foulds(b, a));
    EXPECT_LE(robinson_foulds(a, c), robinson_foulds(a, b) + robinson_foulds(b, c));
  }
}

TEST(Newick, Cherry) {
  EXPECT_EQ(to_newick(two_leaf(0.5)), "(t0:0,t1:0.5);");
}

TEST(PhyloOutcome, DeterministicWithMetrics) {
  const ParameterVector theta{0.3, 1.0};
  RngStream a(20), b(20);
  const auto ra = phylo_outcome(theta, a);
  const auto rb = phylo_outcome(theta, b);
  EXPECT_EQ(ra, rb);
  ASSERT_TRUE(ra.metrics.count("rf_nj"));
  ASSERT_TRUE(ra.metrics.count("rf_upgma"));
  EXPECT_EQ(ra.outcome_holds, ra.metrics.at("rf_upgma") <= ra.metrics.at("rf_nj"));
  EXPECT_LE(ra.metrics.at("rf_nj"), 54.0);
}

TEST(PhyloOutcome, TinyScaleFavoursUpgmaMoreOftenThanLargeSkewedScale) {
  // Near the noise floor both methods are poor and ties are common; at high skew UPGMA's clock assumption fails.
  int low = 0, high = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    RngStream r1(1000 + s), r2(5000 + s);
    low += phylo_outcome(ParameterVector{0.02, 0.1}, r1).outcome_holds;
    high += phylo_outcome(ParameterVector{0.5, 2.2}, r2).outcome_holds;
  }
  EXPECT_GT(low, high);
}
