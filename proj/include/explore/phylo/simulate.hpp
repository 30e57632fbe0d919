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

#ifndef EXPLORE_PHYLO_SIMULATE_HPP
#define EXPLORE_PHYLO_SIMULATE_HPP

#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "explore/errors.hpp"
#include "explore/phylo/distance.hpp"
#include "explore/phylo/tree.hpp"
#include "explore/rng.hpp"

namespace explore::phylo {

/**
 * Pure-birth (Yule) tree, every lineage splitting at rate 1, stopped at
 * `n_taxa` leaves. The root is the first split. After the last split all
 * pendant edges are extended by one more exponential waiting time Exp(n), so no
 * leaf sits at length zero.
 */
inline Phylogeny simulate_yule_tree(std::size_t n_taxa, RngStream& rng) {
  if (n_taxa < 2) throw ContractViolation("simulate_yule_tree: need at least 2 taxa");
  Phylogeny tree(true);
  const int root = tree.add_node();
  tree.set_root(root);
  std::vector<int> active;
  for (int k = 0; k < 2; ++k) {
    const int c = tree.add_node();
    tree.attach(root, c, 0.0);
    active.push_back(c);
  }
  auto grow = [&](double t) {
    for (int v : active) tree.node(v).length += t;
  };
  while (active.size() < n_taxa) {
    grow(rng.exponential(static_cast<double>(active.size())));
    const std::size_t pick = rng.uniform_index(active.size());
    const int parent = active[pick];
    const int a = tree.add_node();
    const int b = tree.add_node();
    tree.attach(parent, a, 0.0);
    tree.attach(parent, b, 0.0);
    active[pick] = a;
    active.push_back(b);
  }
  grow(rng.exponential(static_cast<double>(active.size())));
  for (std::size_t i = 0; i < active.size(); ++i) tree.node(active[i]).label = static_cast<int>(i);
  return tree;
}

/**
 * Multiplies every edge by exp(u), u ~ U(-skew, skew), then rescales all edges
 * by one common factor so that the longest root-to-leaf path equals `scale`.
 */
inline Phylogeny apply_skew_scale(Phylogeny tree, double skew, double scale, RngStream& rng) {
  if (!(skew >= 0.0)) throw ContractViolation("apply_skew_scale: skew must be >= 0");
  if (!(scale > 0.0)) throw ContractViolation("apply_skew_scale: scale must be > 0");
  for (int v : tree.preorder()) {
    if (v == tree.root()) continue;
    tree.node(v).length *= std::exp(rng.uniform(-skew, skew));
  }
  const double h = tree.height();
  if (!(h > 0.0) || !std::isfinite(h)) throw NumericalError("apply_skew_scale: tree has zero height");
  const double factor = scale / h;
  for (int v : tree.preorder())
    if (v != tree.root()) tree.node(v).length *= factor;
  return tree;
}

inline constexpr char kNucleotides[4] = {'A', 'C', 'G', 'T'};

/// Equal-length nucleotide sequences indexed by leaf label.
struct Alignment {
  std::vector<std::string> sequences;

  [[nodiscard]] std::size_t size() const noexcept { return sequences.size(); }
  [[nodiscard]] std::size_t length() const noexcept { return sequences.empty() ? 0 : sequences.front().size(); }
};

/**
 * Jukes-Cantor evolution from a uniform i.i.d. root sequence. Along an edge of
 * length t each site is redrawn uniformly from {A,C,G,T} with probability
 * 1 - exp(-4t/3), which changes it with probability (3/4)(1 - exp(-4t/3)).
 */
inline Alignment evolve_sequences(const Phylogeny& tree, std::size_t length, RngStream& rng) {
  const auto order = tree.preorder();
  std::vector<std::string> seq(tree.node_count());
  std::string& root_seq = seq[static_cast<std::size_t>(tree.root())];
  root_seq.resize(length);
  for (auto& c : root_seq) c = kNucleotides[rng.uniform_index(4)];

  std::size_t leaves = 0;
  for (int v : order) {
    const auto& nd = tree.node(v);
    if (nd.children.empty()) ++leaves;
    if (v == tree.root()) continue;
    std::string s = seq[static_cast<std::size_t>(nd.parent)];
    const double redraw = -std::expm1(-4.0 * nd.length / 3.0);
    if (redraw > 0.0)
      for (auto& c : s)
        if (rng.uniform() < redraw) c = kNucleotides[rng.uniform_index(4)];
    seq[static_cast<std::size_t>(v)] = std::move(s);
  }

  Alignment aln;
  aln.sequences.resize(leaves);
  for (int v : order) {
    const auto& nd = tree.node(v);
    if (nd.children.empty()) aln.sequences.at(static_cast<std::size_t>(nd.label)) = seq[static_cast<std::size_t>(v)];
  }
  return aln;
}

/// Mismatch proportions at or above this are treated as saturated.
inline constexpr double kJcSaturationCap = 0.74999;

/// d = -(3/4) ln(1 - 4p/3), with p capped just below 3/4.
inline double jc_distance(double p, bool* saturated = nullptr) {
  const bool sat = p >= 0.75;
  if (saturated) *saturated = sat;
  if (sat) p = kJcSaturationCap;
  return -0.75 * std::log1p(-4.0 * p / 3.0);
}

inline DistanceMatrix jc_distance_matrix(const Alignment& aln, std::size_t* saturated_pairs = nullptr) {
  const std::size_t n = aln.size();
  const std::size_t L = aln.length();
  for (const auto& s : aln.sequences)
    if (s.size() != L) throw ContractViolation("jc_distance_matrix: sequences differ in length");
  if (L == 0) throw ContractViolation("jc_distance_matrix: empty sequences");
  DistanceMatrix D(n);
  std::size_t saturated = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = aln.sequences[i];
      const auto& b = aln.sequences[j];
      std::size_t diff = 0;
      for (std::size_t k = 0; k < L; ++k) diff += a[k] != b[k];
      bool sat = false;
      D.set(i, j, jc_distance(static_cast<double>(diff) / static_cast<double>(L), &sat));
      saturated += sat;
    }
  if (saturated_pairs) *saturated_pairs = saturated;
  return D;
}

inline void write_fasta(std::ostream& os, const Alignment& aln) {
  for (std::size_t i = 0; i < aln.size(); ++i) os << ">t" << i << '\n' << aln.sequences[i] << '\n';
}

}  // namespace explore::phylo

#endif
