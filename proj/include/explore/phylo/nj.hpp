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

#ifndef EXPLORE_PHYLO_NJ_HPP
#define EXPLORE_PHYLO_NJ_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "explore/errors.hpp"
#include "explore/phylo/distance.hpp"
#include "explore/phylo/tree.hpp"

namespace explore::phylo {

namespace detail {

/// Working copy of a distance matrix over active clusters.
struct ActiveMatrix {
  std::vector<std::vector<double>> d;
  std::vector<int> node;  // tree node per active position

  explicit ActiveMatrix(const DistanceMatrix& D) : d(D.size(), std::vector<double>(D.size())), node(D.size()) {
    for (std::size_t i = 0; i < D.size(); ++i)
      for (std::size_t j = 0; j < D.size(); ++j) d[i][j] = D(i, j);
  }

  [[nodiscard]] std::size_t size() const noexcept { return node.size(); }

  /// Position i takes the merged cluster with the given row; position j is dropped.
  void merge(std::size_t i, std::size_t j, const std::vector<double>& row, int new_node) {
    for (std::size_t k = 0; k < size(); ++k) {
      d[i][k] = row[k];
      d[k][i] = row[k];
    }
    d[i][i] = 0.0;
    node[i] = new_node;
    d.erase(d.begin() + static_cast<std::ptrdiff_t>(j));
    for (auto& r : d) r.erase(r.begin() + static_cast<std::ptrdiff_t>(j));
    node.erase(node.begin() + static_cast<std::ptrdiff_t>(j));
  }
};

}  // namespace detail

/**
 * \brief Saitou-Nei neighbor joining.
 *
 * Joins the pair minimising Q(i,j) = (m-2) d(i,j) - r_i - r_j, ties going to
 * the lexicographically lowest (i, j) over active positions. Returns an
 * unrooted tree hanging from the final three-way node. Negative branch
 * estimates are clamped to zero.
 */
inline Phylogeny neighbor_joining(const DistanceMatrix& D) {
  const std::size_t n = D.size();
  if (n < 3) throw ContractViolation("neighbor_joining: need at least 3 taxa");
  Phylogeny tree(false);
  detail::ActiveMatrix A(D);
  for (std::size_t i = 0; i < n; ++i) A.node[i] = tree.add_node(static_cast<int>(i));

  while (A.size() > 3) {
    const std::size_t m = A.size();
    std::vector<double> r(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) r[i] += A.d[i][k];

    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const double q = static_cast<double>(m - 2) * A.d[i][j] - r[i] - r[j];
        if (q < best) {
          best = q;
          bi = i;
          bj = j;
        }
      }

    const double dij = A.d[bi][bj];
    const double li = 0.5 * dij + (r[bi] - r[bj]) / (2.0 * static_cast<double>(m - 2));
    const double lj = dij - li;
    const int u = tree.add_node();
    tree.attach(u, A.node[bi], std::max(0.0, li));
    tree.attach(u, A.node[bj], std::max(0.0, lj));

    std::vector<double> row(m);
    for (std::size_t k = 0; k < m; ++k) row[k] = 0.5 * (A.d[bi][k] + A.d[bj][k] - dij);
    A.merge(bi, bj, row, u);
  }

  const double d01 = A.d[0][1], d02 = A.d[0][2], d12 = A.d[1][2];
  const int c = tree.add_node();
  tree.attach(c, A.node[0], std::max(0.0, 0.5 * (d01 + d02 - d12)));
  tree.attach(c, A.node[1], std::max(0.0, 0.5 * (d01 + d12 - d02)));
  tree.attach(c, A.node[2], std::max(0.0, 0.5 * (d02 + d12 - d01)));
  tree.set_root(c);
  return tree;
}

}  // namespace explore::phylo

#endif
