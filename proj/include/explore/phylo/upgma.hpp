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

#ifndef EXPLORE_PHYLO_UPGMA_HPP
#define EXPLORE_PHYLO_UPGMA_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "explore/errors.hpp"
#include "explore/phylo/distance.hpp"
#include "explore/phylo/nj.hpp"
#include "explore/phylo/tree.hpp"

namespace explore::phylo {

/// Average-linkage clustering into a rooted ultrametric tree; ties merge the lowest (i, j).
inline Phylogeny upgma(const DistanceMatrix& D) {
  const std::size_t n = D.size();
  if (n < 2) throw ContractViolation("upgma: need at least 2 taxa");
  Phylogeny tree(true);
  detail::ActiveMatrix A(D);
  std::vector<double> size(n, 1.0), height(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) A.node[i] = tree.add_node(static_cast<int>(i));

  while (A.size() > 1) {
    const std::size_t m = A.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (A.d[i][j] < best) {
          best = A.d[i][j];
          bi = i;
          bj = j;
        }

    const double h = 0.5 * best;
    const int u = tree.add_node();
    tree.attach(u, A.node[bi], std::max(0.0, h - height[bi]));
    tree.attach(u, A.node[bj], std::max(0.0, h - height[bj]));

    std::vector<double> row(m);
    for (std::size_t k = 0; k < m; ++k)
      row[k] = (size[bi] * A.d[bi][k] + size[bj] * A.d[bj][k]) / (size[bi] + size[bj]);
    A.merge(bi, bj, row, u);
    size[bi] += size[bj];
    height[bi] = h;
    size.erase(size.begin() + static_cast<std::ptrdiff_t>(bj));
    height.erase(height.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  tree.set_root(A.node[0]);
  return tree;
}

}  // namespace explore::phylo

#endif
