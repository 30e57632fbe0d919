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

#ifndef EXPLORE_PHYLO_DISTANCE_HPP
#define EXPLORE_PHYLO_DISTANCE_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "explore/errors.hpp"
#include "explore/phylo/tree.hpp"

namespace explore::phylo {

/// Symmetric n x n matrix with zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double v) {
    if (i == j) return;
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// Leaf-to-leaf path lengths, indexed by leaf label.
inline DistanceMatrix patristic_distances(const Phylogeny& t) {
  const std::size_t n = checked_leaf_count(t);
  const std::size_t m = t.node_count();
  std::vector<std::vector<std::pair<int, double>>> adj(m);
  for (std::size_t v = 0; v < m; ++v) {
    const auto& nd = t.node(static_cast<int>(v));
    if (nd.parent >= 0) {
      adj[v].emplace_back(nd.parent, nd.length);
      adj[static_cast<std::size_t>(nd.parent)].emplace_back(static_cast<int>(v), nd.length);
    }
  }
  DistanceMatrix D(n);
  for (std::size_t src = 0; src < m; ++src) {
    const auto& s = t.node(static_cast<int>(src));
    if (!s.children.empty()) continue;
    std::vector<double> dist(m, -1.0);
    std::vector<int> stack{static_cast<int>(src)};
    dist[src] = 0.0;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (auto [w, len] : adj[static_cast<std::size_t>(v)]) {
        if (dist[static_cast<std::size_t>(w)] >= 0.0) continue;
        dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + len;
        stack.push_back(w);
      }
    }
    for (std::size_t v = 0; v < m; ++v) {
      const auto& nd = t.node(static_cast<int>(v));
      if (nd.children.empty())
        D.set(static_cast<std::size_t>(s.label), static_cast<std::size_t>(nd.label), dist[v]);
    }
  }
  return D;
}

}  // namespace explore::phylo

#endif
