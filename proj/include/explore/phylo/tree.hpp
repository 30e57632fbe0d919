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

#ifndef EXPLORE_PHYLO_TREE_HPP
#define EXPLORE_PHYLO_TREE_HPP

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "explore/errors.hpp"
#include "explore/io.hpp"

namespace explore::phylo {

struct Node {
  int parent = -1;
  std::vector<int> children;
  double length = 0.0;  ///< length of the edge to the parent
  int label = -1;       ///< leaf label, -1 for internal nodes
};

/**
 * \brief Tree with labelled leaves 0..n-1 and edge lengths.
 *
 * Unrooted trees are stored hanging from an internal node of degree three;
 * `rooted()` tells the two cases apart.
 */
class Phylogeny {
 public:
  Phylogeny() = default;
  explicit Phylogeny(bool rooted) : rooted_(rooted) {}

  int add_node(int label = -1) {
    nodes_.push_back(Node{-1, {}, 0.0, label});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void attach(int parent, int child, double length) {
    nodes_.at(static_cast<std::size_t>(child)).parent = parent;
    nodes_.at(static_cast<std::size_t>(child)).length = length;
    nodes_.at(static_cast<std::size_t>(parent)).children.push_back(child);
  }

  void set_root(int r) { root_ = r; }
  void set_rooted(bool r) { rooted_ = r; }

  [[nodiscard]] int root() const noexcept { return root_; }
  [[nodiscard]] bool rooted() const noexcept { return rooted_; }
  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
  [[nodiscard]] const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  Node& node(int i) { return nodes_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }

  [[nodiscard]] std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.children.empty(); }));
  }

  /// Node ids, parents before children.
  [[nodiscard]] std::vector<int> preorder() const {
    std::vector<int> order;
    if (root_ < 0) return order;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      const auto& ch = node(v).children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    return order;
  }

  /// Root-to-node path lengths.
  [[nodiscard]] std::vector<double> depths() const {
    std::vector<double> depth(nodes_.size(), 0.0);
    for (int v : preorder())
      if (v != root_) depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(node(v).parent)] + node(v).length;
    return depth;
  }

  /// Longest root-to-leaf path.
  [[nodiscard]] double height() const {
    const auto d = depths();
    double h = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].children.empty()) h = std::max(h, d[i]);
    return h;
  }

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
  bool rooted_ = true;
};

/// Leaf subset as a bit set over labels 0..n-1.
using Split = std::vector<std::uint64_t>;

namespace detail {

inline std::size_t popcount(const Split& s) {
  std::size_t c = 0;
  for (auto w : s) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

inline void normalize(Split& s, std::size_t n) {
  if (!(s[0] & 1ULL)) return;
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = ~s[i];
  if (n % 64) s.back() &= (1ULL << (n % 64)) - 1;
}

}  // namespace detail

/// Sorted leaf labels; checks that they are exactly 0..n-1.
inline std::size_t checked_leaf_count(const Phylogeny& t) {
  std::vector<int> labels;
  for (const auto& nd : t.nodes())
    if (nd.children.empty()) labels.push_back(nd.label);
  std::sort(labels.begin(), labels.end());
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != static_cast<int>(i)) throw ContractViolation("tree leaves must be labelled 0..n-1 exactly once");
  return labels.size();
}

/**
 * Non-trivial bipartitions of the unrooted tree. Each split is stored on the
 * side that excludes leaf 0, so a rooted tree's two root edges collapse into
 * one split and the root position is ignored.
 */
inline std::set<Split> bipartitions(const Phylogeny& t) {
  const std::size_t n = checked_leaf_count(t);
  const std::size_t words = (n + 63) / 64;
  std::vector<Split> below(t.node_count(), Split(words, 0));
  auto order = t.preorder();
  std::set<Split> out;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    const auto& nd = t.node(v);
    auto& bits = below[static_cast<std::size_t>(v)];
    if (nd.children.empty()) {
      bits[static_cast<std::size_t>(nd.label) / 64] |= 1ULL << (static_cast<std::size_t>(nd.label) % 64);
    } else {
      for (int c : nd.children)
        for (std::size_t w = 0; w < words; ++w) bits[w] |= below[static_cast<std::size_t>(c)][w];
    }
    if (v == t.root()) continue;
    const std::size_t k = detail::popcount(bits);
    if (k < 2 || k + 2 > n) continue;
    Split s = bits;
    detail::normalize(s, n);
    out.insert(std::move(s));
  }
  return out;
}

/// Number of bipartitions present in exactly one of the two trees.
inline std::size_t robinson_foulds(const Phylogeny& a, const Phylogeny& b) {
  if (checked_leaf_count(a) != checked_leaf_count(b))
    throw ContractViolation("robinson_foulds: trees have different leaf sets");
  const auto sa = bipartitions(a);
  const auto sb = bipartitions(b);
  std::size_t shared = 0;
  for (const auto& s : sa) shared += sb.count(s);
  return sa.size() + sb.size() - 2 * shared;
}

/// Newick text; leaves are written as `t<label>`.
inline std::string to_newick(const Phylogeny& t) {
  std::ostringstream os;
  auto rec = [&](auto&& self, int v) -> void {
    const auto& nd = t.node(v);
    if (nd.children.empty()) {
      os << 't' << nd.label;
    } else {
      os << '(';
      for (std::size_t i = 0; i < nd.children.size(); ++i) {
        if (i) os << ',';
        self(self, nd.children[i]);
      }
      os << ')';
    }
    if (v != t.root()) os << ':' << io::format_double(nd.length);
  };
  if (t.root() >= 0) rec(rec, t.root());
  os << ';';
  return os.str();
}

}  // namespace explore::phylo

#endif
