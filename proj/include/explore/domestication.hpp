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

#ifndef EXPLORE_DOMESTICATION_HPP
#define EXPLORE_DOMESTICATION_HPP

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "explore/errors.hpp"
#include "explore/outcome.hpp"
#include "explore/params.hpp"
#include "explore/phylo/distance.hpp"
#include "explore/phylo/nj.hpp"
#include "explore/phylo/tree.hpp"
#include "explore/rng.hpp"

namespace explore::domestication {

/// Presence/absence of L marker loci.
class Chromosome {
 public:
  Chromosome() = default;
  explicit Chromosome(std::size_t loci) : loci_(loci), words_((loci + 63) / 64, 0) {}

  static Chromosome random(std::size_t loci, RngStream& rng) {
    Chromosome c(loci);
    for (auto& w : c.words_) w = rng();
    c.trim();
    return c;
  }

  [[nodiscard]] std::size_t loci() const noexcept { return loci_; }
  [[nodiscard]] bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1ULL; }
  void set(std::size_t i, bool v) {
    const auto bit = 1ULL << (i % 64);
    if (v) words_[i / 64] |= bit; else words_[i / 64] &= ~bit;
  }
  [[nodiscard]] const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  [[nodiscard]] std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  /// Loci [0, junction) from `head`, [junction, L) from `tail`, written into *this.
  void assign_crossover(const Chromosome& head, const Chromosome& tail, std::size_t junction) {
    loci_ = head.loci_;
    words_.resize(head.words_.size());
    for (std::size_t w = 0; w < words_.size(); ++w) {
      const std::size_t lo = w * 64;
      std::uint64_t mask;  // bits taken from head
      if (junction <= lo) mask = 0;
      else if (junction >= lo + 64) mask = ~0ULL;
      else mask = (1ULL << (junction - lo)) - 1;
      words_[w] = (head.words_[w] & mask) | (tail.words_[w] & ~mask);
    }
  }

  void merge_or(const Chromosome& other) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
  }

  friend bool operator==(const Chromosome&, const Chromosome&) = default;

 private:
  void trim() {
    if (loci_ % 64 && !words_.empty()) words_.back() &= (1ULL << (loci_ % 64)) - 1;
  }

  std::size_t loci_ = 0;
  std::vector<std::uint64_t> words_;
};

struct Genome {
  std::array<Chromosome, 2> chromosomes;

  /// Loci present on either chromosome.
  [[nodiscard]] Chromosome presence() const {
    Chromosome out = chromosomes[0];
    out.merge_or(chromosomes[1]);
    return out;
  }

  friend bool operator==(const Genome&, const Genome&) = default;
};

struct Population {
  std::vector<Genome> genomes;
  std::size_t generation = 0;

  [[nodiscard]] std::size_t size() const noexcept { return genomes.size(); }
};

struct DomesticationParams {
  std::size_t n_w = 10000;
  std::size_t n_b = 20;
  std::size_t t_b = 10;
  std::size_t n_d = 100;
  std::size_t t_d = 20;
  std::size_t t_h = 100;
  double p_r = 0.1;

  /// From a parameter vector ordered (n_w, n_b, t_b, n_d, t_d, t_h, p_r); counts are rounded.
  static DomesticationParams from_vector(const ParameterVector& theta) {
    if (theta.size() != 7) throw ContractViolation("domestication: expected 7 parameters");
    auto count = [&](std::size_t i) {
      const double v = std::round(theta[i]);
      if (!(v >= 1.0)) throw ContractViolation("domestication: population sizes and durations must be >= 1");
      return static_cast<std::size_t>(v);
    };
    DomesticationParams p{count(0), count(1), count(2), count(3), count(4), count(5), theta[6]};
    if (!(p.p_r >= 0.0 && p.p_r <= 1.0)) throw ContractViolation("domestication: p_r must lie in [0, 1]");
    return p;
  }

  /// Table bounds used as the prior box, in from_vector order.
  static ParameterSpace prior_space() {
    return ParameterSpace{{"n_w", 1000, 20000, true}, {"n_b", 10, 39, true},  {"t_b", 5, 25, true},
                          {"n_d", 40, 400, true},     {"t_d", 10, 50, true},  {"t_h", 25, 400, true},
                          {"p_r", 0.0, 1.0, false}};
  }
};

struct DomesticationOptions {
  std::size_t loci = 100;
  std::size_t founders = 20;
  /// Both wild-type populations draw from one founder set.
  bool shared_founders = false;
  std::size_t samples_per_population = 2;
  /// Genomes drawn from the final admixed population to measure diversity.
  std::size_t diversity_sample = 20;
};

/// Population labels of the sampled genomes, in sample order.
enum class Origin : int { wild_a = 0, wild_b = 1, domesticated_a = 2, domesticated_b = 3, admixed = 4 };

struct DomesticationResult {
  std::vector<Genome> sampled;
  std::vector<Origin> origin;
  double diversity = 0.0;
};

namespace detail {

inline void make_gamete(const Genome& parent, double p_r, RngStream& rng, Chromosome& out) {
  const std::size_t first = rng.uniform_index(2);
  const Chromosome& a = parent.chromosomes[first];
  const Chromosome& b = parent.chromosomes[1 - first];
  if (p_r > 0.0 && a.loci() > 1 && rng.uniform() < p_r) {
    const std::size_t junction = 1 + rng.uniform_index(a.loci() - 1);
    out.assign_crossover(a, b, junction);
  } else {
    out = a;
  }
}

/// One non-overlapping generation: every offspring picks two parents with replacement.
inline void reproduce(const Population& parents, std::size_t n_offspring, double p_r, RngStream& rng,
                      Population& offspring) {
  offspring.genomes.resize(n_offspring);
  const std::size_t n = parents.size();
  for (auto& child : offspring.genomes) {
    const std::size_t p1 = rng.uniform_index(n);
    const std::size_t p2 = rng.uniform_index(n);
    make_gamete(parents.genomes[p1], p_r, rng, child.chromosomes[0]);
    make_gamete(parents.genomes[p2], p_r, rng, child.chromosomes[1]);
  }
  offspring.generation = parents.generation + 1;
}

inline void evolve(Population& pop, std::size_t generations, std::size_t size, double p_r, RngStream& rng) {
  Population next;
  for (std::size_t g = 0; g < generations; ++g) {
    reproduce(pop, size, p_r, rng, next);
    std::swap(pop, next);
  }
}

/// k distinct indices out of n, by partial Fisher-Yates.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_index(n - i)]);
  idx.resize(k);
  return idx;
}

}  // namespace detail

/// 1 - 2|A n B| / (|A| + |B|) on pooled marker-presence sets; two empty sets are at distance 0.
inline double dice_distance(const Genome& a, const Genome& b) {
  std::size_t na = 0, nb = 0, both = 0;
  const auto& a0 = a.chromosomes[0].words();
  const auto& a1 = a.chromosomes[1].words();
  const auto& b0 = b.chromosomes[0].words();
  const auto& b1 = b.chromosomes[1].words();
  for (std::size_t w = 0; w < a0.size(); ++w) {
    const std::uint64_t pa = a0[w] | a1[w];
    const std::uint64_t pb = b0[w] | b1[w];
    na += static_cast<std::size_t>(std::popcount(pa));
    nb += static_cast<std::size_t>(std::popcount(pb));
    both += static_cast<std::size_t>(std::popcount(pa & pb));
  }
  if (na + nb == 0) return 0.0;
  return 1.0 - 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

inline phylo::DistanceMatrix dice_distance_matrix(const std::vector<Genome>& genomes) {
  if (genomes.size() < 2) throw ContractViolation("dice_distance_matrix: need at least 2 genomes");
  phylo::DistanceMatrix D(genomes.size());
  for (std::size_t i = 0; i < genomes.size(); ++i)
    for (std::size_t j = i + 1; j < genomes.size(); ++j) D.set(i, j, dice_distance(genomes[i], genomes[j]));
  return D;
}

inline double mean_pairwise_dice(const std::vector<Genome>& genomes) {
  if (genomes.size() < 2) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < genomes.size(); ++i)
    for (std::size_t j = i + 1; j < genomes.size(); ++j, ++pairs) sum += dice_distance(genomes[i], genomes[j]);
  return sum / static_cast<double>(pairs);
}

/**
 * \brief Two-origin domestication with bottleneck, expansion and admixture.
 *
 * 1. Each of two wild-type populations holds n_w genomes whose chromosomes are
 *    drawn uniformly from that population's founder haplotypes.
 * 2. n_b genomes are drawn with replacement from each wild population.
 * 3. t_b generations at size n_b.
 * 4. One generation expanding to n_d.
 * 5. t_d generations at n_d.
 * 6. The two domesticated populations are pooled and n_d genomes kept.
 * 7. t_h generations of the admixed population at n_d.
 *
 * Two genomes are sampled from each wild population, from each domesticated
 * population just before the merge, and from the final admixed population, in
 * that order (10 genomes with the default options).
 */
inline DomesticationResult simulate_domestication(const DomesticationParams& p, RngStream& rng,
                                                  const DomesticationOptions& opt = {}) {
  if (p.n_w == 0 || p.n_b == 0 || p.n_d == 0) throw ContractViolation("simulate_domestication: empty population");
  if (opt.loci == 0 || opt.founders == 0) throw ContractViolation("simulate_domestication: need loci and founders");

  std::array<std::vector<Chromosome>, 2> founders;
  for (std::size_t w = 0; w < 2; ++w) {
    if (w == 1 && opt.shared_founders) {
      founders[1] = founders[0];
      continue;
    }
    for (std::size_t f = 0; f < opt.founders; ++f) founders[w].push_back(Chromosome::random(opt.loci, rng));
  }

  DomesticationResult result;
  auto take_samples = [&](const Population& pop, Origin origin) {
    for (std::size_t i : detail::sample_without_replacement(pop.size(), opt.samples_per_population, rng)) {
      result.sampled.push_back(pop.genomes[i]);
      result.origin.push_back(origin);
    }
  };

  std::array<Population, 2> domesticated;
  for (std::size_t w = 0; w < 2; ++w) {
    Population wild;
    wild.genomes.resize(p.n_w);
    for (auto& g : wild.genomes)
      for (auto& c : g.chromosomes) c = founders[w][rng.uniform_index(opt.founders)];
    take_samples(wild, w == 0 ? Origin::wild_a : Origin::wild_b);

    Population& pop = domesticated[w];
    pop.genomes.reserve(p.n_b);
    for (std::size_t i = 0; i < p.n_b; ++i) pop.genomes.push_back(wild.genomes[rng.uniform_index(p.n_w)]);
    detail::evolve(pop, p.t_b, p.n_b, p.p_r, rng);
    detail::evolve(pop, 1, p.n_d, p.p_r, rng);
    detail::evolve(pop, p.t_d, p.n_d, p.p_r, rng);
  }
  take_samples(domesticated[0], Origin::domesticated_a);
  take_samples(domesticated[1], Origin::domesticated_b);

  Population admixed;
  {
    std::vector<const Genome*> pool;
    for (const auto& pop : domesticated)
      for (const auto& g : pop.genomes) pool.push_back(&g);
    for (std::size_t i : detail::sample_without_replacement(pool.size(), p.n_d, rng))
      admixed.genomes.push_back(*pool[i]);
  }
  detail::evolve(admixed, p.t_h, p.n_d, p.p_r, rng);
  take_samples(admixed, Origin::admixed);

  std::vector<Genome> diversity_sample;
  for (std::size_t i : detail::sample_without_replacement(admixed.size(), opt.diversity_sample, rng))
    diversity_sample.push_back(admixed.genomes[i]);
  result.diversity = mean_pairwise_dice(diversity_sample);
  return result;
}

/// True when the admixed samples sit alone on one side of some split of `tree`.
inline bool admixed_monophyletic(const phylo::Phylogeny& tree, const std::vector<Origin>& origin) {
  const std::size_t n = origin.size();
  phylo::Split split((n + 63) / 64, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (origin[i] == Origin::admixed) split[i / 64] |= 1ULL << (i % 64);
  phylo::detail::normalize(split, n);
  return phylo::bipartitions(tree).count(split) > 0;
}

/**
 * Erroneous-monophyly outcome over theta = (n_w, n_b, t_b, n_d, t_d, t_h, p_r).
 * Metrics: diversity, degenerate (all sampled distances zero), zero_pairs.
 */
struct MonophylySimulator {
  DomesticationOptions options;

  OutcomeRecord operator()(const ParameterVector& theta, RngStream& rng) const {
    const auto params = DomesticationParams::from_vector(theta);
    const auto sim = simulate_domestication(params, rng, options);
    const auto D = dice_distance_matrix(sim.sampled);
    std::size_t zero_pairs = 0, pairs = 0;
    for (std::size_t i = 0; i < D.size(); ++i)
      for (std::size_t j = i + 1; j < D.size(); ++j, ++pairs) zero_pairs += D(i, j) == 0.0;
    const auto tree = phylo::neighbor_joining(D);

    OutcomeRecord out;
    out.outcome_holds = admixed_monophyletic(tree, sim.origin);
    out.metrics["diversity"] = sim.diversity;
    out.metrics["degenerate"] = zero_pairs == pairs ? 1.0 : 0.0;
    out.metrics["zero_pairs"] = static_cast<double>(zero_pairs);
    return out;
  }
};

inline OutcomeRecord monophyly_outcome(const ParameterVector& theta, RngStream& rng) {
  return MonophylySimulator{}(theta, rng);
}

}  // namespace explore::domestication

#endif
