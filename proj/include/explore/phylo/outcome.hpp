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

#ifndef EXPLORE_PHYLO_OUTCOME_HPP
#define EXPLORE_PHYLO_OUTCOME_HPP

#include <cstddef>

#include "explore/outcome.hpp"
#include "explore/params.hpp"
#include "explore/phylo/nj.hpp"
#include "explore/phylo/simulate.hpp"
#include "explore/phylo/tree.hpp"
#include "explore/phylo/upgma.hpp"
#include "explore/rng.hpp"

namespace explore::phylo {

/// Everything one UPGMA-vs-NJ replicate produces, kept for debug dumps.
struct PhyloRun {
  Phylogeny truth;
  Alignment alignment;
  DistanceMatrix distances;
  Phylogeny nj;
  Phylogeny upgma;
  std::size_t rf_nj = 0;
  std::size_t rf_upgma = 0;
  std::size_t saturated_pairs = 0;
};

/**
 * \brief UPGMA-vs-NJ comparison.
 *
 * theta = (scale, skew). Yule tree -> skew/scale edge transform -> JC sequences
 * -> JC distances -> NJ and UPGMA -> Robinson-Foulds distance to the true
 * tree. The outcome holds when UPGMA is at least as close as NJ.
 */
struct PhyloSimulator {
  std::size_t n_taxa = 30;
  std::size_t sites = 1000;

  [[nodiscard]] PhyloRun run(double scale, double skew, RngStream& rng) const {
    PhyloRun r;
    r.truth = apply_skew_scale(simulate_yule_tree(n_taxa, rng), skew, scale, rng);
    r.alignment = evolve_sequences(r.truth, sites, rng);
    r.distances = jc_distance_matrix(r.alignment, &r.saturated_pairs);
    r.nj = neighbor_joining(r.distances);
    r.upgma = upgma(r.distances);
    r.rf_nj = robinson_foulds(r.nj, r.truth);
    r.rf_upgma = robinson_foulds(r.upgma, r.truth);
    return r;
  }

  OutcomeRecord operator()(const ParameterVector& theta, RngStream& rng) const {
    const PhyloRun r = run(theta[0], theta[1], rng);
    OutcomeRecord out;
    out.outcome_holds = r.rf_upgma <= r.rf_nj;
    out.metrics["rf_nj"] = static_cast<double>(r.rf_nj);
    out.metrics["rf_upgma"] = static_cast<double>(r.rf_upgma);
    out.metrics["saturated"] = r.saturated_pairs > 0 ? 1.0 : 0.0;
    return out;
  }
};

inline OutcomeRecord phylo_outcome(const ParameterVector& theta, RngStream& rng) { return PhyloSimulator{}(theta, rng); }

}  // namespace explore::phylo

#endif
