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

#ifndef EXPLORE_GRIDSEARCH_HPP
#define EXPLORE_GRIDSEARCH_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "explore/errors.hpp"
#include "explore/estimator.hpp"
#include "explore/grid.hpp"
#include "explore/outcome.hpp"
#include "explore/parallel.hpp"
#include "explore/params.hpp"
#include "explore/rng.hpp"

namespace explore {

/// Conventional replicate grid: `counts` intervals per dimension, `replicates` runs per point.
struct GridSpec {
  std::vector<std::size_t> counts;
  bool midpoints = true;
  std::size_t replicates = 100;
  /// Explicit coordinates for some dimensions, overriding counts/midpoints there.
  std::map<std::size_t, std::vector<double>> explicit_axes;

  [[nodiscard]] GridAxes axes(const ParameterSpace& space) const {
    if (replicates == 0) throw ContractViolation("grid spec: replicates must be >= 1");
    GridAxes base = make_axes(space, counts, midpoints);
    auto all = base.axes();
    for (const auto& [k, pts] : explicit_axes) {
      if (k >= all.size()) throw ContractViolation("grid spec: explicit axis index out of range");
      all[k] = pts;
    }
    return GridAxes(std::move(all));
  }
};

/**
 * \brief Estimates P(R|theta) at each grid point by the success proportion of r runs.
 *
 * Replicate j at point i draws from substream ("grid", i * r + j), so the
 * surface is identical for any worker count.
 */
template <OutcomeSimulator S>
LikelihoodSurface grid_estimate(const S& sim, const ParameterSpace& space, const GridSpec& spec,
                                const RngStream& rng, std::size_t workers = 1) {
  const GridAxes grid = spec.axes(space);
  const std::size_t n = grid.size();
  const std::size_t r = spec.replicates;
  std::vector<unsigned char> hits(n * r, 0);
  parallel_for(n * r, workers, [&](std::size_t k) {
    const ParameterVector theta = to_simulator_input(space, grid.point(k / r));
    RngStream sim_rng = rng.substream("grid", k);
    hits[k] = sim(theta, sim_rng).outcome_holds ? 1 : 0;
  });

  LikelihoodSurface s{space, grid, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                      std::nullopt, 0};
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t successes = 0;
    for (std::size_t j = 0; j < r; ++j) successes += hits[i * r + j];
    const double p = static_cast<double>(successes) / static_cast<double>(r);
    s.values[i] = p;
    s.unclipped[i] = p;
    s.std_errors[i] = std::sqrt(p * (1.0 - p) / static_cast<double>(r));
  }
  return s;
}

}  // namespace explore

#endif
